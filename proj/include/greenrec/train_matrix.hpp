#ifndef GREENREC_TRAIN_MATRIX_HPP_
#define GREENREC_TRAIN_MATRIX_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "greenrec/ingest.hpp"

namespace greenrec {

struct Triple {
    UserIndex user;
    ItemIndex item;
    double value;
};

/// Sparse user x item training matrix kept in both row (by user) and column
/// (by item) compressed form. Values are ratings for explicit data and 1.0
/// for implicit data. The catalog is every item of the source dataset, so
/// items with no training interaction are still scorable.
class TrainMatrix {
public:
    TrainMatrix() = default;

    /// Rows of `d` selected by `ids`. Repeated (user, item) pairs keep the last
    /// value.
    static TrainMatrix build(const Dataset& d, std::span<const std::uint32_t> ids);
    static TrainMatrix from_triples(std::size_t n_users, std::size_t n_items,
                                    Feedback feedback, std::vector<Triple> triples);

    std::size_t n_users() const { return n_users_; }
    std::size_t n_items() const { return n_items_; }
    std::size_t nnz() const { return row_items_.size(); }
    Feedback feedback() const { return feedback_; }
    bool explicit_ratings() const { return feedback_ == Feedback::Explicit; }

    std::span<const ItemIndex> user_items(UserIndex u) const {
        return {row_items_.data() + row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]};
    }
    std::span<const double> user_values(UserIndex u) const {
        return {row_values_.data() + row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]};
    }
    std::span<const UserIndex> item_users(ItemIndex i) const {
        return {col_users_.data() + col_ptr_[i], col_ptr_[i + 1] - col_ptr_[i]};
    }
    std::span<const double> item_values(ItemIndex i) const {
        return {col_values_.data() + col_ptr_[i], col_ptr_[i + 1] - col_ptr_[i]};
    }
    std::size_t user_count(UserIndex u) const { return row_ptr_[u + 1] - row_ptr_[u]; }
    std::size_t item_count(ItemIndex i) const { return col_ptr_[i + 1] - col_ptr_[i]; }

    /// Mean of all stored values.
    double global_mean() const;

    /// All entries in row-major order.
    std::vector<Triple> triples() const;

private:
    std::size_t n_users_ = 0;
    std::size_t n_items_ = 0;
    Feedback feedback_ = Feedback::Explicit;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<ItemIndex> row_items_;
    std::vector<double> row_values_;
    std::vector<std::size_t> col_ptr_{0};
    std::vector<UserIndex> col_users_;
    std::vector<double> col_values_;
};

}  // namespace greenrec

#endif  // GREENREC_TRAIN_MATRIX_HPP_
