#include "greenrec/train_matrix.hpp"

#include <algorithm>

namespace greenrec {

TrainMatrix TrainMatrix::build(const Dataset& d, std::span<const std::uint32_t> ids) {
    std::vector<Triple> triples;
    triples.reserve(ids.size());
    const auto& rows = d.interactions();
    for (auto id : ids) {
        const auto& r = rows.at(id);
        triples.push_back({r.user, r.item, r.rating.value_or(1.0)});
    }
    return from_triples(d.n_users(), d.n_items(), d.feedback(), std::move(triples));
}

TrainMatrix TrainMatrix::from_triples(std::size_t n_users, std::size_t n_items,
                                      Feedback feedback, std::vector<Triple> triples) {
    for (const auto& t : triples)
        if (t.user >= n_users || t.item >= n_items)
            throw ConfigError("training triple outside the user/item universe");
    // Stable sort keeps input order among duplicates so the last one wins.
    std::stable_sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
        return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    std::vector<Triple> unique;
    unique.reserve(triples.size());
    for (const auto& t : triples) {
        if (!unique.empty() && unique.back().user == t.user && unique.back().item == t.item)
            unique.back() = t;
        else
            unique.push_back(t);
    }

    TrainMatrix m;
    m.n_users_ = n_users;
    m.n_items_ = n_items;
    m.feedback_ = feedback;
    m.row_ptr_.assign(n_users + 1, 0);
    m.col_ptr_.assign(n_items + 1, 0);
    for (const auto& t : unique) {
        ++m.row_ptr_[t.user + 1];
        ++m.col_ptr_[t.item + 1];
    }
    for (std::size_t u = 0; u < n_users; ++u) m.row_ptr_[u + 1] += m.row_ptr_[u];
    for (std::size_t i = 0; i < n_items; ++i) m.col_ptr_[i + 1] += m.col_ptr_[i];

    m.row_items_.resize(unique.size());
    m.row_values_.resize(unique.size());
    m.col_users_.resize(unique.size());
    m.col_values_.resize(unique.size());
    auto col_fill = m.col_ptr_;
    for (std::size_t k = 0; k < unique.size(); ++k) {
        const auto& t = unique[k];
        const double v = feedback == Feedback::Explicit ? t.value : 1.0;
        m.row_items_[k] = t.item;
        m.row_values_[k] = v;
        auto slot = col_fill[t.item]++;
        m.col_users_[slot] = t.user;
        m.col_values_[slot] = v;
    }
    return m;
}

double TrainMatrix::global_mean() const {
    if (row_values_.empty()) return 0.0;
    double sum = 0.0;
    for (double v : row_values_) sum += v;
    return sum / static_cast<double>(row_values_.size());
}

std::vector<Triple> TrainMatrix::triples() const {
    std::vector<Triple> out;
    out.reserve(nnz());
    for (UserIndex u = 0; u < n_users_; ++u) {
        auto items = user_items(u);
        auto values = user_values(u);
        for (std::size_t k = 0; k < items.size(); ++k) out.push_back({u, items[k], values[k]});
    }
    return out;
}

}  // namespace greenrec
