#ifndef GREENREC_ALGORITHMS_HPP_
#define GREENREC_ALGORITHMS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "greenrec/train_matrix.hpp"

namespace greenrec {

enum class AlgorithmKind {
    Random,
    Popularity,
    Bias,
    UserKNN,
    ItemKNN,
    FunkSVD,
    BiasedMF,
    SVD,
    NMF,
};

std::string to_string(AlgorithmKind kind);
AlgorithmKind algorithm_from_string(std::string_view name);
const std::vector<AlgorithmKind>& all_algorithms();

/// Kinds that need explicit ratings to train.
bool requires_explicit(AlgorithmKind kind);

/// Thrown when an algorithm cannot run on the given feedback type.
class UnsupportedCombination : public Error {
public:
    using Error::Error;
};

using Hyperparams = std::map<std::string, double>;

struct HyperparamInfo {
    std::string name;
    double default_value;
    std::string description;
};

/// Declared hyperparameters per kind; anything else is rejected.
const std::vector<HyperparamInfo>& hyperparam_schema(AlgorithmKind kind);

/// Default tuning grid per kind. Kinds without tunables return an empty map.
std::map<std::string, std::vector<double>> default_grid(AlgorithmKind kind);

/// Cartesian product of a grid, in lexicographic order of names with values
/// in listed order. An empty grid yields one empty combination.
std::vector<Hyperparams> expand_grid(const std::map<std::string, std::vector<double>>& grid);

struct RecommenderSpec {
    AlgorithmKind kind = AlgorithmKind::Popularity;
    Hyperparams hyperparams;
    std::uint64_t seed = 0;

    /// Value for `name`, falling back to the schema default.
    double param(const std::string& name) const;
    void validate() const;
};

/// Read-only trained recommender. Scoring is reentrant.
class TrainedModel {
public:
    virtual ~TrainedModel() = default;

    virtual AlgorithmKind kind() const = 0;

    std::size_t n_users() const { return n_users_; }
    std::size_t n_items() const { return n_items_; }

    /// True when the user had at least one training interaction.
    bool knows_user(UserIndex u) const;

    /// Items the user interacted with in training, ascending.
    std::span<const ItemIndex> train_items(UserIndex u) const;
    std::span<const double> train_values(UserIndex u) const;

    double score(UserIndex u, ItemIndex i) const;

    /// Scores every catalog item for `u`; `out.size()` must equal n_items().
    void score_all(UserIndex u, std::span<double> out) const;

    void save(std::ostream& out) const;
    static std::unique_ptr<TrainedModel> load(std::istream& in);

protected:
    TrainedModel() = default;
    void init_base(const TrainMatrix& train);

    virtual void score_known(UserIndex u, std::span<double> out) const = 0;
    /// Default fallback ranks by training popularity.
    virtual void score_unknown(std::span<double> out) const;

    virtual void save_state(std::ostream& out) const = 0;
    virtual void load_state(std::istream& in) = 0;

    std::vector<double> item_counts_;

private:
    std::size_t n_users_ = 0;
    std::size_t n_items_ = 0;
    std::vector<std::size_t> seen_ptr_{0};
    std::vector<ItemIndex> seen_items_;
    std::vector<double> seen_values_;
};

/// Trains `spec` on `train`. The catalog is every item of `train`.
std::unique_ptr<TrainedModel> train(const RecommenderSpec& spec, const TrainMatrix& train);

struct RankedList {
    UserIndex user = 0;
    std::vector<ItemIndex> items;
};

/// Top-k catalog items not in `exclude`, best first, ties to the lower item
/// index. `exclude` must be sorted ascending.
RankedList recommend_top_k(const TrainedModel& model, UserIndex user, std::size_t k,
                           std::span<const ItemIndex> exclude);

/// Same as above, ranking a precomputed score vector.
std::vector<ItemIndex> top_k_from_scores(std::span<const double> scores, std::size_t k,
                                         std::span<const ItemIndex> exclude);

}  // namespace greenrec

#endif  // GREENREC_ALGORITHMS_HPP_
