#ifndef GREENREC_EVALUATION_HPP_
#define GREENREC_EVALUATION_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "greenrec/algorithms.hpp"
#include "greenrec/sampling.hpp"

namespace greenrec {

/// Binary-relevance nDCG@k. `relevant` may be in any order and must be
/// non-empty.
double ndcg_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant,
                 std::size_t k);

inline double ndcg_at_k(const RankedList& ranked, std::span<const ItemIndex> relevant,
                        std::size_t k) {
    return ndcg_at_k(ranked.items, relevant, k);
}

struct EvalOptions {
    std::size_t k = 10;
    /// Also drop the bundle's validation items from the candidates when
    /// scoring the test set. Off by default: only training items are removed.
    bool exclude_validation = false;
};

struct BundleScore {
    double ndcg = 0.0;
    std::size_t n_eval_users = 0;
};

/// Mean per-user nDCG@k over users with at least one interaction in
/// `holdout`. Candidates are the catalog minus the user's training items and
/// minus any items in `also_exclude`.
BundleScore evaluate_holdout(const TrainedModel& model, const Dataset& d,
                             std::span<const std::uint32_t> holdout,
                             std::span<const std::uint32_t> also_exclude, std::size_t k);

/// Test-set evaluation of a model trained on bundle.train.
BundleScore evaluate_bundle(const TrainedModel& model, const Dataset& d,
                            const SplitBundle& bundle, const EvalOptions& opt = {});

/// Validation-set evaluation used for hyperparameter selection.
BundleScore evaluate_validation(const TrainedModel& model, const Dataset& d,
                                const SplitBundle& bundle, std::size_t k = 10);

/// Outcome of one experiment cell.
struct MetricRecord {
    std::string dataset;
    AlgorithmKind algorithm = AlgorithmKind::Popularity;
    DownsampleMethod method = DownsampleMethod::UserBased;
    double portion = 1.0;
    std::uint64_t seed = 0;
    std::string hyperparams;  // canonical "name=value;..." of the selected combination
    double ndcg_at_10 = 0.0;
    double runtime_s = 0.0;   // train + test evaluation wall clock
    std::size_t n_eval_users = 0;
};

/// Canonical text for a hyperparameter combination.
std::string format_hyperparams(const Hyperparams& h);
Hyperparams parse_hyperparams(std::string_view text);

/// Seed-mean score at each portion as a percentage of the seed-mean score at
/// portion 1.0. `records` must all share one (dataset, algorithm, method).
/// Throws ConfigError when the baseline is missing or not positive.
std::map<double, double> relative_performance(std::span<const MetricRecord> records);

/// Min-max rescaling to [0, 1]; all-equal input maps to 0.5.
template <class Key>
std::map<Key, double> normalize_scores(const std::map<Key, double>& values) {
    std::map<Key, double> out;
    if (values.empty()) return out;
    double lo = values.begin()->second, hi = lo;
    for (const auto& [k, v] : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (const auto& [k, v] : values) out[k] = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return out;
}

/// Seed means per (algorithm, portion) for one dataset and method.
std::map<std::pair<AlgorithmKind, double>, double> seed_means(
    std::span<const MetricRecord> records, const std::string& dataset, DownsampleMethod method);

enum class Grouping { ByAlgorithmGroup, ByDatasetGroup };

/// "Group 1" (UserKNN, ItemKNN, SVD, NMF) or "Group 2" (FunkSVD, Bias,
/// Popularity, BiasedMF); empty for Random.
std::string algorithm_group(AlgorithmKind kind);

/// MovieLens, Amazon or Gowalla by case-insensitive name match; otherwise the
/// name itself.
std::string dataset_group(const std::string& dataset_name);

struct RelativeCell {
    std::string dataset;
    AlgorithmKind algorithm;
    DownsampleMethod method;
    double portion;
    double percent;
};

/// Relative performance for every (dataset, algorithm, method) in `records`.
/// Combinations with an undefined baseline are skipped and listed in
/// `undefined` when non-null.
std::vector<RelativeCell> relative_table(std::span<const MetricRecord> records,
                                         std::vector<std::string>* undefined = nullptr);

struct GroupRow {
    DownsampleMethod method;
    std::string group;
    double portion;
    double mean;
    double spread;  // population standard deviation across members
    std::size_t members;
};

struct GroupTable {
    std::vector<GroupRow> rows;
    std::vector<std::string> warnings;
};

/// Per (method, group, portion): members are algorithms (averaged over
/// datasets) or datasets (averaged over algorithms); reports their mean and
/// spread. Random is never a member.
GroupTable aggregate_groups(std::span<const RelativeCell> cells, Grouping grouping);

}  // namespace greenrec

#endif  // GREENREC_EVALUATION_HPP_
