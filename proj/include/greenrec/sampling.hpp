#ifndef GREENREC_SAMPLING_HPP_
#define GREENREC_SAMPLING_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "greenrec/ingest.hpp"

namespace greenrec {

struct SplitConfig {
    double train_frac = 0.8;
    double val_frac = 0.1;
    double test_frac = 0.1;
    std::uint64_t seed = 42;

    void validate() const;
};

enum class DownsampleMethod { UserBased, UserSubset };

std::string to_string(DownsampleMethod m);
DownsampleMethod method_from_string(std::string_view s);

struct DownsamplePlan {
    DownsampleMethod method = DownsampleMethod::UserBased;
    std::vector<double> portions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::uint64_t seed = 42;

    void validate() const;
};

/// Interaction ids are positions in the source Dataset's interaction list.
using InteractionIds = std::vector<std::uint32_t>;

/// Train/validation/test partition for one portion. All id lists are sorted
/// ascending. Validation and test lists may be shared between bundles.
struct SplitBundle {
    double portion = 1.0;
    InteractionIds train;
    std::shared_ptr<const InteractionIds> val;
    std::shared_ptr<const InteractionIds> test;
    std::vector<UserIndex> users_included;  // sorted
};

/// Per-user random holdout followed by per-user training downsampling.
std::vector<SplitBundle> split_user_based(const Dataset& d, const SplitConfig& cfg,
                                          const DownsamplePlan& plan);

/// Growing random user subsets with globally fixed validation/test sizes.
std::vector<SplitBundle> split_user_subset(const Dataset& d, const SplitConfig& cfg,
                                           const DownsamplePlan& plan);

struct TrainTestRatio {
    double train_frac;
    double test_frac;
};

/// All users in every bundle; one bundle per ratio with
/// val_frac = 1 - train_frac - test_frac. A bundle's `portion` is its
/// train_frac.
std::vector<SplitBundle> split_fixed_users_varying_ratio(
    const Dataset& d, const std::vector<TrainTestRatio>& ratios, std::uint64_t seed);

/// Dispatches on plan.method.
std::vector<SplitBundle> make_splits(const Dataset& d, const SplitConfig& cfg,
                                     const DownsamplePlan& plan);

/// Largest-remainder apportionment: integer counts summing to `total`, each
/// within [lo[i], hi[i]] and as close to `weights[i] * total / sum(weights)`
/// as the bounds allow. Remainder ties go to the lower index. Throws
/// ConfigError when the bounds make `total` unreachable.
std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total,
                                   const std::vector<std::size_t>& lo,
                                   const std::vector<std::size_t>& hi);

}  // namespace greenrec

#endif  // GREENREC_SAMPLING_HPP_
