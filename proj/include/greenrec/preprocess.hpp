#ifndef GREENREC_PREPROCESS_HPP_
#define GREENREC_PREPROCESS_HPP_

#include <cstddef>
#include <utility>

#include "greenrec/ingest.hpp"

namespace greenrec {

struct PruneConfig {
    int k = 10;
};

struct PreprocessReport {
    std::size_t duplicates_removed = 0;
    std::size_t pairs_averaged = 0;
    std::size_t kcore_rounds = 0;
    DatasetStats before;
    DatasetStats after;
};

/// Drops repeated (user, item, rating) rows; the first occurrence wins.
/// Returns the cleaned dataset and the number of rows removed.
std::pair<Dataset, std::size_t> dedup_exact(const Dataset& d);

/// Collapses each (user, item) pair to one row carrying the mean rating and
/// the latest timestamp. Returns the number of pairs that were merged.
/// Implicit datasets pass through unchanged.
std::pair<Dataset, std::size_t> average_duplicate_pairs(const Dataset& d);

/// Maximal k-core of the user-item bipartite graph by simultaneous peeling.
/// `rounds` counts peeling passes including the final pass that finds no
/// violators.
std::pair<Dataset, std::size_t> kcore_prune(const Dataset& d, PruneConfig cfg);

/// dedup_exact, then average_duplicate_pairs, then kcore_prune.
std::pair<Dataset, PreprocessReport> preprocess(const Dataset& d, PruneConfig cfg);

}  // namespace greenrec

#endif  // GREENREC_PREPROCESS_HPP_
