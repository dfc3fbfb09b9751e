// Shared fixtures and brute-force oracles for the unit and acceptance tests.
#ifndef GREENREC_TESTS_SUPPORT_HPP_
#define GREENREC_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "greenrec/ingest.hpp"
#include "greenrec/random.hpp"
#include "greenrec/sampling.hpp"

namespace greenrec::testing {

using Edge = std::pair<std::string, std::string>;  // (user id, item id)

/// Random bipartite interaction set with at most one row per pair.
inline std::vector<Edge> random_edges(Rng& rng, std::size_t users, std::size_t items,
                                      double density) {
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < users; ++u)
        for (std::size_t i = 0; i < items; ++i)
            if (rng.uniform() < density) edges.emplace_back("u" + std::to_string(u), "i" + std::to_string(i));
    return edges;
}

inline Dataset dataset_from_edges(const std::vector<Edge>& edges, Rng* ratings = nullptr) {
    Dataset d("synthetic", Feedback::Explicit);
    for (const auto& [u, i] : edges)
        d.add(u, i, ratings ? static_cast<double>(1 + ratings->below(5)) : 3.0);
    return d;
}

inline std::set<Edge> edge_set(const Dataset& d) {
    std::set<Edge> out;
    for (const auto& r : d.interactions()) out.emplace(d.users().id(r.user), d.items().id(r.item));
    return out;
}

/// Maximal k-core by exhaustion: the union of every node subset in which each
/// member has at least k neighbors inside the subset. Only for <= ~16 nodes.
inline std::set<Edge> brute_force_kcore(const std::vector<Edge>& edges, int k) {
    std::vector<std::string> nodes;
    for (const auto& [u, i] : edges) {
        nodes.push_back("U:" + u);
        nodes.push_back("I:" + i);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    const std::size_t n = nodes.size();
    auto index = [&](const std::string& name) {
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), name) - nodes.begin());
    };
    std::vector<std::pair<std::size_t, std::size_t>> ends;
    for (const auto& [u, i] : edges) ends.emplace_back(index("U:" + u), index("I:" + i));

    std::uint64_t core = 0;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<int> degree(n, 0);
        for (auto [a, b] : ends)
            if ((mask >> a & 1) && (mask >> b & 1)) {
                ++degree[a];
                ++degree[b];
            }
        bool ok = true;
        for (std::size_t v = 0; v < n && ok; ++v)
            if ((mask >> v & 1) && degree[v] < k) ok = false;
        if (ok) core |= mask;
    }
    std::set<Edge> out;
    for (std::size_t e = 0; e < edges.size(); ++e)
        if ((core >> ends[e].first & 1) && (core >> ends[e].second & 1)) out.insert(edges[e]);
    return out;
}

/// nDCG@k oracle: DCG of `ranking` divided by the best DCG over every
/// permutation of `catalog` (found by enumeration, not by sorting gains).
inline double ndcg_by_enumeration(const std::vector<std::uint32_t>& ranking,
                                  const std::set<std::uint32_t>& relevant, std::size_t k,
                                  std::vector<std::uint32_t> catalog) {
    auto dcg = [&](const std::vector<std::uint32_t>& order) {
        double s = 0.0;
        for (std::size_t pos = 0; pos < std::min(k, order.size()); ++pos)
            if (relevant.count(order[pos])) s += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
        return s;
    };
    std::sort(catalog.begin(), catalog.end());
    double best = 0.0;
    do {
        best = std::max(best, dcg(catalog));
    } while (std::next_permutation(catalog.begin(), catalog.end()));
    return dcg(ranking) / best;
}

struct NdcgSweep {
    double max_error = 0.0;
    std::size_t cases = 0;
    bool in_range = true;       // every value in [0, 1]
    bool perfect_iff_one = true;
};

/// ndcg_at_k against the enumeration oracle on every ranking of every
/// catalog of 1..max_catalog items, every relevant set of 1..3 items and
/// every k in 1..n+1. `ndcg` is the function under test.
template <class Ndcg>
NdcgSweep ndcg_sweep(Ndcg ndcg, std::size_t max_catalog = 7) {
    NdcgSweep out;
    for (std::size_t n = 1; n <= max_catalog; ++n) {
        std::vector<std::uint32_t> catalog(n);
        for (std::size_t i = 0; i < n; ++i) catalog[i] = static_cast<std::uint32_t>(i);
        for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
            if (std::popcount(mask) > 3) continue;
            std::set<std::uint32_t> relevant;
            for (std::uint32_t i = 0; i < n; ++i)
                if (mask >> i & 1u) relevant.insert(i);
            const std::vector<std::uint32_t> rel_list(relevant.begin(), relevant.end());
            for (std::size_t k = 1; k <= n + 1; ++k) {
                auto dcg = [&](const std::vector<std::uint32_t>& order) {
                    double s = 0.0;
                    for (std::size_t pos = 0; pos < std::min(k, order.size()); ++pos)
                        if (relevant.count(order[pos])) s += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
                    return s;
                };
                double best = 0.0;
                auto perm = catalog;
                do best = std::max(best, dcg(perm));
                while (std::next_permutation(perm.begin(), perm.end()));
                perm = catalog;
                do {
                    const double expected = dcg(perm) / best;
                    const double got = ndcg(perm, rel_list, k);
                    out.max_error = std::max(out.max_error, std::abs(got - expected));
                    if (!(got >= 0.0 && got <= 1.0)) out.in_range = false;
                    bool top_all_relevant = true;
                    for (std::size_t pos = 0; pos < std::min(k, rel_list.size()); ++pos)
                        top_all_relevant = top_all_relevant && relevant.count(perm[pos]);
                    if ((got == 1.0) != top_all_relevant) out.perfect_iff_one = false;
                    ++out.cases;
                } while (std::next_permutation(perm.begin(), perm.end()));
            }
        }
    }
    return out;
}

/// Explicit dataset in which every user has at least `min_per_user` distinct
/// items.
inline Dataset random_rating_dataset(Rng& rng, std::size_t users, std::size_t items,
                                     std::size_t min_per_user, std::size_t max_per_user) {
    Dataset d("synthetic", Feedback::Explicit);
    std::vector<std::size_t> catalog(items);
    for (std::size_t i = 0; i < items; ++i) catalog[i] = i;
    for (std::size_t u = 0; u < users; ++u) {
        const std::size_t n = min_per_user + rng.below(max_per_user - min_per_user + 1);
        rng.shuffle(std::span<std::size_t>(catalog));
        for (std::size_t k = 0; k < std::min(n, items); ++k)
            d.add("u" + std::to_string(u), "i" + std::to_string(catalog[k]),
                  static_cast<double>(1 + rng.below(5)), static_cast<std::int64_t>(k));
    }
    return d;
}


/// Every split invariant that must hold for `bundles` (portions ascending);
/// returns a description of the first violation, or an empty string.
inline std::string split_violations(const Dataset& d, const SplitConfig& cfg,
                                    const DownsamplePlan& plan,
                                    const std::vector<SplitBundle>& bundles) {
    const auto& rows = d.interactions();
    const std::size_t n = rows.size();
    if (bundles.size() != plan.portions.size()) return "wrong number of bundles";
    const std::size_t V = static_cast<std::size_t>(std::llround(cfg.val_frac * static_cast<double>(n)));
    const std::size_t T = static_cast<std::size_t>(std::llround(cfg.test_frac * static_cast<double>(n)));
    std::vector<UserIndex> previous_users;
    for (std::size_t b = 0; b < bundles.size(); ++b) {
        const auto& bundle = bundles[b];
        const std::string where = " (portion " + std::to_string(bundle.portion) + ")";
        std::vector<int> owner(n, -1);
        auto claim = [&](const std::vector<std::uint32_t>& ids, int part) -> std::string {
            for (auto id : ids) {
                if (id >= n) return "id out of range" + where;
                if (owner[id] != -1) return "overlapping parts" + where;
                owner[id] = part;
            }
            return {};
        };
        for (auto msg : {claim(bundle.train, 0), claim(*bundle.val, 1), claim(*bundle.test, 2)})
            if (!msg.empty()) return msg;
        std::set<UserIndex> train_users, holdout_users;
        for (auto id : bundle.train) train_users.insert(rows[id].user);
        for (auto id : *bundle.val) holdout_users.insert(rows[id].user);
        for (auto id : *bundle.test) holdout_users.insert(rows[id].user);
        for (auto u : holdout_users)
            if (!train_users.count(u)) return "val/test user missing from train" + where;
        if (plan.method == DownsampleMethod::UserBased) {
            if (*bundle.val != *bundles[0].val || *bundle.test != *bundles[0].test)
                return "val/test differ across portions" + where;
            if (train_users.size() != d.n_users()) return "user dropped from train" + where;
        } else {
            if (bundle.val->size() != V) return "val size != V" + where;
            if (bundle.test->size() != T) return "test size != T" + where;
            std::set<UserIndex> included(bundle.users_included.begin(), bundle.users_included.end());
            for (auto u : train_users)
                if (!included.count(u)) return "train user outside the selected users" + where;
            if (!std::includes(bundle.users_included.begin(), bundle.users_included.end(),
                               previous_users.begin(), previous_users.end()))
                return "user sets not nested" + where;
            previous_users = bundle.users_included;
        }
    }
    auto again = make_splits(d, cfg, plan);
    for (std::size_t b = 0; b < bundles.size(); ++b)
        if (again[b].train != bundles[b].train || *again[b].val != *bundles[b].val ||
            *again[b].test != *bundles[b].test || again[b].users_included != bundles[b].users_included)
            return "rerun with the same seeds differs";
    return {};
}

}  // namespace greenrec::testing

#endif  // GREENREC_TESTS_SUPPORT_HPP_
