#include "greenrec/preprocess.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

namespace greenrec {

namespace {

std::uint64_t pair_key(UserIndex u, ItemIndex i) {
    return (static_cast<std::uint64_t>(u) << 32) | i;
}

}  // namespace

std::pair<Dataset, std::size_t> dedup_exact(const Dataset& d) {
    std::set<std::tuple<UserIndex, ItemIndex, double, bool>> seen;
    std::vector<Interaction> kept;
    kept.reserve(d.size());
    for (const auto& r : d.interactions()) {
        auto key = std::make_tuple(r.user, r.item, r.rating.value_or(0.0),
                                   r.rating.has_value());
        if (seen.insert(key).second) kept.push_back(r);
    }
    std::size_t removed = d.size() - kept.size();
    if (removed == 0) return {d, 0};
    return {Dataset::from_subset(d, kept), removed};
}

std::pair<Dataset, std::size_t> average_duplicate_pairs(const Dataset& d) {
    if (d.feedback() == Feedback::Implicit) return {d, 0};

    struct Acc {
        std::size_t first_row;
        double sum = 0.0;
        std::size_t count = 0;
        std::optional<std::int64_t> latest;
    };
    std::unordered_map<std::uint64_t, Acc> groups;
    groups.reserve(d.size());
    const auto& rows = d.interactions();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        auto [it, inserted] = groups.try_emplace(pair_key(r.user, r.item), Acc{i});
        auto& acc = it->second;
        acc.sum += r.rating.value_or(0.0);
        ++acc.count;
        if (r.timestamp && (!acc.latest || *r.timestamp > *acc.latest))
            acc.latest = r.timestamp;
    }
    if (groups.size() == rows.size()) return {d, 0};

    std::size_t merged = 0;
    std::vector<Interaction> kept;
    kept.reserve(groups.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& acc = groups.at(pair_key(rows[i].user, rows[i].item));
        if (acc.first_row != i) continue;
        Interaction r = rows[i];
        if (acc.count > 1) {
            ++merged;
            r.rating = acc.sum / static_cast<double>(acc.count);
            r.timestamp = acc.latest;
        }
        kept.push_back(r);
    }
    return {Dataset::from_subset(d, kept), merged};
}

std::pair<Dataset, std::size_t> kcore_prune(const Dataset& d, PruneConfig cfg) {
    if (cfg.k < 1) throw ConfigError("k-core threshold must be >= 1");
    const auto k = static_cast<std::size_t>(cfg.k);
    const auto& rows = d.interactions();
    std::vector<bool> alive(rows.size(), true);
    std::size_t rounds = 0;
    while (true) {
        ++rounds;
        std::vector<std::size_t> user_deg(d.n_users(), 0), item_deg(d.n_items(), 0);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!alive[i]) continue;
            ++user_deg[rows[i].user];
            ++item_deg[rows[i].item];
        }
        bool changed = false;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!alive[i]) continue;
            if (user_deg[rows[i].user] < k || item_deg[rows[i].item] < k) {
                alive[i] = false;
                changed = true;
            }
        }
        if (!changed) break;
    }
    std::vector<Interaction> kept;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (alive[i]) kept.push_back(rows[i]);
    if (kept.size() == rows.size()) return {d, rounds};
    return {Dataset::from_subset(d, kept), rounds};
}

std::pair<Dataset, PreprocessReport> preprocess(const Dataset& d, PruneConfig cfg) {
    PreprocessReport report;
    report.before = compute_stats(d);
    auto [deduped, removed] = dedup_exact(d);
    auto [averaged, merged] = average_duplicate_pairs(deduped);
    auto [pruned, rounds] = kcore_prune(averaged, cfg);
    report.duplicates_removed = removed;
    report.pairs_averaged = merged;
    report.kcore_rounds = rounds;
    report.after = compute_stats(pruned);
    return {std::move(pruned), report};
}

}  // namespace greenrec
