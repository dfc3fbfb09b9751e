#include "greenrec/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <set>
#include <tuple>

namespace greenrec {

double ndcg_at_k(std::span<const ItemIndex> ranked, std::span<const ItemIndex> relevant,
                 std::size_t k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (relevant.empty()) throw ConfigError("nDCG needs at least one relevant item");
    std::vector<ItemIndex> rel(relevant.begin(), relevant.end());
    std::sort(rel.begin(), rel.end());
    rel.erase(std::unique(rel.begin(), rel.end()), rel.end());

    double dcg = 0.0;
    const std::size_t depth = std::min(k, ranked.size());
    for (std::size_t pos = 0; pos < depth; ++pos)
        if (std::binary_search(rel.begin(), rel.end(), ranked[pos]))
            dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    double idcg = 0.0;
    const std::size_t ideal = std::min(k, rel.size());
    for (std::size_t pos = 0; pos < ideal; ++pos)
        idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    return dcg / idcg;
}

BundleScore evaluate_holdout(const TrainedModel& model, const Dataset& d,
                             std::span<const std::uint32_t> holdout,
                             std::span<const std::uint32_t> also_exclude, std::size_t k) {
    const auto& rows = d.interactions();
    std::vector<std::vector<ItemIndex>> relevant(d.n_users());
    for (auto id : holdout) relevant[rows.at(id).user].push_back(rows[id].item);
    std::vector<std::vector<ItemIndex>> extra(d.n_users());
    for (auto id : also_exclude) extra[rows.at(id).user].push_back(rows[id].item);

    std::vector<double> scores(model.n_items());
    std::vector<ItemIndex> exclude;
    double total = 0.0;
    std::size_t users = 0;
    for (UserIndex u = 0; u < d.n_users(); ++u) {
        if (relevant[u].empty()) continue;
        auto seen = model.train_items(u);
        exclude.assign(seen.begin(), seen.end());
        exclude.insert(exclude.end(), extra[u].begin(), extra[u].end());
        std::sort(exclude.begin(), exclude.end());
        model.score_all(u, scores);
        auto ranked = top_k_from_scores(scores, k, exclude);
        total += ndcg_at_k(ranked, relevant[u], k);
        ++users;
    }
    if (users == 0) return {0.0, 0};
    return {total / static_cast<double>(users), users};
}

BundleScore evaluate_bundle(const TrainedModel& model, const Dataset& d,
                            const SplitBundle& bundle, const EvalOptions& opt) {
    if (!bundle.test) throw ConfigError("bundle has no test set");
    std::span<const std::uint32_t> extra;
    if (opt.exclude_validation && bundle.val) extra = *bundle.val;
    auto score = evaluate_holdout(model, d, *bundle.test, extra, opt.k);
    if (score.n_eval_users == 0)
        throw ConfigError("bundle at portion " + std::to_string(bundle.portion) +
                          " has no users with test interactions");
    return score;
}

BundleScore evaluate_validation(const TrainedModel& model, const Dataset& d,
                                const SplitBundle& bundle, std::size_t k) {
    if (!bundle.val) throw ConfigError("bundle has no validation set");
    auto score = evaluate_holdout(model, d, *bundle.val, {}, k);
    if (score.n_eval_users == 0)
        throw ConfigError("bundle at portion " + std::to_string(bundle.portion) +
                          " has no users with validation interactions");
    return score;
}

std::string format_hyperparams(const Hyperparams& h) {
    std::string out;
    char buf[64];
    for (const auto& [name, value] : h) {
        if (!out.empty()) out += ';';
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
        out += name + "=" + std::string(buf, p);
    }
    return out.empty() ? "-" : out;
}

Hyperparams parse_hyperparams(std::string_view text) {
    Hyperparams h;
    if (text.empty() || text == "-") return h;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find(';', pos);
        if (end == std::string_view::npos) end = text.size();
        auto part = text.substr(pos, end - pos);
        pos = end + 1;
        auto eq = part.find('=');
        if (eq == std::string_view::npos) throw ConfigError("bad hyperparameter text");
        double v = 0;
        auto val = part.substr(eq + 1);
        auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
        if (ec != std::errc()) throw ConfigError("bad hyperparameter value");
        h[std::string(part.substr(0, eq))] = v;
    }
    return h;
}

std::map<double, double> relative_performance(std::span<const MetricRecord> records) {
    std::map<double, std::pair<double, std::size_t>> sums;
    for (const auto& r : records) {
        if (!records.empty() &&
            (r.dataset != records[0].dataset || r.algorithm != records[0].algorithm ||
             r.method != records[0].method))
            throw ConfigError("relative_performance expects one dataset/algorithm/method");
        auto& s = sums[r.portion];
        s.first += r.ndcg_at_10;
        ++s.second;
    }
    auto base = sums.find(1.0);
    if (base == sums.end()) throw ConfigError("no baseline record at portion 1.0");
    const double baseline = base->second.first / static_cast<double>(base->second.second);
    if (!(baseline > 0)) throw ConfigError("baseline score is zero; relative performance undefined");
    std::map<double, double> out;
    for (const auto& [p, s] : sums)
        out[p] = p == 1.0 ? 100.0
                          : 100.0 * (s.first / static_cast<double>(s.second)) / baseline;
    return out;
}

std::map<std::pair<AlgorithmKind, double>, double> seed_means(
    std::span<const MetricRecord> records, const std::string& dataset, DownsampleMethod method) {
    std::map<std::pair<AlgorithmKind, double>, std::pair<double, std::size_t>> sums;
    for (const auto& r : records) {
        if (r.dataset != dataset || r.method != method) continue;
        auto& s = sums[{r.algorithm, r.portion}];
        s.first += r.ndcg_at_10;
        ++s.second;
    }
    std::map<std::pair<AlgorithmKind, double>, double> out;
    for (const auto& [key, s] : sums) out[key] = s.first / static_cast<double>(s.second);
    return out;
}

std::string algorithm_group(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::UserKNN:
        case AlgorithmKind::ItemKNN:
        case AlgorithmKind::SVD:
        case AlgorithmKind::NMF: return "Group 1";
        case AlgorithmKind::FunkSVD:
        case AlgorithmKind::Bias:
        case AlgorithmKind::Popularity:
        case AlgorithmKind::BiasedMF: return "Group 2";
        default: return {};
    }
}

std::string dataset_group(const std::string& dataset_name) {
    std::string lower;
    for (char c : dataset_name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower.find("movielens") != std::string::npos || lower.rfind("ml", 0) == 0)
        return "MovieLens";
    if (lower.find("amazon") != std::string::npos) return "Amazon";
    if (lower.find("gowalla") != std::string::npos) return "Gowalla";
    return dataset_name;
}

std::vector<RelativeCell> relative_table(std::span<const MetricRecord> records,
                                         std::vector<std::string>* undefined) {
    std::map<std::tuple<std::string, AlgorithmKind, DownsampleMethod>, std::vector<MetricRecord>>
        groups;
    for (const auto& r : records) groups[{r.dataset, r.algorithm, r.method}].push_back(r);
    std::vector<RelativeCell> out;
    for (const auto& [key, recs] : groups) {
        const auto& [dataset, algorithm, method] = key;
        std::map<double, double> rel;
        try {
            rel = relative_performance(recs);
        } catch (const ConfigError& e) {
            if (undefined)
                undefined->push_back(dataset + "/" + to_string(algorithm) + "/" +
                                     to_string(method) + ": " + e.what());
            continue;
        }
        for (const auto& [p, pct] : rel) out.push_back({dataset, algorithm, method, p, pct});
    }
    return out;
}

GroupTable aggregate_groups(std::span<const RelativeCell> cells, Grouping grouping) {
    // (method, group, portion) -> member -> (sum, count)
    using Key = std::tuple<DownsampleMethod, std::string, double>;
    std::map<Key, std::map<std::string, std::pair<double, std::size_t>>> acc;
    std::set<std::string> seen_groups;
    for (const auto& c : cells) {
        if (c.algorithm == AlgorithmKind::Random) continue;
        std::string group, member;
        if (grouping == Grouping::ByAlgorithmGroup) {
            group = algorithm_group(c.algorithm);
            member = to_string(c.algorithm);
        } else {
            group = dataset_group(c.dataset);
            member = c.dataset;
        }
        if (group.empty()) continue;
        seen_groups.insert(group);
        auto& m = acc[{c.method, group, c.portion}][member];
        m.first += c.percent;
        ++m.second;
    }

    GroupTable table;
    const std::vector<std::string> expected =
        grouping == Grouping::ByAlgorithmGroup
            ? std::vector<std::string>{"Group 1", "Group 2"}
            : std::vector<std::string>{"MovieLens", "Amazon", "Gowalla"};
    for (const auto& g : expected)
        if (!seen_groups.count(g)) table.warnings.push_back("group '" + g + "' has no members; omitted");

    for (const auto& [key, members] : acc) {
        const auto& [method, group, portion] = key;
        std::vector<double> values;
        for (const auto& [name, s] : members) values.push_back(s.first / static_cast<double>(s.second));
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size());
        table.rows.push_back({method, group, portion, mean, std::sqrt(var), values.size()});
    }
    return table;
}

}  // namespace greenrec
