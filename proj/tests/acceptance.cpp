// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance <path to ml-100k u.data> [directory to keep result stores in]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "greenrec/evaluation.hpp"
#include "greenrec/preprocess.hpp"
#include "greenrec/runner.hpp"
#include "greenrec/sustainability.hpp"
#include "numerics.hpp"
#include "support.hpp"
#include "temp_dir.hpp"

using namespace greenrec;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt_sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = check();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << title << " — "
              << v.detail << " (" << fmt(secs, 1) << " s)" << std::endl;
}

fs::path ml100k_path;
fs::path keep_dir;

Dataset load_ml100k() {
    if (!fs::exists(ml100k_path))
        throw std::runtime_error("MovieLens 100K not found at " + ml100k_path.string() +
                                 " (run scripts/fetch_ml100k.sh)");
    return load_dataset(ml100k_path, Schema::parse("ml100k"), Feedback::Explicit, "ml-100k");
}

// ---------------------------------------------------------------------------

Verdict emission_values() {
    const std::pair<double, double> cases[] = {{0.64, 35.32}, {0.73, 26.49}, {0.82, 17.66},
                                               {0.48, 51.02}, {0.61, 38.26}, {0.76, 23.54}};
    double worst = 0;
    std::string values;
    for (auto [f, kg] : cases) {
        const double got = co2e_savings_kg(f);
        worst = std::max(worst, std::abs(got - kg));
        values += (values.empty() ? "" : " ") + fmt(got, 3);
    }
    return {worst <= 0.01, "computed " + values + " kg; max deviation " + fmt(worst, 4) + " kg"};
}

Verdict table_reproduction() {
    auto raw = load_ml100k();
    auto s = compute_stats(raw);
    auto [core10, r10] = preprocess(raw, PruneConfig{10});
    auto [core30, r30] = preprocess(raw, PruneConfig{30});
    bool ok = s.n_users == 943 && s.n_items == 1682 && s.n_interactions == 100000 &&
              std::abs(*s.sparsity_pct - 93.7) <= 0.05 && std::abs(*s.entropy - 1.46) <= 0.01 &&
              core10.n_users() == 943 && core10.n_items() == 1152 && core10.size() == 97953 &&
              core30.n_users() == 720 && core30.n_items() == 795 && core30.size() == 86295;
    std::ostringstream d;
    d << "raw " << s.n_users << "/" << s.n_items << "/" << s.n_interactions << " sparsity "
      << fmt(*s.sparsity_pct, 3) << "% entropy " << fmt(*s.entropy) << "; 10-core "
      << core10.n_users() << "/" << core10.n_items() << "/" << core10.size() << "; 30-core "
      << core30.n_users() << "/" << core30.n_items() << "/" << core30.size();
    return {ok, d.str()};
}

Verdict kcore_correctness() {
    Rng rng(303);
    int min_degree_ok = 0, oracle_cases = 0, oracle_ok = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const bool small = trial % 2 == 0;
        const std::size_t users = small ? 2 + rng.below(5) : 5 + rng.below(30);
        const std::size_t items = small ? 2 + rng.below(12 - users - 1) : 5 + rng.below(30);
        const int k = 1 + static_cast<int>(rng.below(4));
        auto edges = testing::random_edges(rng, users, items, 0.2 + 0.6 * rng.uniform());
        auto d = testing::dataset_from_edges(edges);
        auto [core, rounds] = kcore_prune(d, PruneConfig{k});
        std::map<std::uint32_t, int> ud, id;
        for (const auto& row : core.interactions()) ++ud[row.user], ++id[row.item];
        bool ok = ud.size() == core.n_users() && id.size() == core.n_items();
        for (auto [u, c] : ud) ok = ok && c >= k;
        for (auto [i, c] : id) ok = ok && c >= k;
        min_degree_ok += ok;
        if (users + items <= 12) {
            ++oracle_cases;
            oracle_ok += testing::edge_set(core) == testing::brute_force_kcore(edges, k);
        }
    }
    return {min_degree_ok == 200 && oracle_cases > 0 && oracle_ok == oracle_cases,
            "min-degree holds on " + std::to_string(min_degree_ok) + "/200 instances; oracle equal on " +
                std::to_string(oracle_ok) + "/" + std::to_string(oracle_cases)};
}

Verdict split_invariants() {
    Rng rng(404);
    int runs = 0;
    std::string first_failure;
    for (int trial = 0; trial < 120; ++trial) {
        auto d = testing::random_rating_dataset(rng, 8 + rng.below(40), 10 + rng.below(40), 3, 20);
        for (auto method : {DownsampleMethod::UserBased, DownsampleMethod::UserSubset}) {
            SplitConfig cfg;
            cfg.seed = rng.next();
            DownsamplePlan plan{method, {0.1, 0.3, 0.5, 0.7, 1.0}, rng.next()};
            auto bundles = make_splits(d, cfg, plan);
            auto msg = testing::split_violations(d, cfg, plan, bundles);
            if (!msg.empty() && first_failure.empty())
                first_failure = "dataset " + std::to_string(trial) + " " + to_string(method) + ": " + msg;
            ++runs;
        }
    }
    return {first_failure.empty(), first_failure.empty()
                                       ? std::to_string(runs) + " dataset x method runs, 5 portions each, all invariants hold"
                                       : first_failure};
}

Verdict ndcg_oracle() {
    auto sweep = testing::ndcg_sweep([](const std::vector<ItemIndex>& r, const std::vector<ItemIndex>& rel,
                                        std::size_t k) { return ndcg_at_k(r, rel, k); },
                                     7);
    const bool hand = std::abs(ndcg_at_k(std::vector<ItemIndex>{3, 1}, std::vector<ItemIndex>{1}, 10) -
                               1.0 / std::log2(3.0)) <= 1e-12 &&
                      ndcg_at_k(std::vector<ItemIndex>{3, 1}, std::vector<ItemIndex>{9}, 10) == 0.0;
    return {sweep.max_error <= 1e-12 && sweep.in_range && sweep.perfect_iff_one && hand,
            std::to_string(sweep.cases) + " rankings; max |error| " + fmt_sci(sweep.max_error) +
                (sweep.in_range ? ", all in [0,1]" : ", OUT OF RANGE") +
                (sweep.perfect_iff_one ? ", 1 iff perfect" : ", perfect case mismatch")};
}

Verdict algorithm_numerics() {
    Rng rng(606);
    double grad = 0, orth = 0, recon = 0, sigma = 0, gap = 0;
    bool ordered = true, monotone = true, nonneg = true;
    for (int t = 0; t < 50; ++t) {
        grad = std::max({grad, testing::mf_gradient_error(rng, false), testing::mf_gradient_error(rng, true)});
        auto s = testing::svd_check(rng);
        orth = std::max(orth, s.orthonormality);
        recon = std::max(recon, s.reconstruction);
        sigma = std::max(sigma, s.sigma);
        ordered = ordered && s.non_increasing;
    }
    for (int t = 0; t < 20; ++t) {
        auto n = testing::nmf_check(rng);
        monotone = monotone && n.monotone;
        nonneg = nonneg && n.nonnegative;
        gap = std::max(gap, n.loss_gap);
    }
    std::ostringstream d;
    d << "MF gradient rel. error " << grad << "; SVD orthonormality " << orth << ", reconstruction "
      << recon << ", sigma vs eigensolver " << sigma << "; NMF loss "
      << (monotone ? "monotone" : "NOT monotone") << " over 100 iterations (20 matrices)"
      << (nonneg ? "" : ", NEGATIVE factors");
    return {grad <= 1e-4 && orth <= 1e-8 && recon <= 1e-8 && sigma <= 1e-8 && ordered && monotone &&
                nonneg && gap <= 1e-9,
            d.str()};
}

// ---------------------------------------------------------------------------
// Criteria 7-9 share one ML100K User-Based sweep.

const std::vector<AlgorithmKind> kSweepKinds{AlgorithmKind::Random,  AlgorithmKind::Popularity,
                                             AlgorithmKind::ItemKNN, AlgorithmKind::UserKNN,
                                             AlgorithmKind::SVD,     AlgorithmKind::FunkSVD,
                                             AlgorithmKind::BiasedMF};

ExperimentConfig ml100k_config(std::vector<AlgorithmKind> kinds) {
    ExperimentConfig cfg;
    DatasetSpec spec;
    spec.name = "ml-100k";
    spec.path = ml100k_path.string();
    spec.schema = "ml100k";
    spec.prune_k = 10;
    cfg.datasets = {spec};
    cfg.methods = {DownsampleMethod::UserBased};
    for (auto k : kinds) cfg.algorithms.push_back({k, default_grid(k), {}});
    return cfg;
}

ResultStore& sweep() {
    static std::optional<ResultStore> store;
    if (!store) {
        load_ml100k();  // fail early with a clear message
        auto cfg = ml100k_config(kSweepKinds);
        cfg.tuning = TuningMode::ReuseFull;
        if (!keep_dir.empty()) cfg.output_dir = (keep_dir / "sweep").string();
        store = cfg.output_dir.empty() ? run_experiment(cfg)
                : ResultStore::exists(cfg.output_dir) ? resume(cfg, ResultStore::load(cfg.output_dir))
                                                      : run_experiment(cfg);
    }
    return *store;
}

std::map<double, double> mean_by_portion(AlgorithmKind kind, bool runtime) {
    std::map<double, std::pair<double, int>> acc;
    for (const auto& r : sweep().records)
        if (r.algorithm == kind) {
            auto& [sum, n] = acc[r.portion];
            sum += runtime ? r.runtime_s : r.ndcg_at_10;
            ++n;
        }
    std::map<double, double> out;
    for (auto& [p, sn] : acc) out[p] = sn.first / sn.second;
    return out;
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (std::size_t t = i; t <= j; ++t) r[idx[t]] = (static_cast<double>(i + j) / 2.0) + 1.0;
        i = j + 1;
    }
    return r;
}

double spearman(const std::map<double, double>& by_portion) {
    std::vector<double> x, y;
    for (auto [p, v] : by_portion) x.push_back(p), y.push_back(v);
    auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

Verdict ordering_sanity() {
    std::map<AlgorithmKind, double> at_full;
    for (auto k : kSweepKinds) at_full[k] = mean_by_portion(k, false).at(1.0);
    const double pop = at_full[AlgorithmKind::Popularity];
    const bool ok = at_full[AlgorithmKind::ItemKNN] > pop && at_full[AlgorithmKind::UserKNN] > pop &&
                    at_full[AlgorithmKind::SVD] > pop && pop > at_full[AlgorithmKind::Random];
    std::string d = "mean nDCG@10 at p=1.0:";
    for (auto k : {AlgorithmKind::ItemKNN, AlgorithmKind::UserKNN, AlgorithmKind::SVD,
                   AlgorithmKind::Popularity, AlgorithmKind::Random})
        d += " " + to_string(k) + " " + fmt(at_full[k]);
    return {ok, d};
}

Verdict trend_reproduction() {
    bool ok = true;
    std::string d = "Spearman(portion, nDCG):";
    for (auto k : {AlgorithmKind::ItemKNN, AlgorithmKind::UserKNN, AlgorithmKind::SVD}) {
        const double rho = spearman(mean_by_portion(k, false));
        ok = ok && rho >= 0.8;
        d += " " + to_string(k) + " " + fmt(rho, 3);
    }
    int exact = 0;
    for (auto k : kSweepKinds) {
        std::vector<MetricRecord> mine;
        for (const auto& r : sweep().records)
            if (r.algorithm == k) mine.push_back(r);
        exact += relative_performance(mine).at(1.0) == 100.0;
    }
    ok = ok && exact == static_cast<int>(kSweepKinds.size());
    d += "; relative(1.0) = 100 for " + std::to_string(exact) + "/" + std::to_string(kSweepKinds.size()) +
         " algorithms";
    return {ok, d};
}

Verdict runtime_monotonicity() {
    const std::vector<AlgorithmKind> kinds{AlgorithmKind::ItemKNN, AlgorithmKind::UserKNN,
                                           AlgorithmKind::FunkSVD, AlgorithmKind::BiasedMF};
    bool ok = true;
    std::string d = "mean runtime p=0.1 vs p=1.0:";
    std::vector<MetricRecord> subset;
    for (auto k : kinds) {
        auto rt = mean_by_portion(k, true);
        ok = ok && rt.at(0.1) < rt.at(1.0);
        d += " " + to_string(k) + " " + fmt(rt.at(0.1), 3) + "/" + fmt(rt.at(1.0), 3) + "s";
    }
    for (const auto& r : sweep().records)
        if (std::find(kinds.begin(), kinds.end(), r.algorithm) != kinds.end()) subset.push_back(r);
    auto profile = build_runtime_profile(subset);
    d += "; relative runtime";
    double prev = -1;
    for (auto [p, rel] : profile.relative_runtime) {
        ok = ok && rel > prev;
        prev = rel;
        d += " " + fmt(rel, 3);
    }
    return {ok, d};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict reproducibility() {
    load_ml100k();
    testing::TempDir tmp("acceptance-repro");
    const fs::path base = keep_dir.empty() ? tmp.path : keep_dir;
    auto cfg = ml100k_config({AlgorithmKind::Popularity, AlgorithmKind::ItemKNN});
    cfg.portions = {0.5, 1.0};
    cfg.seeds = {21, 42};
    cfg.output_dir = (base / "repro_a").string();
    fs::remove_all(cfg.output_dir);
    run_experiment(cfg);
    cfg.output_dir = (base / "repro_b").string();
    cfg.parallelism = 2;
    fs::remove_all(cfg.output_dir);
    run_experiment(cfg);
    const auto a = slurp(base / "repro_a" / "records.tsv");
    const auto b = slurp(base / "repro_b" / "records.tsv");
    const auto rows = std::count(a.begin(), a.end(), '\n');
    return {!a.empty() && a == b && rows == 9,
            std::to_string(rows - 1) + " records; records.tsv " +
                (a == b ? "byte-identical" : "DIFFERS") + " across two runs (parallelism 1 and 2)"};
}

}  // namespace

int main(int argc, char** argv) {
    ml100k_path = argc > 1 ? argv[1] : "data/ml-100k/u.data";
    if (argc > 2) {
        keep_dir = argv[2];
        fs::create_directories(keep_dir);
    }
    report(1, "emission model exactness", emission_values);
    report(2, "MovieLens 100K table reproduction", table_reproduction);
    report(3, "k-core correctness", kcore_correctness);
    report(4, "split invariants", split_invariants);
    report(5, "nDCG oracle", ndcg_oracle);
    report(6, "algorithm numerics", algorithm_numerics);
    report(7, "ordering sanity", ordering_sanity);
    report(8, "trend reproduction", trend_reproduction);
    report(9, "runtime monotonicity", runtime_monotonicity);
    report(10, "reproducibility", reproducibility);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
