#include "greenrec/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "greenrec/preprocess.hpp"
#include "greenrec/random.hpp"

namespace greenrec {

using json = nlohmann::json;

namespace {

std::string fmt_num(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

double parse_num(std::string_view s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw Error("bad number '" + std::string(s) + "' in result store");
    return v;
}

std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw Error("bad integer '" + std::string(s) + "' in result store");
    return v;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string tuning_name(TuningMode m) {
    return m == TuningMode::PerPortion ? "per_portion" : "reuse_full";
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = std::any_of(allowed.begin(), allowed.end(),
                              [&](const char* a) { return key == a; });
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

// Cell identity shared by records, timings and skips.
using CellKey = std::tuple<std::string, DownsampleMethod, AlgorithmKind, double, std::uint64_t>;

CellKey key_of(const MetricRecord& r) {
    return {r.dataset, r.method, r.algorithm, r.portion, r.seed};
}

CellKey key_of(const SkipEntry& s) {
    return {s.dataset, s.method, s.algorithm, s.portion, s.seed};
}

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path,
                                               std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            auto end = line.find('\t', pos);
            fields.push_back(line.substr(pos, end == std::string::npos ? end : end - pos));
            if (end == std::string::npos) break;
            pos = end + 1;
        }
        if (fields.size() != columns)
            throw Error(path.string() + ": expected " + std::to_string(columns) + " columns");
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

std::vector<Hyperparams> AlgorithmGrid::combinations() const {
    auto combos = expand_grid(grid);
    for (auto& c : combos)
        for (const auto& [name, value] : fixed) c.emplace(name, value);
    return combos;
}

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw ConfigError("config lists no datasets");
    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (d.name.empty()) throw ConfigError("dataset without a name");
        if (!names.insert(d.name).second) throw ConfigError("duplicate dataset name " + d.name);
        if (d.prune_k < 1) throw ConfigError("prune_k must be >= 1");
        Schema::parse(d.schema);
    }
    if (methods.empty()) throw ConfigError("config lists no methods");
    DownsamplePlan plan;
    plan.portions = portions;
    plan.validate();
    if (std::find(portions.begin(), portions.end(), 1.0) == portions.end())
        throw ConfigError("portions must include 1.0 (baseline for relative metrics)");
    if (algorithms.empty()) throw ConfigError("config lists no algorithms");
    std::set<AlgorithmKind> kinds;
    for (const auto& a : algorithms) {
        if (!kinds.insert(a.kind).second)
            throw ConfigError("algorithm " + to_string(a.kind) + " listed twice");
        for (const auto& combo : a.combinations()) RecommenderSpec{a.kind, combo, 0}.validate();
    }
    if (seeds.empty()) throw ConfigError("config lists no seeds");
    std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
    if (unique_seeds.size() != seeds.size()) throw ConfigError("seeds must be distinct");
    SplitConfig{train_frac, val_frac, test_frac, 0}.validate();
    if (k < 1) throw ConfigError("k must be >= 1");
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(j,
                        {"version", "datasets", "methods", "portions", "algorithms", "seeds",
                         "split", "tuning", "exclude_validation", "k", "output_dir",
                         "parallelism"},
                        "config");
    ExperimentConfig cfg;
    try {
        int version = j.value("version", kConfigVersion);
        if (version != kConfigVersion)
            throw ConfigError("unsupported config version " + std::to_string(version));
        for (const auto& d : j.at("datasets")) {
            reject_unknown_keys(d, {"name", "path", "schema", "feedback", "prune_k"}, "dataset");
            DatasetSpec spec;
            spec.path = d.at("path").get<std::string>();
            spec.name = d.value("name", std::filesystem::path(spec.path).stem().string());
            spec.schema = d.value("schema", spec.schema);
            spec.feedback = feedback_from_string(d.value("feedback", std::string("explicit")));
            spec.prune_k = d.value("prune_k", spec.prune_k);
            cfg.datasets.push_back(spec);
        }
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j["methods"]) cfg.methods.push_back(method_from_string(m.get<std::string>()));
        }
        if (j.contains("portions")) cfg.portions = j["portions"].get<std::vector<double>>();
        for (const auto& a : j.at("algorithms")) {
            AlgorithmGrid g;
            if (a.is_string()) {
                g.kind = algorithm_from_string(a.get<std::string>());
                g.grid = default_grid(g.kind);
            } else {
                reject_unknown_keys(a, {"kind", "grid", "params"}, "algorithm");
                g.kind = algorithm_from_string(a.at("kind").get<std::string>());
                g.grid = a.contains("grid")
                             ? a["grid"].get<std::map<std::string, std::vector<double>>>()
                             : default_grid(g.kind);
                if (a.contains("params")) g.fixed = a["params"].get<Hyperparams>();
            }
            cfg.algorithms.push_back(std::move(g));
        }
        if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("split")) {
            const auto& s = j["split"];
            reject_unknown_keys(s, {"train", "val", "test"}, "split");
            cfg.train_frac = s.value("train", cfg.train_frac);
            cfg.val_frac = s.value("val", cfg.val_frac);
            cfg.test_frac = s.value("test", cfg.test_frac);
        }
        if (j.contains("tuning")) {
            auto t = j["tuning"].get<std::string>();
            if (t == "per_portion") cfg.tuning = TuningMode::PerPortion;
            else if (t == "reuse_full") cfg.tuning = TuningMode::ReuseFull;
            else throw ConfigError("unknown tuning mode '" + t + "'");
        }
        cfg.exclude_validation = j.value("exclude_validation", false);
        cfg.k = j.value("k", cfg.k);
        cfg.output_dir = j.value("output_dir", std::string());
        cfg.parallelism = j.value("parallelism", cfg.parallelism);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto cfg = from_json_text(buf.str());
    const auto base = path.parent_path();
    for (auto& d : cfg.datasets)
        if (std::filesystem::path(d.path).is_relative()) d.path = (base / d.path).string();
    if (!cfg.output_dir.empty() && std::filesystem::path(cfg.output_dir).is_relative())
        cfg.output_dir = (base / cfg.output_dir).string();
    return cfg;
}

namespace {

json result_fields(const ExperimentConfig& c) {
    json j;
    j["version"] = kConfigVersion;
    j["datasets"] = json::array();
    for (const auto& d : c.datasets)
        j["datasets"].push_back({{"name", d.name},
                                 {"path", d.path},
                                 {"schema", d.schema},
                                 {"feedback", to_string(d.feedback)},
                                 {"prune_k", d.prune_k}});
    j["methods"] = json::array();
    for (auto m : c.methods) j["methods"].push_back(to_string(m));
    j["portions"] = c.portions;
    j["algorithms"] = json::array();
    for (const auto& a : c.algorithms)
        j["algorithms"].push_back({{"kind", to_string(a.kind)}, {"grid", a.grid}, {"params", a.fixed}});
    j["seeds"] = c.seeds;
    j["split"] = {{"train", c.train_frac}, {"val", c.val_frac}, {"test", c.test_frac}};
    j["tuning"] = tuning_name(c.tuning);
    j["exclude_validation"] = c.exclude_validation;
    j["k"] = c.k;
    return j;
}

}  // namespace

std::string ExperimentConfig::to_json_text() const {
    auto j = result_fields(*this);
    j["output_dir"] = output_dir;
    j["parallelism"] = parallelism;
    return j.dump(2);
}

std::string ExperimentConfig::canonical() const { return result_fields(*this).dump(); }

std::string ExperimentConfig::hash() const { return hex64(fnv1a(canonical())); }

std::size_t ExperimentConfig::grid_cardinality() const {
    return datasets.size() * methods.size() * portions.size() * algorithms.size() * seeds.size();
}

// ---------------------------------------------------------------------------
// Store

void ResultStore::sort() {
    std::sort(records.begin(), records.end(), [](const MetricRecord& a, const MetricRecord& b) {
        return key_of(a) < key_of(b);
    });
    std::sort(skips.begin(), skips.end(),
              [](const SkipEntry& a, const SkipEntry& b) { return key_of(a) < key_of(b); });
}

void ResultStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    ResultStore sorted = *this;
    sorted.sort();
    {
        std::ofstream out(dir / "records.tsv", std::ios::binary);
        out << "dataset\talgorithm\tmethod\tportion\tseed\thyperparams\tndcg_at_10\tn_eval_users\n";
        for (const auto& r : sorted.records)
            out << r.dataset << '\t' << to_string(r.algorithm) << '\t' << to_string(r.method)
                << '\t' << fmt_num(r.portion) << '\t' << r.seed << '\t' << r.hyperparams << '\t'
                << fmt_num(r.ndcg_at_10) << '\t' << r.n_eval_users << '\n';
        if (!out) throw Error("failed writing records.tsv");
    }
    {
        std::ofstream out(dir / "timings.tsv", std::ios::binary);
        out << "dataset\talgorithm\tmethod\tportion\tseed\thyperparams\truntime_s\n";
        for (const auto& r : sorted.records)
            out << r.dataset << '\t' << to_string(r.algorithm) << '\t' << to_string(r.method)
                << '\t' << fmt_num(r.portion) << '\t' << r.seed << '\t' << r.hyperparams << '\t'
                << fmt_num(r.runtime_s) << '\n';
    }
    {
        std::ofstream out(dir / "skips.tsv", std::ios::binary);
        out << "dataset\talgorithm\tmethod\tportion\tseed\treason\n";
        for (const auto& s : sorted.skips) {
            std::string reason = s.reason;
            std::replace(reason.begin(), reason.end(), '\t', ' ');
            std::replace(reason.begin(), reason.end(), '\n', ' ');
            out << s.dataset << '\t' << to_string(s.algorithm) << '\t' << to_string(s.method)
                << '\t' << fmt_num(s.portion) << '\t' << s.seed << '\t' << reason << '\n';
        }
    }
    json manifest;
    manifest["config_hash"] = config_hash;
    manifest["toolkit_version"] = toolkit_version;
    manifest["created_at"] = created_at;
    manifest["updated_at"] = updated_at;
    manifest["records"] = records.size();
    manifest["skips"] = skips.size();
    manifest["config"] = config_json.empty() ? json() : json::parse(config_json);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
}

bool ResultStore::exists(const std::filesystem::path& dir) {
    return std::filesystem::exists(dir / "manifest.json");
}

ResultStore ResultStore::load(const std::filesystem::path& dir) {
    ResultStore store;
    std::ifstream in(dir / "manifest.json");
    if (!in) throw Error("no result store at " + dir.string());
    json manifest;
    try {
        manifest = json::parse(in);
        store.config_hash = manifest.at("config_hash").get<std::string>();
        store.toolkit_version = manifest.value("toolkit_version", std::string());
        store.created_at = manifest.value("created_at", std::string());
        store.updated_at = manifest.value("updated_at", std::string());
        if (manifest.contains("config") && !manifest["config"].is_null())
            store.config_json = manifest["config"].dump();
    } catch (const json::exception& e) {
        throw Error(std::string("bad manifest: ") + e.what());
    }

    std::map<CellKey, double> runtimes;
    if (std::filesystem::exists(dir / "timings.tsv"))
        for (const auto& f : read_tsv(dir / "timings.tsv", 7))
            runtimes[{f[0], method_from_string(f[2]), algorithm_from_string(f[1]), parse_num(f[3]),
                      parse_u64(f[4])}] = parse_num(f[6]);
    for (const auto& f : read_tsv(dir / "records.tsv", 8)) {
        MetricRecord r;
        r.dataset = f[0];
        r.algorithm = algorithm_from_string(f[1]);
        r.method = method_from_string(f[2]);
        r.portion = parse_num(f[3]);
        r.seed = parse_u64(f[4]);
        r.hyperparams = f[5];
        r.ndcg_at_10 = parse_num(f[6]);
        r.n_eval_users = parse_u64(f[7]);
        if (auto it = runtimes.find(key_of(r)); it != runtimes.end()) r.runtime_s = it->second;
        store.records.push_back(std::move(r));
    }
    if (std::filesystem::exists(dir / "skips.tsv"))
        for (const auto& f : read_tsv(dir / "skips.tsv", 6))
            store.skips.push_back({f[0], algorithm_from_string(f[1]), method_from_string(f[2]),
                                   parse_num(f[3]), parse_u64(f[4]), f[5]});
    return store;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

struct Cell {
    std::size_t dataset;
    std::size_t method;
    std::size_t portion;
    std::size_t algorithm;
    std::size_t seed;
};

struct Outcome {
    std::optional<MetricRecord> record;
    std::optional<SkipEntry> skip;
};

struct PreparedData {
    Dataset dataset;
    // (method, seed) -> bundles in portion order
    std::map<std::pair<std::size_t, std::size_t>, std::vector<SplitBundle>> splits;
    std::map<std::pair<std::size_t, std::size_t>, std::string> split_errors;
};

std::uint64_t split_seed(std::uint64_t seed, const std::string& dataset) {
    return derive_seed(seed, fnv1a(dataset));
}

std::uint64_t model_seed(std::uint64_t seed, const std::string& dataset, DownsampleMethod m,
                         double portion, AlgorithmKind kind) {
    return derive_seed(seed, fnv1a(dataset), fnv1a(to_string(m)), portion_key(portion),
                       fnv1a(to_string(kind)));
}

Outcome run_cell(const ExperimentConfig& cfg, const Cell& c, const PreparedData& prep,
                 const std::optional<Hyperparams>& reuse) {
    const auto& ds = cfg.datasets[c.dataset];
    const auto method = cfg.methods[c.method];
    const double portion = cfg.portions[c.portion];
    const auto& alg = cfg.algorithms[c.algorithm];
    const auto seed = cfg.seeds[c.seed];
    auto skip = [&](std::string reason) {
        Outcome o;
        o.skip = SkipEntry{ds.name, alg.kind, method, portion, seed, std::move(reason)};
        return o;
    };

    if (requires_explicit(alg.kind) && ds.feedback == Feedback::Implicit)
        return skip("unsupported: " + to_string(alg.kind) + " requires explicit ratings");
    if (auto err = prep.split_errors.find({c.method, c.seed}); err != prep.split_errors.end())
        return skip("error: " + err->second);

    try {
        const auto& bundle = prep.splits.at({c.method, c.seed}).at(c.portion);
        const auto train_matrix = TrainMatrix::build(prep.dataset, bundle.train);
        std::vector<Hyperparams> combos = reuse ? std::vector<Hyperparams>{*reuse}
                                                : alg.combinations();
        RecommenderSpec spec{alg.kind, {}, model_seed(seed, ds.name, method, portion, alg.kind)};

        std::unique_ptr<TrainedModel> best;
        Hyperparams best_params;
        double best_val = -1.0;
        double best_train_s = 0.0;
        for (const auto& combo : combos) {
            spec.hyperparams = combo;
            Stopwatch sw;
            auto model = train(spec, train_matrix);
            const double train_s = sw.seconds();
            double val = 0.0;
            if (combos.size() > 1) val = evaluate_validation(*model, prep.dataset, bundle, cfg.k).ndcg;
            if (!best || val > best_val) {
                best = std::move(model);
                best_params = combo;
                best_val = val;
                best_train_s = train_s;
            }
        }

        Stopwatch sw;
        EvalOptions opt;
        opt.k = cfg.k;
        opt.exclude_validation = cfg.exclude_validation;
        auto score = evaluate_bundle(*best, prep.dataset, bundle, opt);
        const double eval_s = sw.seconds();

        MetricRecord r;
        r.dataset = ds.name;
        r.algorithm = alg.kind;
        r.method = method;
        r.portion = portion;
        r.seed = seed;
        r.hyperparams = format_hyperparams(best_params);
        r.ndcg_at_10 = score.ndcg;
        r.runtime_s = best_train_s + eval_s;
        r.n_eval_users = score.n_eval_users;
        Outcome o;
        o.record = std::move(r);
        return o;
    } catch (const std::exception& e) {
        return skip(std::string("error: ") + e.what());
    }
}

PreparedData prepare(const ExperimentConfig& cfg, std::size_t di,
                     const std::set<std::pair<std::size_t, std::size_t>>& needed) {
    const auto& spec = cfg.datasets[di];
    auto raw = load_dataset(spec.path, Schema::parse(spec.schema), spec.feedback, spec.name);
    auto [pruned, report] = preprocess(raw, PruneConfig{spec.prune_k});
    PreparedData prep{std::move(pruned), {}, {}};
    for (const auto& [mi, si] : needed) {
        SplitConfig sc{cfg.train_frac, cfg.val_frac, cfg.test_frac,
                       split_seed(cfg.seeds[si], spec.name)};
        DownsamplePlan plan{cfg.methods[mi], cfg.portions, sc.seed};
        try {
            prep.splits[{mi, si}] = make_splits(prep.dataset, sc, plan);
        } catch (const ConfigError& e) {
            prep.split_errors[{mi, si}] = e.what();
        }
    }
    return prep;
}

void run_cells(const ExperimentConfig& cfg, const std::vector<Cell>& cells,
               const std::map<std::size_t, PreparedData>& prepared,
               const std::vector<std::optional<Hyperparams>>& reuse,
               std::vector<Outcome>& outcomes) {
    outcomes.assign(cells.size(), {});
    // Execute in a seeded random order so that drifts in machine speed do not
    // line up with any grid axis (portion, algorithm, ...). Results do not
    // depend on the order.
    std::vector<std::size_t> order(cells.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    Rng rng(derive_seed(fnv1a(cfg.canonical()), fnv1a("execution-order")));
    rng.shuffle(std::span<std::size_t>(order));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            auto pos = next.fetch_add(1);
            if (pos >= order.size()) return;
            const auto idx = order[pos];
            outcomes[idx] = run_cell(cfg, cells[idx], prepared.at(cells[idx].dataset), reuse[idx]);
        }
    };
    const std::size_t threads = std::min(cfg.parallelism, std::max<std::size_t>(1, cells.size()));
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace

ResultStore resume(const ExperimentConfig& cfg, ResultStore store) {
    cfg.validate();
    const auto hash = cfg.hash();
    if (!store.config_hash.empty() && store.config_hash != hash)
        throw ConfigError("result store was produced by a different configuration (hash " +
                          store.config_hash + ", expected " + hash + ")");
    if (store.config_hash.empty()) {
        store.config_hash = hash;
        store.config_json = cfg.canonical();
        store.created_at = utc_now();
    }
    for (const auto& d : cfg.datasets)
        if (!std::filesystem::exists(d.path))
            throw ConfigError("dataset file not found: " + d.path);

    std::set<CellKey> done;
    for (const auto& r : store.records) done.insert(key_of(r));
    for (const auto& s : store.skips) done.insert(key_of(s));

    std::vector<Cell> missing;
    for (std::size_t di = 0; di < cfg.datasets.size(); ++di)
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
            for (std::size_t pi = 0; pi < cfg.portions.size(); ++pi)
                for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai)
                    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
                        CellKey key{cfg.datasets[di].name, cfg.methods[mi],
                                    cfg.algorithms[ai].kind, cfg.portions[pi], cfg.seeds[si]};
                        if (!done.count(key)) missing.push_back({di, mi, pi, ai, si});
                    }
    if (missing.empty()) return store;

    std::map<std::size_t, std::set<std::pair<std::size_t, std::size_t>>> needed;
    for (const auto& c : missing) needed[c.dataset].insert({c.method, c.seed});
    std::map<std::size_t, PreparedData> prepared;
    for (const auto& [di, combos] : needed) prepared.emplace(di, prepare(cfg, di, combos));

    auto absorb = [&](const std::vector<Cell>& cells) {
        std::vector<std::optional<Hyperparams>> reuse(cells.size());
        if (cfg.tuning == TuningMode::ReuseFull) {
            for (std::size_t k = 0; k < cells.size(); ++k) {
                const auto& c = cells[k];
                if (cfg.portions[c.portion] == 1.0) continue;
                CellKey base{cfg.datasets[c.dataset].name, cfg.methods[c.method],
                             cfg.algorithms[c.algorithm].kind, 1.0, cfg.seeds[c.seed]};
                for (const auto& r : store.records)
                    if (key_of(r) == base) reuse[k] = parse_hyperparams(r.hyperparams);
                if (!reuse[k]) reuse[k] = Hyperparams{};  // resolved below as a skip
            }
        }
        std::vector<Outcome> outcomes;
        std::vector<Cell> runnable;
        std::vector<std::optional<Hyperparams>> runnable_reuse;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const auto& c = cells[k];
            bool base_missing = cfg.tuning == TuningMode::ReuseFull &&
                                cfg.portions[c.portion] != 1.0 && reuse[k] && reuse[k]->empty() &&
                                !cfg.algorithms[c.algorithm].combinations().front().empty() &&
                                !(requires_explicit(cfg.algorithms[c.algorithm].kind) &&
                                  cfg.datasets[c.dataset].feedback == Feedback::Implicit);
            if (base_missing) {
                store.skips.push_back({cfg.datasets[c.dataset].name, cfg.algorithms[c.algorithm].kind,
                                       cfg.methods[c.method], cfg.portions[c.portion],
                                       cfg.seeds[c.seed],
                                       "error: no tuned baseline at portion 1.0 to reuse"});
                continue;
            }
            runnable.push_back(c);
            runnable_reuse.push_back(reuse[k]);
        }
        run_cells(cfg, runnable, prepared, runnable_reuse, outcomes);
        for (auto& o : outcomes) {
            if (o.record) store.records.push_back(std::move(*o.record));
            if (o.skip) store.skips.push_back(std::move(*o.skip));
        }
    };

    if (cfg.tuning == TuningMode::ReuseFull) {
        std::vector<Cell> full, rest;
        for (const auto& c : missing) (cfg.portions[c.portion] == 1.0 ? full : rest).push_back(c);
        absorb(full);
        absorb(rest);
    } else {
        absorb(missing);
    }

    store.updated_at = utc_now();
    store.sort();
    if (!cfg.output_dir.empty()) store.save(cfg.output_dir);
    return store;
}

ResultStore run_experiment(const ExperimentConfig& cfg) { return resume(cfg, ResultStore{}); }

// ---------------------------------------------------------------------------
// Reports

ReportKind report_kind_from_string(std::string_view s) {
    if (s == "normalized_heatmap" || s == "heatmap") return ReportKind::NormalizedHeatmap;
    if (s == "relative_curves" || s == "relative") return ReportKind::RelativeCurves;
    if (s == "runtime_profile" || s == "runtime") return ReportKind::RuntimeProfile;
    if (s == "co2_table" || s == "co2") return ReportKind::Co2Table;
    throw ConfigError("unknown report kind '" + std::string(s) + "'");
}

std::string to_string(ReportKind kind) {
    switch (kind) {
        case ReportKind::NormalizedHeatmap: return "normalized_heatmap";
        case ReportKind::RelativeCurves: return "relative_curves";
        case ReportKind::RuntimeProfile: return "runtime_profile";
        case ReportKind::Co2Table: return "co2_table";
    }
    return "?";
}

std::vector<Co2Row> co2_table(const RuntimeProfile& profile, const EmissionModel& model) {
    std::vector<Co2Row> rows;
    for (const auto& [p, rel] : profile.relative_runtime)
        rows.push_back({p, rel, co2e_savings_kg(std::clamp(rel, 0.0, 1.0), model)});
    return rows;
}

std::vector<Heatmap> normalized_heatmaps(std::span<const MetricRecord> records) {
    std::set<std::pair<std::string, DownsampleMethod>> groups;
    for (const auto& r : records) groups.insert({r.dataset, r.method});
    std::vector<Heatmap> out;
    for (const auto& [dataset, method] : groups) {
        auto means = seed_means(records, dataset, method);
        auto normalized = normalize_scores(means);
        Heatmap h;
        h.dataset = dataset;
        h.method = method;
        std::set<AlgorithmKind> algs;
        std::set<double> portions;
        for (const auto& [key, v] : normalized) {
            algs.insert(key.first);
            portions.insert(key.second);
        }
        h.algorithms.assign(algs.begin(), algs.end());
        h.portions.assign(portions.begin(), portions.end());
        for (auto a : h.algorithms) {
            std::vector<double> row;
            for (double p : h.portions) {
                auto it = normalized.find({a, p});
                row.push_back(it == normalized.end() ? std::nan("") : it->second);
            }
            h.values.push_back(std::move(row));
        }
        out.push_back(std::move(h));
    }
    return out;
}

namespace {

json num_or_null(double v) { return std::isnan(v) ? json() : json(v); }

void write_text(const std::filesystem::path& path, const std::string& text,
                std::vector<std::filesystem::path>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    written.push_back(path);
}

}  // namespace

std::vector<std::filesystem::path> report(const ResultStore& store, ReportKind kind,
                                          const std::filesystem::path& out_dir,
                                          const EmissionModel& model) {
    if (store.records.empty()) throw ConfigError("result store has no records");
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    const std::span<const MetricRecord> records(store.records);

    switch (kind) {
        case ReportKind::NormalizedHeatmap: {
            auto maps = normalized_heatmaps(records);
            json plot = json::array();
            std::ostringstream tsv;
            tsv << "dataset\tmethod\talgorithm\tportion\tnormalized\n";
            for (const auto& h : maps) {
                json m{{"dataset", h.dataset},
                       {"method", to_string(h.method)},
                       {"portions", h.portions},
                       {"rows", json::array()}};
                for (std::size_t a = 0; a < h.algorithms.size(); ++a) {
                    json row = json::array();
                    for (std::size_t p = 0; p < h.portions.size(); ++p) {
                        row.push_back(num_or_null(h.values[a][p]));
                        if (!std::isnan(h.values[a][p]))
                            tsv << h.dataset << '\t' << to_string(h.method) << '\t'
                                << to_string(h.algorithms[a]) << '\t' << fmt_num(h.portions[p])
                                << '\t' << fmt_num(h.values[a][p]) << '\n';
                    }
                    m["rows"].push_back({{"algorithm", to_string(h.algorithms[a])}, {"values", row}});
                }
                plot.push_back(std::move(m));
            }
            write_text(out_dir / "normalized_heatmap.tsv", tsv.str(), written);
            write_text(out_dir / "normalized_heatmap.json", plot.dump(2) + "\n", written);
            break;
        }
        case ReportKind::RelativeCurves: {
            std::vector<std::string> undefined;
            auto cells = relative_table(records, &undefined);
            if (cells.empty()) throw ConfigError("no (dataset, algorithm, method) has a usable baseline");
            std::ostringstream tsv;
            tsv << "dataset\talgorithm\tmethod\tportion\trelative_pct\n";
            for (const auto& c : cells)
                tsv << c.dataset << '\t' << to_string(c.algorithm) << '\t' << to_string(c.method)
                    << '\t' << fmt_num(c.portion) << '\t' << fmt_num(c.percent) << '\n';
            write_text(out_dir / "relative_curves.tsv", tsv.str(), written);
            json plot{{"curves", json::array()}, {"groups", json::object()}, {"undefined", undefined}};
            for (const auto& c : cells)
                plot["curves"].push_back({{"dataset", c.dataset},
                                          {"algorithm", to_string(c.algorithm)},
                                          {"method", to_string(c.method)},
                                          {"portion", c.portion},
                                          {"relative_pct", c.percent}});
            for (auto grouping : {Grouping::ByAlgorithmGroup, Grouping::ByDatasetGroup}) {
                const std::string name =
                    grouping == Grouping::ByAlgorithmGroup ? "algorithm_groups" : "dataset_groups";
                auto table = aggregate_groups(cells, grouping);
                std::ostringstream g;
                g << "method\tgroup\tportion\tmean_pct\tspread_pct\tmembers\n";
                json rows = json::array();
                for (const auto& r : table.rows) {
                    g << to_string(r.method) << '\t' << r.group << '\t' << fmt_num(r.portion) << '\t'
                      << fmt_num(r.mean) << '\t' << fmt_num(r.spread) << '\t' << r.members << '\n';
                    rows.push_back({{"method", to_string(r.method)},
                                    {"group", r.group},
                                    {"portion", r.portion},
                                    {"mean_pct", r.mean},
                                    {"spread_pct", r.spread},
                                    {"members", r.members}});
                }
                write_text(out_dir / ("relative_" + name + ".tsv"), g.str(), written);
                plot["groups"][name] = {{"rows", rows}, {"warnings", table.warnings}};
            }
            write_text(out_dir / "relative_curves.json", plot.dump(2) + "\n", written);
            break;
        }
        case ReportKind::RuntimeProfile:
        case ReportKind::Co2Table: {
            // One profile over everything, then one per method.
            std::vector<std::pair<std::string, std::vector<MetricRecord>>> slices{{"all", store.records}};
            std::map<DownsampleMethod, std::vector<MetricRecord>> by_method;
            for (const auto& r : store.records) by_method[r.method].push_back(r);
            if (by_method.size() > 1)
                for (auto& [m, recs] : by_method) slices.emplace_back(to_string(m), std::move(recs));

            std::ostringstream tsv;
            json plot = json::array();
            if (kind == ReportKind::RuntimeProfile)
                tsv << "scope\tportion\tmean_runtime_s\trelative_runtime\n";
            else
                tsv << "scope\tportion\trelative_runtime\tco2e_savings_kg\n";
            for (const auto& [scope, recs] : slices) {
                auto profile = build_runtime_profile(recs);
                json rows = json::array();
                if (kind == ReportKind::RuntimeProfile) {
                    for (const auto& [p, mean] : profile.mean_runtime_s) {
                        double rel = profile.relative_runtime.at(p);
                        tsv << scope << '\t' << fmt_num(p) << '\t' << fmt_num(mean) << '\t'
                            << fmt_num(rel) << '\n';
                        rows.push_back({{"portion", p}, {"mean_runtime_s", mean}, {"relative_runtime", rel}});
                    }
                } else {
                    for (const auto& row : co2_table(profile, model)) {
                        tsv << scope << '\t' << fmt_num(row.portion) << '\t'
                            << fmt_num(row.relative_runtime) << '\t' << fmt_num(row.savings_kg) << '\n';
                        rows.push_back({{"portion", row.portion},
                                        {"relative_runtime", row.relative_runtime},
                                        {"co2e_savings_kg", row.savings_kg}});
                    }
                }
                plot.push_back({{"scope", scope}, {"rows", rows}});
            }
            const std::string stem = to_string(kind);
            write_text(out_dir / (stem + ".tsv"), tsv.str(), written);
            write_text(out_dir / (stem + ".json"), plot.dump(2) + "\n", written);
            break;
        }
    }
    return written;
}

}  // namespace greenrec
