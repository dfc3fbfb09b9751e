// Python bindings for the core operations.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <filesystem>
#include <optional>

#include "greenrec/evaluation.hpp"
#include "greenrec/ingest.hpp"
#include "greenrec/preprocess.hpp"
#include "greenrec/runner.hpp"
#include "greenrec/sustainability.hpp"

namespace py = pybind11;
using namespace greenrec;

namespace {

py::dict stats_dict(const DatasetStats& s) {
    py::dict d;
    d["users"] = s.n_users;
    d["items"] = s.n_items;
    d["interactions"] = s.n_interactions;
    d["avg_per_user"] = s.avg_int_per_user;
    d["avg_per_item"] = s.avg_int_per_item;
    d["sparsity_pct"] = s.sparsity_pct ? py::cast(*s.sparsity_pct) : py::none();
    d["entropy"] = s.entropy ? py::cast(*s.entropy) : py::none();
    return d;
}

py::dict record_dict(const MetricRecord& r) {
    py::dict d;
    d["dataset"] = r.dataset;
    d["algorithm"] = to_string(r.algorithm);
    d["method"] = to_string(r.method);
    d["portion"] = r.portion;
    d["seed"] = r.seed;
    d["hyperparams"] = r.hyperparams;
    d["ndcg_at_10"] = r.ndcg_at_10;
    d["runtime_s"] = r.runtime_s;
    d["n_eval_users"] = r.n_eval_users;
    return d;
}

py::dict store_dict(const ResultStore& store) {
    py::list records, skips;
    for (const auto& r : store.records) records.append(record_dict(r));
    for (const auto& s : store.skips) {
        py::dict d;
        d["dataset"] = s.dataset;
        d["algorithm"] = to_string(s.algorithm);
        d["method"] = to_string(s.method);
        d["portion"] = s.portion;
        d["seed"] = s.seed;
        d["reason"] = s.reason;
        skips.append(d);
    }
    py::dict d;
    d["records"] = records;
    d["skips"] = skips;
    d["config_hash"] = store.config_hash;
    return d;
}

Dataset load(const std::filesystem::path& path, const std::string& schema,
             const std::string& feedback, const std::string& name) {
    return load_dataset(path, Schema::parse(schema), feedback_from_string(feedback), name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Downsampling experiments for recommender systems";
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<UnsupportedCombination>(m, "UnsupportedCombination", PyExc_ValueError);
    m.attr("__version__") = kToolkitVersion;

    m.def(
        "dataset_stats",
        [](const std::filesystem::path& path, const std::string& schema, const std::string& feedback,
           std::optional<int> k, const std::string& entropy_base) {
            auto d = load(path, schema, feedback, {});
            if (k) d = preprocess(d, PruneConfig{*k}).first;
            return stats_dict(compute_stats(d, entropy_base == "2" ? EntropyBase::Two : EntropyBase::Natural));
        },
        py::arg("path"), py::arg("schema") = "ml100k", py::arg("feedback") = "explicit",
        py::arg("k") = py::none(), py::arg("entropy_base") = "e",
        "Users, items, interactions, sparsity and rating entropy of a file, optionally after k-core pruning.");

    m.def(
        "preprocess",
        [](const std::filesystem::path& path, int k, const std::string& schema,
           const std::string& feedback, std::optional<std::filesystem::path> out) {
            auto [pruned, report] = preprocess(load(path, schema, feedback, {}), PruneConfig{k});
            if (out) write_dataset(*out, pruned);
            py::dict d;
            d["duplicates_removed"] = report.duplicates_removed;
            d["pairs_averaged"] = report.pairs_averaged;
            d["kcore_rounds"] = report.kcore_rounds;
            d["before"] = stats_dict(report.before);
            d["after"] = stats_dict(report.after);
            return d;
        },
        py::arg("path"), py::arg("k") = 10, py::arg("schema") = "ml100k",
        py::arg("feedback") = "explicit", py::arg("out") = py::none(),
        "Deduplicate, average duplicate pairs and k-core prune; optionally write the result.");

    m.def(
        "co2e_savings_kg",
        [](double relative_runtime, double energy_per_run_kwh, double tuning_configs,
           double intensity_g_per_kwh, double scale_factor) {
            return co2e_savings_kg(relative_runtime, EmissionModel{energy_per_run_kwh, tuning_configs,
                                                                   intensity_g_per_kwh, scale_factor});
        },
        py::arg("relative_runtime"), py::arg("energy_per_run_kwh") = 0.51,
        py::arg("tuning_configs") = 10.0, py::arg("intensity_g_per_kwh") = 481.0,
        py::arg("scale_factor") = 40.0, "Estimated kg CO2e saved by running at a fraction of full runtime.");

    m.def(
        "ndcg_at_k",
        [](const std::vector<ItemIndex>& ranked, const std::vector<ItemIndex>& relevant, std::size_t k) {
            if (relevant.empty()) throw ConfigError("relevant set is empty");
            return ndcg_at_k(std::span<const ItemIndex>(ranked), std::span<const ItemIndex>(relevant), k);
        },
        py::arg("ranked"), py::arg("relevant"), py::arg("k") = 10, "Binary-relevance nDCG@k.");

    m.def(
        "run_experiment",
        [](const std::filesystem::path& config, std::optional<std::string> output_dir,
           std::optional<std::size_t> parallelism, bool fresh) {
            auto cfg = ExperimentConfig::load(config);
            if (output_dir) cfg.output_dir = *output_dir;
            if (parallelism) cfg.parallelism = *parallelism;
            ResultStore store;
            {
                py::gil_scoped_release release;
                if (!fresh && !cfg.output_dir.empty() && ResultStore::exists(cfg.output_dir))
                    store = ResultStore::load(cfg.output_dir);
                store = resume(cfg, std::move(store));
            }
            return store_dict(store);
        },
        py::arg("config"), py::arg("output_dir") = py::none(), py::arg("parallelism") = py::none(),
        py::arg("fresh") = false, "Run (or resume) the grid described by a JSON config file.");

    m.def(
        "load_results", [](const std::filesystem::path& dir) { return store_dict(ResultStore::load(dir)); },
        py::arg("results"), "Records and skips of a result store.");

    m.def(
        "relative_performance",
        [](const std::filesystem::path& dir) {
            auto store = ResultStore::load(dir);
            py::list out;
            for (const auto& c : relative_table(store.records)) {
                py::dict d;
                d["dataset"] = c.dataset;
                d["algorithm"] = to_string(c.algorithm);
                d["method"] = to_string(c.method);
                d["portion"] = c.portion;
                d["percent"] = c.percent;
                out.append(d);
            }
            return out;
        },
        py::arg("results"), "Seed-mean nDCG@10 per portion as a percentage of full-data performance.");

    m.def(
        "runtime_profile",
        [](const std::filesystem::path& dir, std::optional<std::vector<std::string>> algorithms) {
            auto store = ResultStore::load(dir);
            std::vector<MetricRecord> chosen;
            for (const auto& r : store.records) {
                if (algorithms && std::find(algorithms->begin(), algorithms->end(),
                                            to_string(r.algorithm)) == algorithms->end())
                    continue;
                chosen.push_back(r);
            }
            return build_runtime_profile(chosen).relative_runtime;
        },
        py::arg("results"), py::arg("algorithms") = py::none(),
        "Mean runtime per portion relative to portion 1.0.");

    m.def(
        "report",
        [](const std::filesystem::path& dir, const std::string& kind, std::optional<std::filesystem::path> out) {
            auto store = ResultStore::load(dir);
            std::vector<std::string> paths;
            for (const auto& p : report(store, report_kind_from_string(kind), out.value_or(dir / "reports")))
                paths.push_back(p.string());
            return paths;
        },
        py::arg("results"), py::arg("kind"), py::arg("out_dir") = py::none(),
        "Write one report (normalized_heatmap, relative_curves, runtime_profile or co2_table).");
}
