#include "greenrec/cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "greenrec/preprocess.hpp"
#include "greenrec/random.hpp"
#include "greenrec/runner.hpp"

namespace greenrec {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string portion_tag(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", p);
    return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(buf.str())));
    return hex;
}

nlohmann::json stats_json(const DatasetStats& s) {
    nlohmann::json j{{"users", s.n_users},
                     {"items", s.n_items},
                     {"interactions", s.n_interactions},
                     {"avg_int_per_user", s.avg_int_per_user},
                     {"avg_int_per_item", s.avg_int_per_item}};
    j["sparsity_pct"] = s.sparsity_pct ? nlohmann::json(*s.sparsity_pct) : nlohmann::json();
    j["entropy"] = s.entropy ? nlohmann::json(*s.entropy) : nlohmann::json();
    return j;
}

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows, bool pretty) {
    if (!pretty) {
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "\t" : "") << row[c];
            out << '\n';
        }
        return;
    }
    std::vector<std::size_t> width;
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (width.size() <= c) width.push_back(0);
            width[c] = std::max(width[c], row[c].size());
        }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out << (c ? "  " : "") << rows[r][c];
            if (c + 1 < rows[r].size()) out << std::string(width[c] - rows[r][c].size(), ' ');
        }
        out << '\n';
        if (r == 0 && rows.size() > 1) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            out << std::string(total - 2, '-') << '\n';
        }
    }
}

std::vector<std::string> stats_row(const std::string& name, const DatasetStats& s) {
    return {name,
            std::to_string(s.n_users),
            std::to_string(s.n_items),
            std::to_string(s.n_interactions),
            fixed(s.avg_int_per_user, 2),
            fixed(s.avg_int_per_item, 2),
            s.sparsity_pct ? fixed(*s.sparsity_pct, 3) : "NA",
            s.entropy ? fixed(*s.entropy, 4) : "NA"};
}

const std::vector<std::string> kStatsHeader{"dataset",     "users",       "items",
                                            "interactions", "avg_per_user", "avg_per_item",
                                            "sparsity_pct", "entropy"};

struct InputFlags {
    std::string input;
    std::string schema = "ml100k";
    std::string feedback = "explicit";
    std::string name;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--input,-i", input, "Interaction file")->required();
        cmd->add_option("--schema", schema,
                        "Column layout: ml100k, ml1m, recbole, amazon, gowalla, uir, ui, or "
                        "key=value pairs (user=,item=,rating=,timestamp=,delim=,header=)")
            ->capture_default_str();
        cmd->add_option("--feedback", feedback, "explicit or implicit")
            ->check(CLI::IsMember({"explicit", "implicit"}))
            ->capture_default_str();
        cmd->add_option("--name", name, "Dataset name (default: file stem)");
    }

    Dataset load() const {
        auto label = name.empty() ? std::filesystem::path(input).stem().string() : name;
        return load_dataset(input, Schema::parse(schema), feedback_from_string(feedback), label);
    }
};

struct EmissionFlags {
    EmissionModel model;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--energy-kwh", model.energy_per_run_kwh, "Energy per full run (kWh)")
            ->capture_default_str();
        cmd->add_option("--configs", model.tuning_configs, "Tuning configurations per run")
            ->capture_default_str();
        cmd->add_option("--intensity", model.intensity_g_per_kwh, "Grid carbon intensity (g/kWh)")
            ->capture_default_str();
        cmd->add_option("--scale", model.scale_factor, "Workflow scaling factor")
            ->capture_default_str();
    }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Downsampling experiments for recommender systems: data preparation, "
                 "splitting, grid runs, reports and CO2e estimates.",
                 "greenrec"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::optional<std::size_t> parallelism;
    bool pretty = false;
    app.add_option("--config", config_path, "Experiment config (JSON)");
    app.add_option("--seed", seed, "Seed (split: split seed; run: replaces the config's seed list)");
    app.add_option("--out,-o", out_path, "Output file or directory");
    app.add_option("--parallelism", parallelism, "Worker threads for run")->check(CLI::PositiveNumber);
    app.add_flag("--pretty", pretty, "Human-readable tables instead of tab-separated text");

    // stats
    auto* stats = app.add_subcommand("stats", "Print dataset statistics (users, items, sparsity, entropy)");
    InputFlags stats_in;
    stats_in.add_to(stats);
    std::optional<int> stats_k;
    std::string entropy_base = "e";
    stats->add_option("--k", stats_k, "Report statistics after k-core preprocessing");
    stats->add_option("--entropy-base", entropy_base, "e (natural log) or 2")
        ->check(CLI::IsMember({"e", "2"}))
        ->capture_default_str();

    // prep
    auto* prep = app.add_subcommand("prep", "Deduplicate, average duplicate pairs and k-core prune");
    InputFlags prep_in;
    prep_in.add_to(prep);
    int prep_k = 10;
    prep->add_option("--k", prep_k, "Core size")->check(CLI::PositiveNumber)->capture_default_str();

    // split
    auto* split = app.add_subcommand("split", "Write train/val/test files for every portion");
    InputFlags split_in;
    split_in.add_to(split);
    int split_k = 10;
    std::string split_method = "user_based";
    std::vector<double> split_portions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    split->add_option("--k", split_k, "Core size applied before splitting (0 = no preprocessing)")
        ->capture_default_str();
    split->add_option("--method", split_method, "user_based or user_subset")->capture_default_str();
    split->add_option("--portions", split_portions, "Training portions")->delimiter(',');

    // run
    auto* run = app.add_subcommand("run", "Run (or resume) the experiment grid of a config");
    bool fresh = false;
    run->add_flag("--fresh", fresh, "Discard an existing result store instead of resuming it");

    // report
    auto* rep = app.add_subcommand("report", "Derive tables from a result store");
    std::string results_dir;
    std::vector<std::string> kinds;
    EmissionFlags rep_emission;
    rep->add_option("--results", results_dir,
                    "Result store directory (default: the config's output_dir)");
    rep->add_option("--kind", kinds,
                    "normalized_heatmap, relative_curves, runtime_profile, co2_table (default: all)")
        ->delimiter(',');
    rep_emission.add_to(rep);

    // estimate-co2
    auto* co2 = app.add_subcommand("estimate-co2", "CO2e savings of running at a fraction of full runtime");
    double relative_runtime = 1.0;
    EmissionFlags co2_emission;
    co2->add_option("--relative-runtime", relative_runtime, "Runtime as a fraction of the full run")
        ->required();
    co2_emission.add_to(co2);

    try {
        if (argc <= 1) throw CLI::RequiredError("A subcommand");
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (stats->parsed()) {
            auto d = stats_in.load();
            const auto base = entropy_base == "2" ? EntropyBase::Two : EntropyBase::Natural;
            if (stats_k) {
                auto [pruned, report] = preprocess(d, PruneConfig{*stats_k});
                d = std::move(pruned);
            }
            print_table(out, {kStatsHeader, stats_row(d.name(), compute_stats(d, base))}, pretty);
            return 0;
        }

        if (prep->parsed()) {
            if (out_path.empty()) throw ConfigError("prep needs --out <path>");
            auto [pruned, report] = preprocess(prep_in.load(), PruneConfig{prep_k});
            const std::filesystem::path target(out_path);
            if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
            write_dataset(target, pruned);
            nlohmann::json j{{"k", prep_k},
                             {"duplicates_removed", report.duplicates_removed},
                             {"pairs_averaged", report.pairs_averaged},
                             {"kcore_rounds", report.kcore_rounds},
                             {"before", stats_json(report.before)},
                             {"after", stats_json(report.after)}};
            std::ofstream(target.string() + ".report.json") << j.dump(2) << '\n';
            if (pretty)
                print_table(out,
                            {kStatsHeader, stats_row("before", report.before),
                             stats_row("after", report.after)},
                            true);
            else
                out << j.dump() << '\n';
            return 0;
        }

        if (split->parsed()) {
            if (out_path.empty()) throw ConfigError("split needs --out <dir>");
            auto d = split_in.load();
            if (split_k > 0) d = preprocess(d, PruneConfig{split_k}).first;
            SplitConfig sc;
            sc.seed = seed.value_or(42);
            DownsamplePlan plan{method_from_string(split_method), split_portions, sc.seed};
            auto bundles = make_splits(d, sc, plan);
            const std::filesystem::path dir(out_path);
            std::filesystem::create_directories(dir);
            std::vector<std::vector<std::string>> manifest{
                {"method", "portion", "seed", "part", "rows", "file", "fnv1a64"}};
            const auto& rows = d.interactions();
            for (const auto& b : bundles) {
                const std::vector<std::pair<std::string, const InteractionIds*>> parts{
                    {"train", &b.train}, {"val", b.val.get()}, {"test", b.test.get()}};
                for (const auto& [part, ids] : parts) {
                    std::vector<Interaction> subset;
                    subset.reserve(ids->size());
                    for (auto id : *ids) subset.push_back(rows[id]);
                    const auto file = to_string(plan.method) + "_p" + portion_tag(b.portion) + "_s" +
                                      std::to_string(sc.seed) + "_" + part + ".tsv";
                    write_dataset(dir / file, Dataset::from_subset(d, subset));
                    manifest.push_back({to_string(plan.method), portion_tag(b.portion),
                                        std::to_string(sc.seed), part, std::to_string(ids->size()),
                                        file, file_checksum(dir / file)});
                }
            }
            std::ofstream mf(dir / "manifest.tsv", std::ios::binary);
            print_table(mf, manifest, false);
            print_table(out, manifest, pretty);
            return 0;
        }

        if (run->parsed()) {
            if (config_path.empty()) throw ConfigError("run needs --config <path>");
            auto cfg = ExperimentConfig::load(config_path);
            if (seed) cfg.seeds = {*seed};
            if (!out_path.empty()) cfg.output_dir = out_path;
            if (parallelism) cfg.parallelism = *parallelism;
            if (cfg.output_dir.empty()) throw ConfigError("no output directory (set output_dir or --out)");
            ResultStore store;
            if (!fresh && ResultStore::exists(cfg.output_dir)) store = ResultStore::load(cfg.output_dir);
            store = resume(cfg, std::move(store));
            print_table(out,
                        {{"output_dir", "records", "skips", "cells", "config_hash"},
                         {cfg.output_dir, std::to_string(store.records.size()),
                          std::to_string(store.skips.size()),
                          std::to_string(cfg.grid_cardinality()), store.config_hash}},
                        pretty);
            return 0;
        }

        if (rep->parsed()) {
            if (results_dir.empty()) {
                if (config_path.empty()) throw ConfigError("report needs --results <dir> or --config");
                results_dir = ExperimentConfig::load(config_path).output_dir;
            }
            if (out_path.empty()) out_path = (std::filesystem::path(results_dir) / "reports").string();
            auto store = ResultStore::load(results_dir);
            std::vector<ReportKind> selected;
            if (kinds.empty())
                selected = {ReportKind::NormalizedHeatmap, ReportKind::RelativeCurves,
                            ReportKind::RuntimeProfile, ReportKind::Co2Table};
            for (const auto& k : kinds) selected.push_back(report_kind_from_string(k));
            rep_emission.model.validate();
            for (auto kind : selected)
                for (const auto& path : report(store, kind, out_path, rep_emission.model))
                    out << path.string() << '\n';
            return 0;
        }

        if (co2->parsed()) {
            const double kg = co2e_savings_kg(relative_runtime, co2_emission.model);
            if (pretty)
                out << "relative runtime " << relative_runtime << " -> " << fixed(kg, 2)
                    << " kg CO2e saved\n";
            else
                out << fixed(kg, 2) << " kg\n";
            return 0;
        }
    } catch (const ParseError& e) {
        err << "error: line " << e.line() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace greenrec
