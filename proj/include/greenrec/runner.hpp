#ifndef GREENREC_RUNNER_HPP_
#define GREENREC_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "greenrec/evaluation.hpp"
#include "greenrec/ingest.hpp"
#include "greenrec/sampling.hpp"
#include "greenrec/sustainability.hpp"

namespace greenrec {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kConfigVersion = 1;

struct DatasetSpec {
    std::string name;
    std::string path;
    std::string schema = "ml100k";
    Feedback feedback = Feedback::Explicit;
    int prune_k = 10;
};

struct AlgorithmGrid {
    AlgorithmKind kind = AlgorithmKind::Popularity;
    std::map<std::string, std::vector<double>> grid;  // tuned on validation nDCG
    Hyperparams fixed;                                 // applied to every combination

    std::vector<Hyperparams> combinations() const;
};

enum class TuningMode {
    PerPortion,  // grid search on every portion's validation set
    ReuseFull,   // tune at portion 1.0, reuse the choice at smaller portions
};

/// Config file (JSON):
///
///   {
///     "version": 1,
///     "datasets": [{"name": "ml100k", "path": "u.data", "schema": "ml100k",
///                   "feedback": "explicit", "prune_k": 10}],
///     "methods": ["user_based", "user_subset"],
///     "portions": [0.1, 0.5, 1.0],
///     "algorithms": ["Popularity",
///                    {"kind": "ItemKNN", "grid": {"neighbors": [20, 50]},
///                     "params": {"center": 1}}],
///     "seeds": [21, 42, 63, 84, 105],
///     "split": {"train": 0.8, "val": 0.1, "test": 0.1},
///     "tuning": "per_portion",
///     "exclude_validation": false,
///     "k": 10,
///     "output_dir": "results",
///     "parallelism": 1
///   }
///
/// An algorithm without "grid" uses default_grid(kind). Relative dataset
/// paths are resolved against the config file's directory by load().
struct ExperimentConfig {
    std::vector<DatasetSpec> datasets;
    std::vector<DownsampleMethod> methods{DownsampleMethod::UserBased};
    std::vector<double> portions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<AlgorithmGrid> algorithms;
    std::vector<std::uint64_t> seeds{21, 42, 63, 84, 105};
    double train_frac = 0.8;
    double val_frac = 0.1;
    double test_frac = 0.1;
    TuningMode tuning = TuningMode::PerPortion;
    bool exclude_validation = false;
    std::size_t k = 10;
    std::string output_dir;
    std::size_t parallelism = 1;

    void validate() const;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    std::string to_json_text() const;

    /// JSON of every field that influences results (not output_dir or
    /// parallelism), and its FNV-1a hash in hex.
    std::string canonical() const;
    std::string hash() const;

    /// datasets x methods x portions x algorithms x seeds.
    std::size_t grid_cardinality() const;
};

struct SkipEntry {
    std::string dataset;
    AlgorithmKind algorithm;
    DownsampleMethod method;
    double portion;
    std::uint64_t seed;
    std::string reason;
};

/// Records plus manifest. On disk (one directory):
///   records.tsv   dataset algorithm method portion seed hyperparams ndcg_at_10 n_eval_users
///   timings.tsv   dataset algorithm method portion seed hyperparams runtime_s
///   skips.tsv     dataset algorithm method portion seed reason
///   manifest.json config hash, toolkit version, timestamps, counts, config
/// Rows are sorted by (dataset, method, algorithm, portion, seed). Wall-clock
/// runtimes live in timings.tsv so that records.tsv is reproducible byte for
/// byte.
struct ResultStore {
    std::vector<MetricRecord> records;
    std::vector<SkipEntry> skips;
    std::string config_hash;
    std::string config_json;
    std::string toolkit_version = kToolkitVersion;
    std::string created_at;
    std::string updated_at;

    void sort();
    void save(const std::filesystem::path& dir) const;
    static ResultStore load(const std::filesystem::path& dir);
    static bool exists(const std::filesystem::path& dir);
};

/// Runs every cell of the grid. Writes the store to cfg.output_dir when it is
/// set. Per-cell failures become skip entries; config errors throw before any
/// work.
ResultStore run_experiment(const ExperimentConfig& cfg);

/// Runs only the cells `store` lacks. Throws ConfigError when the store was
/// produced by a different configuration.
ResultStore resume(const ExperimentConfig& cfg, ResultStore store);

enum class ReportKind { NormalizedHeatmap, RelativeCurves, RuntimeProfile, Co2Table };

ReportKind report_kind_from_string(std::string_view s);
std::string to_string(ReportKind kind);

struct Co2Row {
    double portion;
    double relative_runtime;
    double savings_kg;
};

std::vector<Co2Row> co2_table(const RuntimeProfile& profile, const EmissionModel& model = {});

/// Normalized seed-mean nDCG@10 matrix for one dataset and method:
/// rows = algorithms, columns = portions, values in [0, 1].
struct Heatmap {
    std::string dataset;
    DownsampleMethod method;
    std::vector<AlgorithmKind> algorithms;
    std::vector<double> portions;
    std::vector<std::vector<double>> values;  // NaN where a cell is missing
};

std::vector<Heatmap> normalized_heatmaps(std::span<const MetricRecord> records);

/// Writes the tables for `kind` into `out_dir` (TSV plus one JSON plot-data
/// file) and returns the paths written.
std::vector<std::filesystem::path> report(const ResultStore& store, ReportKind kind,
                                          const std::filesystem::path& out_dir,
                                          const EmissionModel& model = {});

}  // namespace greenrec

#endif  // GREENREC_RUNNER_HPP_
