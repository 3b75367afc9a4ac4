#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steerbench/backend.hpp"
#include "steerbench/metrics.hpp"
#include "steerbench/persona.hpp"
#include "steerbench/profile.hpp"

namespace steerbench {

struct ExperimentConfig {
    int experiment_trials = 5;        // profiling resamples per dimension
    int profiling_per_direction = 25; // polar questions per valence per sample
    int steering_trials = 3;          // steering-statement resamples per cell
    std::vector<int> budgets = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<std::string> dimensions; // empty = every prepared dimension
    std::vector<BackendConfig> backends;
    std::uint64_t master_seed = 0;
    std::filesystem::path dataset_dir = "dataset";
    std::filesystem::path output_dir = "out";
    std::optional<std::filesystem::path> cache_dir;
    BetaPrior prior;
    int wasserstein_resolution = kDefaultWassersteinResolution;
    std::optional<std::filesystem::path> category_map_path;

    // data-preparation knobs, kept here so one config file drives everything
    FilterPolicy filter;
    int steering_per_direction = 100;

    void validate() const;
    std::string digest() const; // hash of the canonical JSON form
};

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// ─── Prepared dataset bundle ─────────────────────────────────────────────

struct DatasetBundle {
    std::map<std::string, DimensionDataset> dimensions;
    std::map<std::string, std::string> digests; // dimension -> file digest
};

struct PrepareSummary {
    int raw_files = 0;
    int raw_records = 0;
    int skipped_records = 0; // lenient mode only
    std::vector<std::string> kept_dimensions;
};

// Parses every *.jsonl under raw_dir (dimension = filename stem), applies the
// filter policy, splits deterministically, and persists one JSON file per
// dimension plus a digest manifest and the processed CSV export.
PrepareSummary prepare_data(const std::filesystem::path& raw_dir,
                            const std::filesystem::path& dataset_dir, const FilterPolicy& policy,
                            std::uint64_t seed, int steering_per_direction = 100,
                            ParseMode mode = ParseMode::strict);

// Loads prepared dimensions (all, or only `only` when non-empty).
DatasetBundle load_dataset(const std::filesystem::path& dataset_dir,
                           const std::vector<std::string>& only = {});

// ─── Run state ───────────────────────────────────────────────────────────

// One unit of scoring work: a baseline cell covers (dimension, trial); a
// steered cell covers (dimension, direction, budget, trial) with all
// steering trials pooled.
std::string cell_key(const std::string& dimension, const std::optional<Valence>& direction,
                     int budget_k, int experiment_trial);

struct RunManifest {
    std::string config_digest;
    std::string model;
    std::map<std::string, std::string> dataset_digests;
    std::map<std::string, int> cells; // key -> persisted response count
    std::vector<std::string> failed_dimensions;
    std::string created_at;
    std::string updated_at;

    static RunManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Called after every persisted cell; throwing aborts the run, which can
// later resume from the manifest.
using ProgressHook = std::function<void(const std::string& cell, int done, int total)>;

// One profile as it appears in profiles.jsonl; context is "baseline",
// "positive"/"negative" (steered), or "max_positive"/"max_negative".
struct StoredProfile {
    std::string context;
    int budget_k = 0;
    int experiment_trial = 0;
    BetaProfile profile;
};

struct DimensionOutcome {
    std::string dimension;
    std::map<int, BetaProfile> baseline_by_trial;
    ProfileAggregate baseline;
    std::vector<StoredProfile> profiles;    // every estimated profile, in scoring order
    std::vector<SteerabilityIndex> indices; // every (direction, budget, trial)
    std::vector<SteerabilityCurve> curves;  // positive and negative
};

struct ModelRunResult {
    std::string model;
    std::map<std::string, DimensionOutcome> dimensions;
    std::vector<std::string> failures; // "dimension: reason"
    long backend_calls = 0;
};

enum class CellPolicy {
    score_missing,   // run mode: score whatever the manifest lacks
    require_complete // report mode: a missing cell is an error
};

ModelRunResult run_model(const ExperimentConfig& config, const BackendConfig& backend_config,
                         const DatasetBundle& dataset, CellPolicy policy,
                         const ProgressHook& hook = {});

struct RunResult {
    std::vector<ModelRunResult> models;
    std::vector<std::string> model_failures; // "model: reason"
};

// The full sweep: every backend, every prepared dimension. Artifacts land
// under output_dir/<model>/{data,responses,profiles,metrics,report}.
RunResult run_benchmark(const ExperimentConfig& config, const ProgressHook& hook = {});

struct ReportFormats {
    bool tables_csv = true;
    bool indices_json = true;
    bool markdown = true;
    bool svg = true;
};

// Recomputes metrics and report files from persisted responses. Throws
// Error listing the missing cells when the run is incomplete.
void generate_reports(const ExperimentConfig& config, const BackendConfig& backend_config,
                      const ReportFormats& formats);

void write_model_artifacts(const ExperimentConfig& config, const ModelRunResult& result,
                           const ReportFormats& formats);

std::filesystem::path model_output_dir(const ExperimentConfig& config,
                                       const std::string& model_name);

} // namespace steerbench
