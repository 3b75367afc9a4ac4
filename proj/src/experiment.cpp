#include "steerbench/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "steerbench/digest.hpp"
#include "steerbench/errors.hpp"
#include "steerbench/format.hpp"
#include "steerbench/prompts.hpp"
#include "steerbench/report.hpp"
#include "steerbench/rng.hpp"

namespace fs = std::filesystem;

namespace steerbench {

namespace {

std::string sanitize_name(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out.empty() ? std::string("_") : out;
}

std::string iso_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void require_known_keys(const nlohmann::json& object, const char* what,
                        std::initializer_list<const char*> known) {
    for (const auto& [key, value] : object.items()) {
        if (std::find_if(known.begin(), known.end(),
                         [&key](const char* k) { return key == k; }) == known.end())
            throw ConfigError(std::string("unknown key '") + key + "' in " + what);
    }
}

// ─── Backend / synthetic spec serialization ──────────────────────────────

nlohmann::json synthetic_dim_to_json(const SyntheticDimension& dim) {
    return {{"baseline", dim.baseline},
            {"saturation_pos", dim.response.saturation_pos},
            {"saturation_neg", dim.response.saturation_neg},
            {"rate", dim.response.rate}};
}

SyntheticDimension synthetic_dim_from_json(const nlohmann::json& doc) {
    require_known_keys(doc, "synthetic dimension",
                       {"baseline", "saturation_pos", "saturation_neg", "rate"});
    SyntheticDimension dim;
    dim.baseline = doc.value("baseline", dim.baseline);
    dim.response.saturation_pos = doc.value("saturation_pos", dim.response.saturation_pos);
    dim.response.saturation_neg = doc.value("saturation_neg", dim.response.saturation_neg);
    dim.response.rate = doc.value("rate", dim.response.rate);
    return dim;
}

nlohmann::json synthetic_to_json(const SyntheticModelSpec& spec) {
    nlohmann::json dims = nlohmann::json::object();
    for (const auto& [name, dim] : spec.dimensions) dims[name] = synthetic_dim_to_json(dim);
    nlohmann::json doc = {{"noise_seed", spec.noise_seed}, {"dimensions", dims}};
    doc["fallback"] = spec.fallback ? synthetic_dim_to_json(*spec.fallback)
                                    : nlohmann::json(nullptr);
    return doc;
}

SyntheticModelSpec synthetic_from_json(const nlohmann::json& doc) {
    require_known_keys(doc, "synthetic spec", {"noise_seed", "dimensions", "fallback"});
    SyntheticModelSpec spec;
    spec.noise_seed = doc.value("noise_seed", std::uint64_t{0});
    if (doc.contains("dimensions"))
        for (const auto& [name, dim] : doc.at("dimensions").items())
            spec.dimensions[name] = synthetic_dim_from_json(dim);
    if (doc.contains("fallback") && !doc.at("fallback").is_null())
        spec.fallback = synthetic_dim_from_json(doc.at("fallback"));
    return spec;
}

nlohmann::json backend_to_json(const BackendConfig& backend) {
    nlohmann::json doc = {
        {"kind", to_string(backend.kind)},
        {"model_name", backend.model_name},
        {"request_timeout_ms", backend.request_timeout.count()},
        {"max_in_flight", backend.max_in_flight},
        {"top_logprobs", backend.top_logprobs},
        {"max_attempts", backend.max_attempts},
    };
    doc["endpoint_url"] =
        backend.endpoint_url ? nlohmann::json(*backend.endpoint_url) : nlohmann::json(nullptr);
    doc["cache_dir"] = backend.cache_dir ? nlohmann::json(backend.cache_dir->generic_string())
                                         : nlohmann::json(nullptr);
    doc["api_key_env"] =
        backend.api_key_env ? nlohmann::json(*backend.api_key_env) : nlohmann::json(nullptr);
    doc["synthetic"] = synthetic_to_json(backend.synthetic);
    return doc;
}

BackendConfig backend_from_json(const nlohmann::json& doc) {
    require_known_keys(doc, "backend config",
                       {"kind", "model_name", "request_timeout_ms", "max_in_flight",
                        "top_logprobs", "max_attempts", "endpoint_url", "cache_dir",
                        "api_key_env", "synthetic"});
    BackendConfig backend;
    backend.kind = backend_kind_from_string(doc.value("kind", "synthetic"));
    backend.model_name = doc.value("model_name", backend.model_name);
    backend.request_timeout =
        std::chrono::milliseconds(doc.value("request_timeout_ms",
                                            backend.request_timeout.count()));
    backend.max_in_flight = doc.value("max_in_flight", backend.max_in_flight);
    backend.top_logprobs = doc.value("top_logprobs", backend.top_logprobs);
    backend.max_attempts = doc.value("max_attempts", backend.max_attempts);
    if (doc.contains("endpoint_url") && !doc.at("endpoint_url").is_null())
        backend.endpoint_url = doc.at("endpoint_url").get<std::string>();
    if (doc.contains("cache_dir") && !doc.at("cache_dir").is_null())
        backend.cache_dir = fs::path(doc.at("cache_dir").get<std::string>());
    if (doc.contains("api_key_env") && !doc.at("api_key_env").is_null())
        backend.api_key_env = doc.at("api_key_env").get<std::string>();
    if (doc.contains("synthetic")) backend.synthetic = synthetic_from_json(doc.at("synthetic"));
    return backend;
}

nlohmann::json filter_to_json(const FilterPolicy& policy) {
    nlohmann::json doc = {{"min_confidence", policy.min_confidence},
                          {"min_count_per_direction", policy.min_count_per_direction},
                          {"prune_to", policy.prune_to}};
    if (policy.dimension_allowlist) {
        doc["dimension_allowlist"] =
            std::vector<std::string>(policy.dimension_allowlist->begin(),
                                     policy.dimension_allowlist->end());
    } else {
        doc["dimension_allowlist"] = nullptr;
    }
    return doc;
}

FilterPolicy filter_from_json(const nlohmann::json& doc) {
    require_known_keys(doc, "filter policy",
                       {"min_confidence", "min_count_per_direction", "prune_to",
                        "dimension_allowlist"});
    FilterPolicy policy;
    policy.min_confidence = doc.value("min_confidence", policy.min_confidence);
    policy.min_count_per_direction =
        doc.value("min_count_per_direction", policy.min_count_per_direction);
    policy.prune_to = doc.value("prune_to", policy.prune_to);
    if (doc.contains("dimension_allowlist") && !doc.at("dimension_allowlist").is_null()) {
        std::set<std::string> allow;
        for (const auto& name : doc.at("dimension_allowlist"))
            allow.insert(name.get<std::string>());
        policy.dimension_allowlist = std::move(allow);
    }
    return policy;
}

nlohmann::json config_to_json_doc(const ExperimentConfig& config, bool include_paths) {
    nlohmann::json doc = {
        {"schema_version", 1},
        {"experiment_trials", config.experiment_trials},
        {"profiling_per_direction", config.profiling_per_direction},
        {"steering_trials", config.steering_trials},
        {"budgets", config.budgets},
        {"dimensions", config.dimensions},
        {"master_seed", config.master_seed},
        {"prior", {{"alpha", config.prior.alpha}, {"beta", config.prior.beta}}},
        {"wasserstein_resolution", config.wasserstein_resolution},
        {"filter", filter_to_json(config.filter)},
        {"steering_per_direction", config.steering_per_direction},
    };
    nlohmann::json backends = nlohmann::json::array();
    for (const BackendConfig& backend : config.backends)
        backends.push_back(backend_to_json(backend));
    doc["backends"] = backends;
    if (include_paths) {
        doc["dataset_dir"] = config.dataset_dir.generic_string();
        doc["output_dir"] = config.output_dir.generic_string();
        doc["cache_dir"] = config.cache_dir
                               ? nlohmann::json(config.cache_dir->generic_string())
                               : nlohmann::json(nullptr);
        doc["category_map_path"] =
            config.category_map_path
                ? nlohmann::json(config.category_map_path->generic_string())
                : nlohmann::json(nullptr);
    }
    return doc;
}

} // namespace

void ExperimentConfig::validate() const {
    if (experiment_trials < 1) throw ConfigError("experiment_trials must be >= 1");
    if (profiling_per_direction < 1) throw ConfigError("profiling_per_direction must be >= 1");
    if (steering_trials < 1) throw ConfigError("steering_trials must be >= 1");
    if (budgets.empty()) throw ConfigError("budgets must not be empty");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (budgets[i] < 1) throw ConfigError("budgets must be >= 1");
        if (i > 0 && budgets[i] <= budgets[i - 1])
            throw ConfigError("budgets must be strictly increasing");
    }
    if (budgets.back() > steering_per_direction)
        throw ConfigError("largest budget " + std::to_string(budgets.back()) +
                          " exceeds the steering split size " +
                          std::to_string(steering_per_direction));
    if (wasserstein_resolution < 2) throw ConfigError("wasserstein_resolution must be >= 2");
    prior.validate();
    filter.validate();
    if (steering_per_direction < 0) throw ConfigError("steering_per_direction must be >= 0");
    for (const BackendConfig& backend : backends) backend.validate();
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
    return config_to_json_doc(config, /*include_paths=*/true).dump(2) + "\n";
}

std::string ExperimentConfig::digest() const {
    // Filesystem locations don't change what the experiment computes, so
    // they stay out of the identity hash (a bundle can be relocated).
    return sha256_hex(config_to_json_doc(*this, /*include_paths=*/false).dump());
}

ExperimentConfig experiment_config_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    require_known_keys(doc, "experiment config",
                       {"schema_version", "experiment_trials", "profiling_per_direction",
                        "steering_trials", "budgets", "dimensions", "master_seed", "prior",
                        "wasserstein_resolution", "filter", "steering_per_direction",
                        "backends", "dataset_dir", "output_dir", "cache_dir",
                        "category_map_path"});
    ExperimentConfig config;
    config.experiment_trials = doc.value("experiment_trials", config.experiment_trials);
    config.profiling_per_direction =
        doc.value("profiling_per_direction", config.profiling_per_direction);
    config.steering_trials = doc.value("steering_trials", config.steering_trials);
    if (doc.contains("budgets")) config.budgets = doc.at("budgets").get<std::vector<int>>();
    if (doc.contains("dimensions"))
        config.dimensions = doc.at("dimensions").get<std::vector<std::string>>();
    config.master_seed = doc.value("master_seed", config.master_seed);
    if (doc.contains("prior")) {
        require_known_keys(doc.at("prior"), "prior", {"alpha", "beta"});
        config.prior.alpha = doc.at("prior").value("alpha", config.prior.alpha);
        config.prior.beta = doc.at("prior").value("beta", config.prior.beta);
    }
    config.wasserstein_resolution =
        doc.value("wasserstein_resolution", config.wasserstein_resolution);
    if (doc.contains("filter")) config.filter = filter_from_json(doc.at("filter"));
    config.steering_per_direction =
        doc.value("steering_per_direction", config.steering_per_direction);
    if (doc.contains("backends"))
        for (const auto& backend : doc.at("backends"))
            config.backends.push_back(backend_from_json(backend));
    if (doc.contains("dataset_dir"))
        config.dataset_dir = fs::path(doc.at("dataset_dir").get<std::string>());
    if (doc.contains("output_dir"))
        config.output_dir = fs::path(doc.at("output_dir").get<std::string>());
    if (doc.contains("cache_dir") && !doc.at("cache_dir").is_null())
        config.cache_dir = fs::path(doc.at("cache_dir").get<std::string>());
    if (doc.contains("category_map_path") && !doc.at("category_map_path").is_null())
        config.category_map_path = fs::path(doc.at("category_map_path").get<std::string>());
    return config;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    return experiment_config_from_json(read_file(path));
}

// ─── Data preparation ────────────────────────────────────────────────────

PrepareSummary prepare_data(const fs::path& raw_dir, const fs::path& dataset_dir,
                            const FilterPolicy& policy, std::uint64_t seed,
                            int steering_per_direction, ParseMode mode) {
    policy.validate();
    if (!fs::is_directory(raw_dir))
        throw DataError("raw data directory " + raw_dir.string() + " does not exist");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(raw_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    PrepareSummary summary;
    summary.raw_files = static_cast<int>(files.size());
    std::vector<PersonaStatement> statements;
    for (const fs::path& file : files) {
        std::ifstream in(file);
        if (!in) throw DataError("cannot read " + file.string());
        ParseResult parsed = parse_raw_records(in, file.stem().string(), mode);
        summary.raw_records += static_cast<int>(parsed.statements.size());
        summary.skipped_records += static_cast<int>(parsed.issues.size());
        for (const ParseIssue& issue : parsed.issues)
            std::cerr << "warning: " << file.stem().string() << ":" << issue.line << ": "
                      << issue.message << " (record skipped)\n";
        std::move(parsed.statements.begin(), parsed.statements.end(),
                  std::back_inserter(statements));
    }

    const PrunedCorpus pruned = filter_dimensions(statements, policy);
    const std::map<std::string, DimensionDataset> splits =
        split_dataset(pruned, seed, steering_per_direction);

    fs::create_directories(dataset_dir / "processed");
    nlohmann::json dim_entries = nlohmann::json::object();
    for (const auto& [dimension, dataset] : splits) {
        const std::string content = dataset_to_json(dataset);
        const std::string file = "processed/" + sanitize_name(dimension) + ".json";
        write_file_atomic(dataset_dir / file, content);
        dim_entries[dimension] = {{"file", file}, {"digest", sha256_hex(content)}};
        summary.kept_dimensions.push_back(dimension);
    }

    {
        std::ostringstream csv;
        write_processed_csv(csv, pruned);
        write_file_atomic(dataset_dir / "processed_corpus.csv", csv.str());
    }

    const nlohmann::json manifest = {
        {"schema_version", 1},
        {"seed", seed},
        {"steering_per_direction", steering_per_direction},
        {"filter", filter_to_json(policy)},
        {"dimensions", dim_entries},
    };
    write_file_atomic(dataset_dir / "dataset_manifest.json", manifest.dump(2) + "\n");
    return summary;
}

DatasetBundle load_dataset(const fs::path& dataset_dir, const std::vector<std::string>& only) {
    const fs::path manifest_path = dataset_dir / "dataset_manifest.json";
    if (!fs::exists(manifest_path))
        throw DataError("no prepared dataset at " + dataset_dir.string() +
                        " (run prepare-data first)");
    const nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path));

    std::map<std::string, std::pair<std::string, std::string>> listed; // dim -> (file, digest)
    for (const auto& [dimension, entry] : manifest.at("dimensions").items())
        listed[dimension] = {entry.at("file").get<std::string>(),
                             entry.at("digest").get<std::string>()};

    std::vector<std::string> wanted;
    if (only.empty()) {
        for (const auto& [dimension, unused] : listed) wanted.push_back(dimension);
    } else {
        for (const std::string& dimension : only) {
            if (!listed.count(dimension))
                throw DataError("dimension '" + dimension + "' is not in the prepared dataset");
            wanted.push_back(dimension);
        }
    }

    DatasetBundle bundle;
    for (const std::string& dimension : wanted) {
        const auto& [file, recorded_digest] = listed.at(dimension);
        const std::string content = read_file(dataset_dir / file);
        const std::string digest = sha256_hex(content);
        if (digest != recorded_digest)
            throw DataError("prepared file for '" + dimension +
                            "' does not match its manifest digest; re-run prepare-data");
        bundle.dimensions[dimension] = dataset_from_json(content);
        bundle.digests[dimension] = digest;
    }
    return bundle;
}

// ─── Manifest ────────────────────────────────────────────────────────────

std::string cell_key(const std::string& dimension, const std::optional<Valence>& direction,
                     int budget_k, int experiment_trial) {
    const std::string context = direction ? to_string(*direction) : "baseline";
    return dimension + "|" + context + "|k" + std::to_string(budget_k) + "|t" +
           std::to_string(experiment_trial);
}

RunManifest RunManifest::load(const fs::path& path) {
    const nlohmann::json doc = nlohmann::json::parse(read_file(path));
    RunManifest manifest;
    manifest.config_digest = doc.at("config_digest").get<std::string>();
    manifest.model = doc.at("model").get<std::string>();
    if (doc.contains("dataset_digests"))
        for (const auto& [dimension, digest] : doc.at("dataset_digests").items())
            manifest.dataset_digests[dimension] = digest.get<std::string>();
    if (doc.contains("cells"))
        for (const auto& [key, count] : doc.at("cells").items())
            manifest.cells[key] = count.get<int>();
    if (doc.contains("failed_dimensions"))
        manifest.failed_dimensions =
            doc.at("failed_dimensions").get<std::vector<std::string>>();
    manifest.created_at = doc.value("created_at", "");
    manifest.updated_at = doc.value("updated_at", "");
    return manifest;
}

void RunManifest::save(const fs::path& path) const {
    const nlohmann::json doc = {
        {"schema_version", 1},
        {"config_digest", config_digest},
        {"model", model},
        {"dataset_digests", dataset_digests},
        {"cells", cells},
        {"failed_dimensions", failed_dimensions},
        {"created_at", created_at},
        {"updated_at", updated_at},
    };
    write_file_atomic(path, doc.dump(2) + "\n");
}

// ─── Answer record persistence ───────────────────────────────────────────

namespace {

nlohmann::json record_to_json(const AnswerRecord& record) {
    return {{"answer", to_string(record.answer)},
            {"logprob_gap", record.logprob_gap},
            {"valence", to_string(record.valence)},
            {"confidence", record.confidence},
            {"dimension", record.dimension},
            {"budget_k", record.budget_k},
            {"experiment_trial", record.trials.experiment_trial},
            {"steering_trial", record.trials.steering_trial}};
}

AnswerRecord record_from_json(const nlohmann::json& doc) {
    AnswerRecord record;
    record.answer = answer_from_string(doc.at("answer").get<std::string>());
    record.logprob_gap = doc.at("logprob_gap").get<double>();
    record.valence = valence_from_string(doc.at("valence").get<std::string>());
    record.confidence = doc.at("confidence").get<double>();
    record.dimension = doc.at("dimension").get<std::string>();
    record.budget_k = doc.at("budget_k").get<int>();
    record.trials.experiment_trial = doc.at("experiment_trial").get<int>();
    record.trials.steering_trial = doc.at("steering_trial").get<int>();
    return record;
}

void write_answer_records(const fs::path& path, const std::string& key,
                          const std::vector<AnswerRecord>& records) {
    std::ostringstream out;
    out << nlohmann::json({{"schema_version", 1}, {"cell", key}}).dump() << '\n';
    for (const AnswerRecord& record : records) out << record_to_json(record).dump() << '\n';
    write_file_atomic(path, out.str());
}

std::vector<AnswerRecord> load_answer_records(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read responses file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty responses file " + path.string());
    const nlohmann::json header = nlohmann::json::parse(line);
    if (header.value("schema_version", 0) != 1)
        throw DataError("unsupported responses schema in " + path.string());
    std::vector<AnswerRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return records;
}

// ─── Scoring engine ──────────────────────────────────────────────────────

struct RunState {
    const ExperimentConfig& config;
    const BackendConfig& backend_config;
    Backend* backend; // null in report mode
    fs::path out_dir;
    RunManifest manifest;
    fs::path manifest_path;
    int done_cells = 0;
    int total_cells = 0;
    const ProgressHook* hook;
};

// Carrier that lets a throwing progress hook abort the whole run instead of
// being absorbed by the per-dimension failure isolation.
struct HookAbort {
    std::exception_ptr reason;
};

std::vector<AnswerRecord> ensure_cell(RunState& state, const std::string& key,
                                      const std::function<std::vector<AnswerRecord>()>& score) {
    const fs::path file = state.out_dir / "responses" / (sanitize_name(key) + ".jsonl");
    std::vector<AnswerRecord> records;
    const auto it = state.manifest.cells.find(key);
    bool loaded = false;
    if (it != state.manifest.cells.end() && fs::exists(file)) {
        records = load_answer_records(file);
        if (static_cast<int>(records.size()) == it->second)
            loaded = true;
        else
            records.clear(); // partial/stale cell: rescore it
    }
    if (!loaded) {
        if (state.backend == nullptr)
            throw Error("responses for cell '" + key +
                        "' are missing or stale; re-run the benchmark before reporting");
        records = score();
        write_answer_records(file, key, records);
        state.manifest.cells[key] = static_cast<int>(records.size());
        state.manifest.updated_at = iso_now();
        state.manifest.save(state.manifest_path);
    }
    ++state.done_cells;
    if (state.hook && *state.hook) {
        try {
            (*state.hook)(key, state.done_cells, state.total_cells);
        } catch (...) {
            throw HookAbort{std::current_exception()};
        }
    }
    return records;
}

std::vector<PersonaStatement> draw_profiling_sample(const DimensionDataset& dataset, int per_direction,
                                                    std::uint64_t seed) {
    Rng rng(seed);
    auto draw = [&rng, per_direction](const std::vector<PersonaStatement>& pool) {
        const auto indices =
            rng.sample_indices(pool.size(), static_cast<std::size_t>(per_direction));
        std::vector<PersonaStatement> sample;
        sample.reserve(indices.size());
        for (std::size_t i : indices) sample.push_back(pool[i]);
        return sample;
    };
    std::vector<PersonaStatement> sample = draw(dataset.profiling_pos);
    std::vector<PersonaStatement> negatives = draw(dataset.profiling_neg);
    sample.insert(sample.end(), std::make_move_iterator(negatives.begin()),
                  std::make_move_iterator(negatives.end()));
    return sample;
}

DimensionOutcome run_dimension(RunState& state, const std::string& dimension,
                               const DimensionDataset& dataset) {
    const ExperimentConfig& config = state.config;
    const std::string& model = state.backend_config.model_name;

    const int per_direction = config.profiling_per_direction;
    if (static_cast<int>(dataset.profiling_pos.size()) < per_direction ||
        static_cast<int>(dataset.profiling_neg.size()) < per_direction)
        throw DataError("profiling split too small for profiling_per_direction=" +
                        std::to_string(per_direction));
    const int max_budget = config.budgets.back();
    if (static_cast<int>(dataset.steering_pos.size()) < max_budget ||
        static_cast<int>(dataset.steering_neg.size()) < max_budget)
        throw DataError("steering split too small for budget " + std::to_string(max_budget));

    DimensionOutcome outcome;
    outcome.dimension = dimension;

    for (int trial = 0; trial < config.experiment_trials; ++trial) {
        const std::uint64_t sample_seed = SeedKey(config.master_seed)
                                              .mix("profiling-sample")
                                              .mix(model)
                                              .mix(dimension)
                                              .mix(trial)
                                              .value();
        const std::vector<PersonaStatement> sample =
            draw_profiling_sample(dataset, per_direction, sample_seed);

        // baseline: scored once per trial, shared by both directions
        const std::string base_key = cell_key(dimension, std::nullopt, 0, trial);
        const std::vector<AnswerRecord> base_records =
            ensure_cell(state, base_key, [&]() {
                std::vector<AnswerRecord> records;
                const SteeringSpec spec{dimension, Valence::positive, 0};
                const ScoreContext context{dimension, std::nullopt, 0, {trial, 0}};
                for (const PersonaStatement& statement : sample)
                    records.push_back(score_polar_question(
                        *state.backend, build_prompt(dataset, spec, statement, 0), context));
                return records;
            });
        const ScoreContext base_context{dimension, std::nullopt, 0, {trial, 0}};
        const BetaProfile base_profile =
            estimate_profile(base_records, config.prior, base_context);
        outcome.baseline_by_trial.emplace(trial, base_profile);
        outcome.profiles.push_back({"baseline", 0, trial, base_profile});

        const BetaProfile max_pos =
            maximally_steered(sample, Valence::positive, config.prior,
                              {dimension, Valence::positive, 0, {trial, 0}});
        const BetaProfile max_neg =
            maximally_steered(sample, Valence::negative, config.prior,
                              {dimension, Valence::negative, 0, {trial, 0}});
        outcome.profiles.push_back({"max_positive", 0, trial, max_pos});
        outcome.profiles.push_back({"max_negative", 0, trial, max_neg});

        const Distribution base_dist(base_profile);
        const Distribution pos_dist(max_pos);
        const Distribution neg_dist(max_neg);
        const int resolution = config.wasserstein_resolution;
        const double normalizer = wasserstein(pos_dist, neg_dist, resolution);
        for (Valence direction : {Valence::positive, Valence::negative}) {
            const Distribution& target =
                direction == Valence::positive ? pos_dist : neg_dist;
            const double capacity = wasserstein(base_dist, target, resolution);
            for (int k : config.budgets) {
                const std::string key = cell_key(dimension, direction, k, trial);
                const std::vector<AnswerRecord> records =
                    ensure_cell(state, key, [&]() {
                        std::vector<AnswerRecord> cell;
                        const SteeringSpec spec{dimension, direction, k};
                        for (int s = 0; s < config.steering_trials; ++s) {
                            const std::uint64_t steer_seed =
                                SeedKey(config.master_seed)
                                    .mix("steering-sample")
                                    .mix(model)
                                    .mix(dimension)
                                    .mix(to_string(direction))
                                    .mix(k)
                                    .mix(trial)
                                    .mix(s)
                                    .value();
                            const ScoreContext context{dimension, direction, k, {trial, s}};
                            for (const PersonaStatement& statement : sample)
                                cell.push_back(score_polar_question(
                                    *state.backend,
                                    build_prompt(dataset, spec, statement, steer_seed),
                                    context));
                        }
                        return cell;
                    });
                const ScoreContext cell_context{dimension, direction, k, {trial, 0}};
                const BetaProfile steered =
                    estimate_profile(records, config.prior, cell_context);
                outcome.profiles.push_back({to_string(direction), k, trial, steered});
                const double residual =
                    wasserstein(Distribution(steered), target, resolution);
                outcome.indices.push_back(steerability_index_from(
                    capacity, residual, normalizer, direction, k, dimension, trial));
            }
        }
    }

    for (Valence direction : {Valence::positive, Valence::negative}) {
        std::vector<SteerabilityIndex> directional;
        for (const SteerabilityIndex& index : outcome.indices)
            if (index.direction == direction) directional.push_back(index);
        outcome.curves.push_back(build_curve(directional, config.budgets));
    }

    std::vector<BetaProfile> baselines;
    for (const auto& [trial, profile] : outcome.baseline_by_trial)
        baselines.push_back(profile);
    outcome.baseline = aggregate_trials(baselines);
    return outcome;
}

void write_profiling_samples(const RunState& state, const DatasetBundle& dataset) {
    nlohmann::json dims = nlohmann::json::object();
    for (const auto& [dimension, ds] : dataset.dimensions) {
        // A dimension whose profiling split can't cover the sample size is
        // skipped here; scoring reports it as a per-dimension failure.
        const int per_direction = state.config.profiling_per_direction;
        if (static_cast<int>(ds.profiling_pos.size()) < per_direction ||
            static_cast<int>(ds.profiling_neg.size()) < per_direction)
            continue;
        nlohmann::json trials = nlohmann::json::array();
        for (int trial = 0; trial < state.config.experiment_trials; ++trial) {
            const std::uint64_t seed = SeedKey(state.config.master_seed)
                                           .mix("profiling-sample")
                                           .mix(state.backend_config.model_name)
                                           .mix(dimension)
                                           .mix(trial)
                                           .value();
            nlohmann::json statements = nlohmann::json::array();
            for (const PersonaStatement& statement : draw_profiling_sample(
                     ds, state.config.profiling_per_direction, seed))
                statements.push_back({{"statement", statement.text},
                                      {"direction", to_string(statement.direction)},
                                      {"label_confidence", statement.label_confidence}});
            trials.push_back(std::move(statements));
        }
        dims[dimension] = std::move(trials);
    }
    const nlohmann::json doc = {{"schema_version", 1}, {"samples", dims}};
    write_file_atomic(state.out_dir / "data" / "profiling_samples.json", doc.dump(2) + "\n");
}

} // namespace

fs::path model_output_dir(const ExperimentConfig& config, const std::string& model_name) {
    return config.output_dir / sanitize_name(model_name);
}

ModelRunResult run_model(const ExperimentConfig& config, const BackendConfig& backend_config,
                         const DatasetBundle& dataset, CellPolicy policy,
                         const ProgressHook& hook) {
    config.validate();

    BackendConfig effective = backend_config;
    if (!effective.cache_dir && config.cache_dir) effective.cache_dir = config.cache_dir;
    // An unset synthetic noise seed follows the master seed, so changing the
    // master reshuffles synthetic answers too.
    if (effective.kind == BackendKind::synthetic && effective.synthetic.noise_seed == 0)
        effective.synthetic.noise_seed = config.master_seed;

    RunState state{config, effective, nullptr, model_output_dir(config, effective.model_name),
                   RunManifest{},  {},        0,       0,
                   &hook};
    state.manifest_path = state.out_dir / "manifest.json";
    for (const char* sub : {"data", "responses", "profiles", "metrics", "report"})
        fs::create_directories(state.out_dir / sub);

    if (fs::exists(state.manifest_path)) {
        state.manifest = RunManifest::load(state.manifest_path);
        if (state.manifest.config_digest != config.digest())
            throw ConfigError("output directory " + state.out_dir.string() +
                              " holds a run with a different config; use a fresh output dir");
        if (state.manifest.model != effective.model_name)
            throw ConfigError("output directory belongs to model '" + state.manifest.model +
                              "'");
        for (const auto& [dimension, digest] : dataset.digests) {
            const auto it = state.manifest.dataset_digests.find(dimension);
            if (it != state.manifest.dataset_digests.end() && it->second != digest)
                throw ConfigError("prepared data for '" + dimension +
                                  "' changed since this run started");
        }
    } else {
        state.manifest.config_digest = config.digest();
        state.manifest.model = effective.model_name;
        state.manifest.created_at = iso_now();
    }
    state.manifest.updated_at = iso_now();
    for (const auto& [dimension, digest] : dataset.digests)
        state.manifest.dataset_digests[dimension] = digest;
    state.manifest.failed_dimensions.clear();

    const int cells_per_dim =
        config.experiment_trials * (1 + 2 * static_cast<int>(config.budgets.size()));
    state.total_cells = cells_per_dim * static_cast<int>(dataset.dimensions.size());

    if (policy == CellPolicy::require_complete) {
        std::vector<std::string> missing;
        for (const auto& [dimension, ds] : dataset.dimensions)
            for (int trial = 0; trial < config.experiment_trials; ++trial) {
                auto check = [&](const std::string& key) {
                    if (!state.manifest.cells.count(key) ||
                        !fs::exists(state.out_dir / "responses" /
                                    (sanitize_name(key) + ".jsonl")))
                        missing.push_back(key);
                };
                check(cell_key(dimension, std::nullopt, 0, trial));
                for (Valence direction : {Valence::positive, Valence::negative})
                    for (int k : config.budgets)
                        check(cell_key(dimension, direction, k, trial));
            }
        if (!missing.empty()) {
            std::ostringstream message;
            message << "run bundle is incomplete; missing " << missing.size() << " cell(s):";
            for (const std::string& key : missing) message << ' ' << key << ';';
            throw Error(message.str());
        }
    }

    std::unique_ptr<Backend> backend;
    if (policy == CellPolicy::score_missing) {
        backend = make_backend(effective);
        state.backend = backend.get();
    }

    ModelRunResult result;
    result.model = effective.model_name;
    write_profiling_samples(state, dataset);

    for (const auto& [dimension, ds] : dataset.dimensions) {
        try {
            result.dimensions.emplace(dimension, run_dimension(state, dimension, ds));
        } catch (const HookAbort& abort) {
            // The manifest already records every persisted cell, so the run
            // can resume; surface the hook's own exception to the caller.
            std::rethrow_exception(abort.reason);
        } catch (const CapabilityError&) {
            throw; // the whole model sweep is futile without the capability
        } catch (const std::exception& e) {
            result.failures.push_back(dimension + ": " + e.what());
            std::cerr << "warning: skipping dimension " << dimension << ": " << e.what()
                      << '\n';
        }
    }

    state.manifest.failed_dimensions = result.failures;
    state.manifest.updated_at = iso_now();
    state.manifest.save(state.manifest_path);
    result.backend_calls = backend ? backend->call_count() : 0;
    return result;
}

// ─── Artifact writing ────────────────────────────────────────────────────

void write_model_artifacts(const ExperimentConfig& config, const ModelRunResult& result,
                           const ReportFormats& formats) {
    const fs::path out = model_output_dir(config, result.model);

    {
        std::ostringstream profiles;
        profiles << nlohmann::json({{"schema_version", 1}, {"model", result.model}}).dump()
                 << '\n';
        for (const auto& [dimension, outcome] : result.dimensions)
            for (const StoredProfile& stored : outcome.profiles)
                profiles << nlohmann::json({{"dimension", dimension},
                                            {"context", stored.context},
                                            {"k", stored.budget_k},
                                            {"trial", stored.experiment_trial},
                                            {"alpha", stored.profile.alpha},
                                            {"beta", stored.profile.beta},
                                            {"n_updates", stored.profile.n_updates}})
                                .dump()
                         << '\n';
        write_file_atomic(out / "profiles" / "profiles.jsonl", profiles.str());
    }

    std::vector<SteerabilityIndex> all_indices;
    std::vector<SteerabilityCurve> all_curves;
    std::map<std::string, ProfileAggregate> baselines;
    for (const auto& [dimension, outcome] : result.dimensions) {
        all_indices.insert(all_indices.end(), outcome.indices.begin(), outcome.indices.end());
        all_curves.insert(all_curves.end(), outcome.curves.begin(), outcome.curves.end());
        baselines.emplace(dimension, outcome.baseline);
    }
    std::sort(all_indices.begin(), all_indices.end(),
              [](const SteerabilityIndex& a, const SteerabilityIndex& b) {
                  return std::tie(a.dimension, a.direction, a.budget_k, a.experiment_trial) <
                         std::tie(b.dimension, b.direction, b.budget_k, b.experiment_trial);
              });
    std::sort(all_curves.begin(), all_curves.end(),
              [](const SteerabilityCurve& a, const SteerabilityCurve& b) {
                  return std::tie(a.dimension, a.direction) < std::tie(b.dimension, b.direction);
              });

    if (formats.indices_json)
        write_file_atomic(out / "metrics" / "indices.json", indices_to_json(all_indices));
    if (formats.tables_csv) {
        write_file_atomic(out / "metrics" / "curves.csv", curves_to_csv(all_curves));
        write_file_atomic(out / "metrics" / "baseline.csv",
                          baseline_to_csv(baseline_summary(baselines)));
    }
    if (formats.markdown)
        write_file_atomic(out / "report" / "baseline.md",
                          baseline_to_markdown(baseline_summary(baselines)));

    const bool have_k1 =
        std::find(config.budgets.begin(), config.budgets.end(), 1) != config.budgets.end();
    if (have_k1 && !result.dimensions.empty()) {
        CategoryMap categories;
        if (config.category_map_path)
            categories = category_map_from_json(read_file(*config.category_map_path));
        const OneShotSummary summary = one_shot_summary(all_curves, categories);
        for (const std::string& warning : summary.warnings)
            std::cerr << "warning: " << warning << '\n';
        if (formats.tables_csv)
            write_file_atomic(out / "metrics" / "one_shot.csv", one_shot_to_csv(summary));
        if (formats.markdown)
            write_file_atomic(out / "report" / "one_shot.md", one_shot_to_markdown(summary));
    }

    if (formats.svg)
        for (const auto& [dimension, outcome] : result.dimensions)
            write_file_atomic(out / "report" / (sanitize_name(dimension) + ".svg"),
                              curves_to_svg(dimension, outcome.curves));
}

RunResult run_benchmark(const ExperimentConfig& config, const ProgressHook& hook) {
    config.validate();
    if (config.backends.empty())
        throw ConfigError("config lists no backends; nothing to benchmark");
    const DatasetBundle dataset = load_dataset(config.dataset_dir, config.dimensions);
    if (dataset.dimensions.empty()) throw DataError("prepared dataset has no dimensions");

    RunResult result;
    for (const BackendConfig& backend_config : config.backends) {
        try {
            ModelRunResult model =
                run_model(config, backend_config, dataset, CellPolicy::score_missing, hook);
            write_model_artifacts(config, model, ReportFormats{});
            result.models.push_back(std::move(model));
        } catch (const CapabilityError& e) {
            result.model_failures.push_back(backend_config.model_name + ": " + e.what());
            std::cerr << "error: aborting sweep for " << backend_config.model_name << ": "
                      << e.what() << '\n';
        } catch (const TransportError& e) {
            result.model_failures.push_back(backend_config.model_name + ": " + e.what());
            std::cerr << "error: aborting sweep for " << backend_config.model_name << ": "
                      << e.what() << '\n';
        }
    }
    return result;
}

void generate_reports(const ExperimentConfig& config, const BackendConfig& backend_config,
                      const ReportFormats& formats) {
    const DatasetBundle dataset = load_dataset(config.dataset_dir, config.dimensions);
    ModelRunResult result =
        run_model(config, backend_config, dataset, CellPolicy::require_complete);
    if (!result.failures.empty()) {
        std::ostringstream message;
        message << "cannot report: " << result.failures.size() << " dimension(s) failed:";
        for (const std::string& failure : result.failures) message << ' ' << failure << ';';
        throw Error(message.str());
    }
    write_model_artifacts(config, result, formats);
}

} // namespace steerbench
