// steerbench: persona steerability benchmark driver.
//
//   steerbench prepare-data --raw raw/ --out dataset/
//   steerbench run --config bench.json
//   steerbench report --config bench.json --model my-model
//   steerbench curves --config bench.json

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "steerbench/errors.hpp"
#include "steerbench/experiment.hpp"

namespace {

using namespace steerbench;

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> fields;
    std::stringstream stream(text);
    std::string field;
    while (std::getline(stream, field, ','))
        if (!field.empty()) fields.push_back(field);
    return fields;
}

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> models;
    std::string dims;
    std::string budgets;
    int trials = -1;
    std::int64_t seed = -1;
    std::string cache_dir;
    std::string out_dir;
    std::string backend_kind;
};

void add_common(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--config", flags.config_path, "experiment config file (JSON)");
    cmd.add_option("--model", flags.models, "model name; repeatable")->take_all();
    cmd.add_option("--dims", flags.dims, "comma-separated dimensions, or 'all'");
    cmd.add_option("--budgets", flags.budgets, "comma-separated steering budgets");
    cmd.add_option("--trials", flags.trials, "experiment trial count");
    cmd.add_option("--seed", flags.seed, "master seed");
    cmd.add_option("--cache-dir", flags.cache_dir, "response cache directory");
    cmd.add_option("--out", flags.out_dir, "output directory");
    cmd.add_option("--backend", flags.backend_kind, "http_chat | synthetic | replay")
        ->check(CLI::IsMember({"http_chat", "http", "synthetic", "replay"}));
}

ExperimentConfig make_config(const CommonFlags& flags) {
    ExperimentConfig config;
    if (!flags.config_path.empty()) config = load_experiment_config(flags.config_path);
    if (!flags.dims.empty())
        config.dimensions = flags.dims == "all" ? std::vector<std::string>{}
                                                : split_csv(flags.dims);
    if (!flags.budgets.empty()) {
        config.budgets.clear();
        for (const std::string& field : split_csv(flags.budgets))
            config.budgets.push_back(std::stoi(field));
    }
    if (flags.trials >= 0) config.experiment_trials = flags.trials;
    if (flags.seed >= 0) config.master_seed = static_cast<std::uint64_t>(flags.seed);
    if (!flags.cache_dir.empty()) config.cache_dir = flags.cache_dir;
    if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;

    std::optional<BackendKind> kind;
    if (!flags.backend_kind.empty())
        kind = backend_kind_from_string(flags.backend_kind == "http" ? "http_chat"
                                                                     : flags.backend_kind);

    // --model selects matching configured backends, or creates synthetic /
    // replay ones ad hoc; http endpoints must come from the config file.
    if (!flags.models.empty()) {
        std::vector<BackendConfig> selected;
        for (const std::string& model : flags.models) {
            bool found = false;
            for (const BackendConfig& backend : config.backends)
                if (backend.model_name == model) {
                    selected.push_back(backend);
                    found = true;
                }
            if (found) continue;
            BackendConfig fresh;
            fresh.model_name = model;
            fresh.kind = kind.value_or(BackendKind::synthetic);
            if (fresh.kind == BackendKind::http_chat)
                throw ConfigError("model '" + model +
                                  "' is not in the config file; http backends need an "
                                  "endpoint_url and must be configured there");
            if (fresh.kind == BackendKind::replay) fresh.cache_dir = config.cache_dir;
            selected.push_back(fresh);
        }
        config.backends = std::move(selected);
    } else if (kind) {
        std::vector<BackendConfig> selected;
        for (const BackendConfig& backend : config.backends)
            if (backend.kind == *kind) selected.push_back(backend);
        if (selected.empty() && *kind == BackendKind::synthetic) {
            BackendConfig fresh;
            fresh.model_name = "synthetic";
            selected.push_back(fresh);
        }
        if (selected.empty())
            throw ConfigError("no configured backend of kind '" + flags.backend_kind + "'");
        config.backends = std::move(selected);
    }
    if (config.backends.empty()) {
        BackendConfig fresh;
        fresh.model_name = "synthetic";
        config.backends.push_back(fresh);
    }
    return config;
}

int run_reports(const CommonFlags& flags, const ReportFormats& formats) {
    const ExperimentConfig config = make_config(flags);
    int failures = 0;
    for (const BackendConfig& backend : config.backends) {
        try {
            generate_reports(config, backend, formats);
            std::cout << "report written under "
                      << model_output_dir(config, backend.model_name).string() << '\n';
        } catch (const std::exception& e) {
            std::cerr << "error: " << backend.model_name << ": " << e.what() << '\n';
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"persona steerability benchmark"};
    app.require_subcommand(1);

    // prepare-data
    auto* prepare = app.add_subcommand("prepare-data", "filter and split raw persona data");
    std::string raw_dir;
    std::string prep_out;
    std::int64_t prep_seed = -1;
    bool strict_parse = true;
    CommonFlags prep_flags;
    prepare->add_option("--raw", raw_dir, "directory of raw *.jsonl persona files")
        ->required();
    prepare->add_option("--out", prep_out, "dataset output directory");
    prepare->add_option("--seed", prep_seed, "split seed (defaults to master_seed)");
    prepare->add_option("--config", prep_flags.config_path, "experiment config file (JSON)");
    prepare->add_flag("--strict-parse,!--no-strict-parse", strict_parse,
                      "fail on the first malformed record (default on)");

    // run / report / curves
    auto* run = app.add_subcommand("run", "run the benchmark sweep");
    CommonFlags run_flags;
    add_common(*run, run_flags);

    auto* report = app.add_subcommand("report", "regenerate all reports from artifacts");
    CommonFlags report_flags;
    add_common(*report, report_flags);

    auto* curves = app.add_subcommand("curves", "regenerate curve CSV and SVG plots");
    CommonFlags curves_flags;
    add_common(*curves, curves_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) {
            ExperimentConfig config;
            if (!prep_flags.config_path.empty())
                config = load_experiment_config(prep_flags.config_path);
            const std::filesystem::path dataset_dir =
                prep_out.empty() ? config.dataset_dir : std::filesystem::path(prep_out);
            const std::uint64_t seed = prep_seed >= 0
                                           ? static_cast<std::uint64_t>(prep_seed)
                                           : config.master_seed;
            const PrepareSummary summary =
                prepare_data(raw_dir, dataset_dir, config.filter, seed,
                             config.steering_per_direction,
                             strict_parse ? ParseMode::strict : ParseMode::lenient);
            std::cout << "parsed " << summary.raw_records << " records from "
                      << summary.raw_files << " files";
            if (summary.skipped_records > 0)
                std::cout << " (" << summary.skipped_records << " skipped)";
            std::cout << "; kept " << summary.kept_dimensions.size() << " dimensions\n";
            for (const std::string& dimension : summary.kept_dimensions)
                std::cout << "  " << dimension << '\n';
            return 0;
        }
        if (run->parsed()) {
            const ExperimentConfig config = make_config(run_flags);
            const RunResult result = run_benchmark(config);
            for (const ModelRunResult& model : result.models) {
                std::cout << model.model << ": " << model.dimensions.size()
                          << " dimension(s), " << model.backend_calls << " backend call(s)\n";
                for (const std::string& failure : model.failures)
                    std::cout << "  skipped " << failure << '\n';
            }
            for (const std::string& failure : result.model_failures)
                std::cerr << "failed: " << failure << '\n';
            return result.models.empty() ? 1 : 0;
        }
        if (report->parsed()) return run_reports(report_flags, ReportFormats{});
        if (curves->parsed()) {
            ReportFormats formats;
            formats.indices_json = false;
            formats.markdown = false;
            return run_reports(curves_flags, formats);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
