#include "steerbench/backend.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "steerbench/digest.hpp"
#include "steerbench/errors.hpp"

namespace steerbench {

namespace {

constexpr double kGapClamp = 30.0;

double logit(double p) { return std::log(p / (1.0 - p)); }

} // namespace

const char* to_string(BackendKind k) {
    switch (k) {
    case BackendKind::http_chat: return "http_chat";
    case BackendKind::synthetic: return "synthetic";
    case BackendKind::replay: return "replay";
    }
    throw Error("unknown backend kind");
}

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http_chat") return BackendKind::http_chat;
    if (s == "synthetic") return BackendKind::synthetic;
    if (s == "replay") return BackendKind::replay;
    throw ConfigError("unknown backend kind '" + std::string(s) + "'");
}

// ─── Synthetic oracle ────────────────────────────────────────────────────

const SyntheticDimension& SyntheticModelSpec::dimension(const std::string& name) const {
    if (auto it = dimensions.find(name); it != dimensions.end()) return it->second;
    if (fallback) return *fallback;
    throw ConfigError("synthetic model spec covers no dimension named '" + name +
                      "' and defines no fallback");
}

double SyntheticModelSpec::response_probability(const std::string& dimension_name, int budget_k,
                                                std::optional<Valence> direction) const {
    const SyntheticDimension& dim = dimension(dimension_name);
    if (!direction || budget_k == 0) return dim.baseline;
    const double sat = *direction == Valence::positive ? dim.response.saturation_pos
                                                       : dim.response.saturation_neg;
    return sat + (dim.baseline - sat) * 2.0 / (1.0 + std::exp(dim.response.rate * budget_k));
}

ScoredAnswer synthetic_answer(const SyntheticModelSpec& spec, const std::string& dimension,
                              std::optional<Valence> direction_context, int budget_k,
                              Valence statement_valence, Rng& rng) {
    const double p_pos = spec.response_probability(dimension, budget_k, direction_context);
    const double p_yes = statement_valence == Valence::positive ? p_pos : 1.0 - p_pos;
    // gap >= 0 iff u <= p_yes, so the answer is Bernoulli(p_yes) and the
    // sign convention of answer_from_gap holds by construction.
    const double u = rng.unit_open();
    const double gap = std::clamp(logit(p_yes) - logit(u), -kGapClamp, kGapClamp);
    return {answer_from_gap(gap), gap};
}

// ─── Config ──────────────────────────────────────────────────────────────

void BackendConfig::validate() const {
    if (model_name.empty()) throw ConfigError("backend model_name must be non-empty");
    if (kind == BackendKind::http_chat && (!endpoint_url || endpoint_url->empty()))
        throw ConfigError("http_chat backend requires an endpoint_url");
    if (kind == BackendKind::replay && !cache_dir)
        throw ConfigError("replay backend requires a cache_dir");
    if (request_timeout.count() <= 0) throw ConfigError("request_timeout must be positive");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
    if (top_logprobs < 2) throw ConfigError("top_logprobs must cover both answer candidates");
    if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    for (const auto& [name, dim] : synthetic.dimensions) {
        auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in_unit(dim.baseline) || !in_unit(dim.response.saturation_pos) ||
            !in_unit(dim.response.saturation_neg))
            throw ConfigError("synthetic probabilities for '" + name + "' must lie in [0, 1]");
        if (!(dim.response.rate > 0.0))
            throw ConfigError("synthetic response rate for '" + name + "' must be positive");
    }
}

// ─── Synthetic backend ───────────────────────────────────────────────────

SyntheticBackend::SyntheticBackend(SyntheticModelSpec spec, std::string model_name)
    : spec_(std::move(spec)), model_name_(std::move(model_name)) {}

ScoredAnswer SyntheticBackend::score(const ChatPrompt& prompt, const ScoreContext& context) {
    count_call();
    // Every coordinate that should decorrelate responses feeds the seed,
    // including both trial ids and the statement itself.
    SeedKey key(spec_.noise_seed);
    key.mix("synthetic-answer")
        .mix(model_name_)
        .mix(context.dimension)
        .mix(context.context_tag())
        .mix(context.budget_k)
        .mix(context.trials.experiment_trial)
        .mix(context.trials.steering_trial)
        .mix(prompt.profiling_statement.text)
        .mix(to_string(prompt.profiling_statement.direction));
    Rng rng(key.value());
    return synthetic_answer(spec_, context.dimension, context.steering_direction,
                            context.budget_k, prompt.profiling_statement.direction, rng);
}

AnswerRecord score_polar_question(Backend& backend, const ChatPrompt& prompt,
                                  const ScoreContext& context) {
    return make_answer_record(backend.score(prompt, context), prompt.profiling_statement,
                              context);
}

// ─── Response cache ──────────────────────────────────────────────────────

const std::vector<std::string>& answer_candidates() {
    static const std::vector<std::string> candidates = {"yes", "no"};
    return candidates;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string ResponseCache::key(const std::string& model_name, const std::string& system_text,
                               const std::string& user_text,
                               const std::vector<std::string>& candidates) {
    // JSON array dump gives an unambiguous, stable encoding of the fields.
    const nlohmann::json material = {model_name, system_text, user_text, candidates};
    return sha256_hex(material.dump());
}

std::optional<ScoredAnswer> ResponseCache::get(const std::string& key) const {
    const std::filesystem::path path = dir_ / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        const nlohmann::json entry = nlohmann::json::parse(in);
        ScoredAnswer answer;
        answer.answer = answer_from_string(entry.at("answer").get<std::string>());
        answer.logprob_gap = entry.at("logprob_gap").get<double>();
        return answer;
    } catch (const std::exception& e) {
        std::cerr << "warning: discarding unreadable cache entry " << path.string() << ": "
                  << e.what() << '\n';
        return std::nullopt;
    }
}

void ResponseCache::put(const std::string& key, const ScoredAnswer& answer,
                        const std::string& model_name, const ChatPrompt& prompt,
                        const ScoreContext& context) const {
    nlohmann::json entry = {
        {"schema_version", 1},
        {"model", model_name},
        {"system_text", prompt.system_text},
        {"user_text", prompt.user_text},
        {"candidates", answer_candidates()},
        {"answer", to_string(answer.answer)},
        {"logprob_gap", answer.logprob_gap},
        {"statement", prompt.profiling_statement.text},
        {"valence", to_string(prompt.profiling_statement.direction)},
        {"confidence", prompt.profiling_statement.label_confidence},
        {"dimension", context.dimension},
        {"budget_k", context.budget_k},
    };
    const std::filesystem::path path = dir_ / (key + ".json");
    // Write-then-rename keeps readers from ever seeing a partial entry.
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(static_cast<unsigned long>(::getpid()));
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("cannot write cache entry " + tmp.string());
        out << entry.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

// ─── Replay backend ──────────────────────────────────────────────────────

ReplayBackend::ReplayBackend(std::filesystem::path cache_dir, std::string model_name)
    : cache_(std::move(cache_dir)), model_name_(std::move(model_name)) {}

ScoredAnswer ReplayBackend::score(const ChatPrompt& prompt, const ScoreContext&) {
    count_call();
    const std::string key =
        ResponseCache::key(model_name_, prompt.system_text, prompt.user_text, answer_candidates());
    if (auto hit = cache_.get(key)) return *hit;
    throw CacheMissError("replay cache under " + cache_.dir().string() +
                             " has no entry for key " + key,
                         key);
}

std::unique_ptr<Backend> make_http_backend(const BackendConfig& config); // http_backend.cpp

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    config.validate();
    switch (config.kind) {
    case BackendKind::synthetic:
        return std::make_unique<SyntheticBackend>(config.synthetic, config.model_name);
    case BackendKind::replay:
        return std::make_unique<ReplayBackend>(*config.cache_dir, config.model_name);
    case BackendKind::http_chat:
        return make_http_backend(config);
    }
    throw ConfigError("unknown backend kind");
}

} // namespace steerbench
