#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "steerbench/answers.hpp"
#include "steerbench/prompts.hpp"
#include "steerbench/rng.hpp"

namespace steerbench {

enum class BackendKind { http_chat, synthetic, replay };

const char* to_string(BackendKind k);
BackendKind backend_kind_from_string(std::string_view s);

// ─── Synthetic oracle ────────────────────────────────────────────────────
//
// A ground-truth model for estimator validation: per dimension, a baseline
// probability of behavior-consistent answers and a saturating response to
// steering. The response family is a shifted logistic in the budget k,
//
//   g(k, dir) = sat_dir + (baseline - sat_dir) * 2 / (1 + exp(rate * k))
//
// so g(0, .) = baseline exactly and g is monotone in k toward sat_dir.

struct SteeringResponseParams {
    double saturation_pos = 1.0;
    double saturation_neg = 0.0;
    double rate = 1.0;
};

struct SyntheticDimension {
    double baseline = 0.5;
    SteeringResponseParams response;
};

struct SyntheticModelSpec {
    std::map<std::string, SyntheticDimension> dimensions;
    std::optional<SyntheticDimension> fallback; // applies to unlisted dimensions
    std::uint64_t noise_seed = 0;

    const SyntheticDimension& dimension(const std::string& name) const;

    // Probability of the behavior-consistent answer on a positive-valence
    // statement, after budget_k steering statements in `direction`
    // (nullopt or budget 0 = baseline).
    double response_probability(const std::string& dimension_name, int budget_k,
                                std::optional<Valence> direction) const;
};

// Bernoulli draw plus a logprob-gap surrogate whose sign always matches the
// drawn answer: gap = logit(p_yes) - logit(u) for uniform u, clamped to +-30.
ScoredAnswer synthetic_answer(const SyntheticModelSpec& spec, const std::string& dimension,
                              std::optional<Valence> direction_context, int budget_k,
                              Valence statement_valence, Rng& rng);

// ─── Backend abstraction ─────────────────────────────────────────────────

struct BackendConfig {
    BackendKind kind = BackendKind::synthetic;
    std::optional<std::string> endpoint_url; // required for http_chat
    std::string model_name = "synthetic";
    std::chrono::milliseconds request_timeout{30000};
    int max_in_flight = 1;
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::string> api_key_env; // name only; value read from the environment
    SyntheticModelSpec synthetic;           // used when kind == synthetic
    int top_logprobs = 20;                  // top-K readout width for http_chat
    int max_attempts = 3;                   // retry budget per request

    void validate() const;
};

class Backend {
public:
    virtual ~Backend() = default;

    virtual ScoredAnswer score(const ChatPrompt& prompt, const ScoreContext& context) = 0;
    virtual const std::string& model_name() const = 0;

    long call_count() const { return calls_.load(); }

protected:
    void count_call() { calls_.fetch_add(1); }

private:
    std::atomic<long> calls_{0};
};

// Scores one polar question and assembles the full record from the
// profiling statement carried by the prompt.
AnswerRecord score_polar_question(Backend& backend, const ChatPrompt& prompt,
                                  const ScoreContext& context);

class SyntheticBackend : public Backend {
public:
    SyntheticBackend(SyntheticModelSpec spec, std::string model_name);

    ScoredAnswer score(const ChatPrompt& prompt, const ScoreContext& context) override;
    const std::string& model_name() const override { return model_name_; }

    const SyntheticModelSpec& spec() const { return spec_; }

private:
    SyntheticModelSpec spec_;
    std::string model_name_;
};

// ─── Response cache ──────────────────────────────────────────────────────
//
// Content-addressed, append-only store: one JSON file per entry under the
// cache directory, filename = hex digest of (model, system text, user text,
// candidate set). Entries keep the exact prompt texts for auditability.

class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    static std::string key(const std::string& model_name, const std::string& system_text,
                           const std::string& user_text,
                           const std::vector<std::string>& candidates);

    std::optional<ScoredAnswer> get(const std::string& key) const;

    // Stores the answer together with the exact prompt texts and the
    // statement coordinates (everything but trial ids) for auditability.
    void put(const std::string& key, const ScoredAnswer& answer, const std::string& model_name,
             const ChatPrompt& prompt, const ScoreContext& context) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

/// The candidate answers every backend compares, in a fixed order.
const std::vector<std::string>& answer_candidates();

// Serves answers from a ResponseCache only; never touches the network.
// A miss is fatal and names the missing key.
class ReplayBackend : public Backend {
public:
    ReplayBackend(std::filesystem::path cache_dir, std::string model_name);

    ScoredAnswer score(const ChatPrompt& prompt, const ScoreContext& context) override;
    const std::string& model_name() const override { return model_name_; }

private:
    ResponseCache cache_;
    std::string model_name_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

} // namespace steerbench
