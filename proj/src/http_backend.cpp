// OpenAI-compatible chat-completions backend: forces a single-token
// completion, reads the top-K logprobs of that token, and extracts the
// yes/no gap from the candidate classes.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "steerbench/backend.hpp"
#include "steerbench/errors.hpp"
#include "steerbench/rng.hpp"

namespace steerbench {

namespace {

struct EndpointParts {
    std::string base;   // scheme://host[:port]
    std::string path;   // /v1/chat/completions
};

EndpointParts split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint_url must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

// Lowercased, leading-whitespace-trimmed surface form of a token.
std::string normalize_token(std::string_view token) {
    std::size_t begin = 0;
    while (begin < token.size() &&
           std::isspace(static_cast<unsigned char>(token[begin])))
        ++begin;
    std::string out(token.substr(begin));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

class HttpChatBackend : public Backend {
public:
    explicit HttpChatBackend(const BackendConfig& config)
        : config_(config),
          endpoint_(split_endpoint(*config.endpoint_url)),
          client_(std::make_unique<httplib::Client>(endpoint_.base)),
          cache_(config.cache_dir ? std::optional<ResponseCache>(*config.cache_dir)
                                  : std::nullopt),
          backoff_rng_(SeedKey(0x9e3779b97f4a7c15ull).mix("http-backoff").value()) {
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(
            config.request_timeout);
        client_->set_read_timeout(seconds.count(),
                                  (config.request_timeout - seconds).count() * 1000);
        client_->set_connection_timeout(seconds.count(),
                                        (config.request_timeout - seconds).count() * 1000);
        if (config.api_key_env) {
            const char* key = std::getenv(config.api_key_env->c_str());
            if (key == nullptr || *key == '\0')
                throw ConfigError("environment variable '" + *config.api_key_env +
                                  "' named by api_key_env is not set");
            client_->set_default_headers({{"Authorization", std::string("Bearer ") + key}});
        }
    }

    ScoredAnswer score(const ChatPrompt& prompt, const ScoreContext& context) override {
        const std::string key = ResponseCache::key(config_.model_name, prompt.system_text,
                                                   prompt.user_text, answer_candidates());
        if (cache_) {
            if (auto hit = cache_->get(key)) return *hit;
        }
        count_call();
        const ScoredAnswer answer = request_once_with_retries(prompt);
        if (cache_) cache_->put(key, answer, config_.model_name, prompt, context);
        return answer;
    }

    const std::string& model_name() const override { return config_.model_name; }

private:
    ScoredAnswer request_once_with_retries(const ChatPrompt& prompt) {
        const nlohmann::json body = {
            {"model", config_.model_name},
            {"messages",
             {{{"role", "system"}, {"content", prompt.system_text}},
              {{"role", "user"}, {"content", prompt.user_text}}}},
            {"max_tokens", 1},
            {"logprobs", true},
            {"top_logprobs", config_.top_logprobs},
        };
        const std::string payload = body.dump();

        std::string last_failure = "no attempt made";
        for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            if (attempt > 1) backoff(attempt - 1);
            httplib::Result res =
                client_->Post(endpoint_.path, payload, "application/json");
            if (!res) {
                last_failure = "connection error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_failure = "HTTP " + std::to_string(res->status) + ": " +
                               res->body.substr(0, 200);
                if (retryable_status(res->status)) continue;
                throw TransportError(last_failure + " from " + endpoint_.base, attempt);
            }
            return extract_gap(res->body);
        }
        throw TransportError("giving up on " + endpoint_.base + " after " +
                                 std::to_string(config_.max_attempts) +
                                 " attempts; last failure: " + last_failure,
                             config_.max_attempts);
    }

    ScoredAnswer extract_gap(const std::string& response_body) const {
        nlohmann::json response;
        try {
            response = nlohmann::json::parse(response_body);
        } catch (const std::exception& e) {
            throw TransportError(std::string("unparseable response body: ") + e.what(), 1);
        }
        const auto choices = response.find("choices");
        if (choices == response.end() || choices->empty())
            throw TransportError("response carries no choices", 1);
        const nlohmann::json& choice = choices->at(0);
        if (!choice.contains("logprobs") || choice["logprobs"].is_null())
            throw CapabilityError("endpoint returned no logprobs; the logprob readout "
                                  "(logprobs/top_logprobs) is required");
        const nlohmann::json& content = choice["logprobs"].value("content", nlohmann::json());
        if (!content.is_array() || content.empty())
            throw CapabilityError("endpoint logprobs carry no scored token content");

        // Best (max) logprob per candidate class across listed surface forms.
        const nlohmann::json& first_token = content.at(0);
        std::optional<double> lp_yes, lp_no;
        double floor = std::numeric_limits<double>::infinity();
        auto consider = [&](const nlohmann::json& item) {
            const double lp = item.at("logprob").get<double>();
            floor = std::min(floor, lp);
            const std::string cls = normalize_token(item.at("token").get<std::string>());
            if (cls == "yes")
                lp_yes = lp_yes ? std::max(*lp_yes, lp) : lp;
            else if (cls == "no")
                lp_no = lp_no ? std::max(*lp_no, lp) : lp;
        };
        consider(first_token);
        for (const auto& item : first_token.value("top_logprobs", nlohmann::json::array()))
            consider(item);

        if (lp_yes && lp_no) {
            const double gap = *lp_yes - *lp_no;
            return {answer_from_gap(gap), gap};
        }
        // A missing candidate sits below everything listed, so the present
        // one determines the sign; the magnitude is a lower bound.
        if (lp_yes) {
            const double gap = std::max(*lp_yes - floor, 0.0);
            return {answer_from_gap(gap), gap};
        }
        if (lp_no) {
            const double gap = std::min(floor - *lp_no, -1e-9);
            return {answer_from_gap(gap), gap};
        }
        throw CapabilityError("neither answer candidate appears in the top " +
                              std::to_string(config_.top_logprobs) +
                              " logprobs; widen top_logprobs or use a different endpoint");
    }

    void backoff(int failures) {
        const auto base = std::chrono::milliseconds(250) * (1 << std::min(failures - 1, 4));
        const auto jitter = std::chrono::milliseconds(backoff_rng_.below(100));
        std::this_thread::sleep_for(base + jitter);
    }

    BackendConfig config_;
    EndpointParts endpoint_;
    std::unique_ptr<httplib::Client> client_;
    std::optional<ResponseCache> cache_;
    Rng backoff_rng_;
};

} // namespace

std::unique_ptr<Backend> make_http_backend(const BackendConfig& config) {
    return std::make_unique<HttpChatBackend>(config);
}

} // namespace steerbench
