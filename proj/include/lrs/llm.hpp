#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lrs/errors.hpp"
#include "lrs/guidance.hpp"
#include "lrs/prompt.hpp"

namespace lrs {

// Sampling parameters. All fields default to unset so the provider's own
// defaults apply; they are only serialized when explicitly given.
struct InferenceParams {
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<int> max_tokens;
};

struct Completion {
    std::string text;
    std::int64_t prompt_tokens = -1;      // -1 when the provider reports none
    std::int64_t completion_tokens = -1;
};

// One round trip to a model, as recorded in the exchange log.
struct LlmExchange {
    std::string model;
    std::string prompt;
    std::string response;
    double latency_s = 0.0;
    std::int64_t prompt_tokens = -1;
    std::int64_t completion_tokens = -1;
    std::string timestamp;  // UTC, ISO-8601
    int attempt = 1;
};

inline nlohmann::json exchange_to_json(const LlmExchange& e) {
    return nlohmann::json{{"model", e.model},
                          {"prompt", e.prompt},
                          {"response", e.response},
                          {"latency_s", e.latency_s},
                          {"prompt_tokens", e.prompt_tokens},
                          {"completion_tokens", e.completion_tokens},
                          {"timestamp", e.timestamp},
                          {"attempt", e.attempt}};
}

inline LlmExchange exchange_from_json(const nlohmann::json& j) {
    LlmExchange e;
    e.model = j.at("model").get<std::string>();
    e.prompt = j.at("prompt").get<std::string>();
    e.response = j.at("response").get<std::string>();
    e.latency_s = j.at("latency_s").get<double>();
    e.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
    e.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
    e.timestamp = j.at("timestamp").get<std::string>();
    e.attempt = j.at("attempt").get<int>();
    return e;
}

// Append-only JSON-lines exchange log with a single serialized writer.
class ExchangeLog {
public:
    explicit ExchangeLog(const std::filesystem::path& path)
        : out_(path, std::ios::app), path_(path) {
        if (!out_) throw ConfigError("cannot open exchange log: " + path.string());
    }

    void append(const LlmExchange& e) {
        const std::string line = exchange_to_json(e).dump();
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << line << '\n';
        out_.flush();
    }

    const std::filesystem::path& path() const { return path_; }

    static std::vector<LlmExchange> read_all(const std::filesystem::path& path) {
        std::ifstream in(path);
        std::vector<LlmExchange> out;
        for (std::string line; std::getline(in, line);) {
            if (line.empty()) continue;
            out.push_back(exchange_from_json(nlohmann::json::parse(line)));
        }
        return out;
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::mutex mutex_;
};

// Chat-completion provider interface. Implementations must be safe to share
// across threads.
class Provider {
public:
    virtual ~Provider() = default;
    virtual Completion complete(const std::string& prompt, const InferenceParams& params) = 0;
    virtual std::string model_id() const = 0;
};

// Scripted in-memory provider for tests: replays a fixed sequence of
// responses, where an entry may instead raise a transport failure.
class ScriptedProvider : public Provider {
public:
    struct Step {
        std::string response;
        std::optional<TransportError::Kind> fail;
    };

    ScriptedProvider(std::string model, std::vector<Step> steps)
        : model_(std::move(model)), steps_(steps.begin(), steps.end()) {}

    static Step respond(std::string text) { return Step{std::move(text), std::nullopt}; }
    static Step fail(TransportError::Kind kind) { return Step{{}, kind}; }

    Completion complete(const std::string&, const InferenceParams&) override {
        std::lock_guard<std::mutex> lock(mutex_);
        if (steps_.empty())
            throw TransportError(TransportError::Kind::empty_completion,
                                 "scripted provider exhausted");
        Step step = std::move(steps_.front());
        steps_.pop_front();
        if (step.fail) throw TransportError(*step.fail, "scripted failure");
        return Completion{std::move(step.response), -1, -1};
    }

    std::string model_id() const override { return model_; }

private:
    std::string model_;
    std::deque<Step> steps_;
    std::mutex mutex_;
};

// Offline provider backed by a fixture file, so whole benchmark runs can
// replay recorded responses with no network. Fixture format:
//
//   { "<instance name>|<model id>": ["response 1", {"error": "timeout"}, ...],
//     "default": ["fallback response"] }
//
// Each call consumes the next entry for its key; the last entry repeats.
class MockProvider : public Provider {
public:
    MockProvider(std::string model, const std::filesystem::path& fixture_path)
        : model_(std::move(model)) {
        std::ifstream in(fixture_path);
        if (!in) throw ConfigError("cannot open fixture file: " + fixture_path.string());
        fixtures_ = nlohmann::json::parse(in);
    }

    MockProvider(std::string model, nlohmann::json fixtures)
        : model_(std::move(model)), fixtures_(std::move(fixtures)) {}

    // The instance name must be set before each call so responses can be
    // keyed per instance; bench sets it per row.
    void set_instance(const std::string& name) {
        std::lock_guard<std::mutex> lock(mutex_);
        instance_ = name;
    }

    Completion complete(const std::string&, const InferenceParams&) override {
        std::lock_guard<std::mutex> lock(mutex_);
        const std::string key = instance_ + "|" + model_;
        const nlohmann::json* entries = nullptr;
        if (fixtures_.contains(key)) {
            entries = &fixtures_[key];
        } else if (fixtures_.contains("default")) {
            entries = &fixtures_["default"];
        } else {
            throw ConfigError("no fixture entry for key: " + key);
        }
        const std::size_t index = std::min(cursor_[key]++, entries->size() - 1);
        const nlohmann::json& entry = (*entries)[index];
        if (entry.is_object() && entry.contains("error")) {
            const std::string kind = entry["error"].get<std::string>();
            if (kind == "timeout")
                throw TransportError(TransportError::Kind::timeout, "scripted timeout");
            if (kind == "http")
                throw TransportError(TransportError::Kind::http_status, "scripted http failure");
            if (kind == "empty")
                throw TransportError(TransportError::Kind::empty_completion, "scripted empty");
            throw TransportError(TransportError::Kind::connect, "scripted connect failure");
        }
        return Completion{entry.get<std::string>(), -1, -1};
    }

    std::string model_id() const override { return model_; }

private:
    std::string model_;
    nlohmann::json fixtures_;
    std::string instance_ = "default";
    std::unordered_map<std::string, std::size_t> cursor_;
    std::mutex mutex_;
};

struct HttpProviderConfig {
    std::string endpoint = "https://openrouter.ai/api/v1";  // base URL
    std::string model;
    std::string api_key_env = "OPENROUTER_API_KEY";
    double timeout_s = 120.0;
};

namespace detail {

inline std::string chat_request_body(const std::string& model, const std::string& prompt,
                                     const InferenceParams& params) {
    nlohmann::json body{{"model", model},
                        {"messages", nlohmann::json::array({nlohmann::json{
                                         {"role", "user"}, {"content", prompt}}})}};
    if (params.temperature) body["temperature"] = *params.temperature;
    if (params.top_p) body["top_p"] = *params.top_p;
    if (params.max_tokens) body["max_tokens"] = *params.max_tokens;
    return body.dump();
}

inline Completion parse_chat_response(const std::string& body) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded())
        throw TransportError(TransportError::Kind::http_status, "unparseable response body");
    Completion c;
    if (!j.contains("choices") || j["choices"].empty())
        throw TransportError(TransportError::Kind::empty_completion, "response has no choices");
    const auto& msg = j["choices"][0];
    if (msg.contains("message") && msg["message"].contains("content") &&
        msg["message"]["content"].is_string())
        c.text = msg["message"]["content"].get<std::string>();
    if (c.text.empty())
        throw TransportError(TransportError::Kind::empty_completion, "empty completion text");
    if (j.contains("usage")) {
        const auto& u = j["usage"];
        if (u.contains("prompt_tokens")) c.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
        if (u.contains("completion_tokens"))
            c.completion_tokens = u["completion_tokens"].get<std::int64_t>();
    }
    return c;
}

}  // namespace detail

// OpenAI-compatible chat-completions client (single user message, no system
// message). Definition lives in llm_http.hpp to keep the HTTP dependency out
// of translation units that never talk to the network.
class HttpProvider;

struct RetryPolicy {
    int max_attempts = 3;
    double backoff_base_s = 1.0;  // 1s, 2s, 4s, ...
    double backoff_multiplier = 2.0;
};

inline std::string utc_timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// One round trip: sends the prompt, measures wall-clock latency and records
// provider-reported usage.
inline LlmExchange execute(Provider& provider, const PromptBundle& prompt,
                           const InferenceParams& params = {}, int attempt = 1) {
    LlmExchange e;
    e.model = provider.model_id();
    e.prompt = prompt.rendered;
    e.attempt = attempt;
    e.timestamp = utc_timestamp_now();
    const auto start = std::chrono::steady_clock::now();
    Completion c = provider.complete(prompt.rendered, params);
    e.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    e.response = std::move(c.text);
    e.prompt_tokens = c.prompt_tokens;
    e.completion_tokens = c.completion_tokens;
    return e;
}

// Full guidance acquisition: build the prompt, query the model, parse the
// coefficients; retry on transport or parse failures with exponential
// backoff. Returns the first valid AlphaBeta plus the complete exchange log
// (including failed attempts). When all attempts fail, the exchanges made so
// far are left in *failed_log (if given) before GuidanceUnavailable is
// thrown. Configuration errors are not retried.
inline std::pair<AlphaBeta, std::vector<LlmExchange>> obtain_guidance(
    Provider& provider, const LrsInstance& inst, const MetricSet& set,
    const RetryPolicy& retry = {}, const PromptOptions& prompt_options = {},
    const ParseOptions& parse_options = {}, const InferenceParams& params = {},
    std::vector<LlmExchange>* failed_log = nullptr) {
    const FeatureMatrix matrix = build_feature_matrix(inst, set);
    const PromptBundle prompt = build_prompt(inst, matrix, set, prompt_options);
    std::vector<LlmExchange> exchanges;
    std::string last_error;
    double backoff = retry.backoff_base_s;
    for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
        if (attempt > 1 && backoff > 0.0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= retry.backoff_multiplier;
        }
        try {
            LlmExchange e = execute(provider, prompt, params, attempt);
            exchanges.push_back(e);
            AlphaBeta ab = parse_alpha_beta(e.response, set.k(), parse_options);
            return {std::move(ab), std::move(exchanges)};
        } catch (const TransportError& err) {
            last_error = err.what();
        } catch (const ParseError& err) {
            last_error = err.what();
        }
    }
    if (failed_log) *failed_log = std::move(exchanges);
    throw GuidanceUnavailable("guidance unavailable after " +
                              std::to_string(retry.max_attempts) +
                              " attempts; last error: " + last_error);
}

}  // namespace lrs
