#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "lrs/llm.hpp"

namespace lrs {

// OpenAI-compatible chat-completions client. Sends the prompt as a single
// user message with no system message; sampling parameters are omitted from
// the request unless explicitly set.
class OpenAiHttpProvider : public Provider {
public:
    explicit OpenAiHttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw ConfigError("missing API credential in env var " + config_.api_key_env);
        api_key_ = key;
        split_endpoint(config_.endpoint);
    }

    Completion complete(const std::string& prompt, const InferenceParams& params) override {
        httplib::Client client(host_.c_str());
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_bearer_token_auth(api_key_);

        const std::string body = detail::chat_request_body(config_.model, prompt, params);
        auto res = client.Post((base_path_ + "/chat/completions").c_str(), body,
                               "application/json");
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                throw TransportError(TransportError::Kind::timeout,
                                     "request timed out: " + httplib::to_string(err));
            throw TransportError(TransportError::Kind::connect,
                                 "transport failure: " + httplib::to_string(err));
        }
        if (res->status < 200 || res->status >= 300)
            throw TransportError(TransportError::Kind::http_status,
                                 "HTTP " + std::to_string(res->status) + ": " + res->body);
        return detail::parse_chat_response(res->body);
    }

    std::string model_id() const override { return config_.model; }

private:
    void split_endpoint(const std::string& endpoint) {
        // "https://host[:port]/base/path" -> scheme://host[:port] + path
        auto scheme_end = endpoint.find("://");
        std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        auto path_start = endpoint.find('/', host_start);
        if (path_start == std::string::npos) {
            host_ = endpoint;
            base_path_.clear();
        } else {
            host_ = endpoint.substr(0, path_start);
            base_path_ = endpoint.substr(path_start);
            while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
        }
    }

    HttpProviderConfig config_;
    std::string api_key_;
    std::string host_;
    std::string base_path_;
};

}  // namespace lrs
