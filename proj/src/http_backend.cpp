#include "llmclust/http_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#ifdef LLMCLUST_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "llmclust/errors.hpp"

namespace llmclust {

namespace {

using nlohmann::json;

constexpr const char* kChatCompletionsPath = "/chat/completions";

struct ParsedBaseUrl {
    std::string host;    // scheme://host[:port]
    std::string prefix;  // path prefix, no trailing slash
};

ParsedBaseUrl parse_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("base_url must include a scheme: " + base_url);
    }
    auto path_start = base_url.find('/', scheme_end + 3);
    ParsedBaseUrl parsed;
    if (path_start == std::string::npos) {
        parsed.host = base_url;
    } else {
        parsed.host = base_url.substr(0, path_start);
        parsed.prefix = base_url.substr(path_start);
    }
    while (!parsed.prefix.empty() && parsed.prefix.back() == '/') {
        parsed.prefix.pop_back();
    }
    return parsed;
}

class HttplibTransport : public HttpTransport {
public:
    HttplibTransport(const std::string& base_url, std::string api_key)
        : parsed_(parse_base_url(base_url)), client_(parsed_.host), api_key_(std::move(api_key)) {
        client_.set_connection_timeout(15, 0);
        client_.set_read_timeout(120, 0);
    }

    HttpResponse post_json(const std::string& path, const std::string& body) override {
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        auto res = client_.Post(parsed_.prefix + path, headers, body, "application/json");
        if (!res) {
            return {0, "", true, httplib::to_string(res.error())};
        }
        return {res->status, res->body, false, ""};
    }

private:
    ParsedBaseUrl parsed_;
    httplib::Client client_;
    std::string api_key_;
};

bool is_retryable(const HttpResponse& response) {
    if (response.network_error) return true;
    return response.status == 408 || response.status == 429 || response.status >= 500;
}

bool mentions_context_overflow(const std::string& body) {
    return body.find("context_length_exceeded") != std::string::npos ||
           body.find("maximum context length") != std::string::npos;
}

std::string extract_content(const std::string& body) {
    json doc = json::parse(body, nullptr, false);
    if (!doc.is_discarded()) {
        // chat-completions shape
        if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
            const auto& choice = doc["choices"][0];
            if (choice.contains("message") && choice["message"].contains("content") &&
                choice["message"]["content"].is_string()) {
                return choice["message"]["content"].get<std::string>();
            }
            if (choice.contains("text") && choice["text"].is_string()) {
                return choice["text"].get<std::string>();
            }
        }
    }
    throw BackendError(BackendFailure::protocol,
                       "response body is not a chat completion: " + body.substr(0, 200));
}

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url,
                                                      const std::string& api_key) {
    return std::make_unique<HttplibTransport>(base_url, api_key);
}

HttpBackend::HttpBackend(std::unique_ptr<HttpTransport> transport, RetryPolicy retry,
                         int max_in_flight, int requests_per_minute, SleepFn sleep)
    : transport_(std::move(transport)),
      retry_(retry),
      gate_(max_in_flight),
      limiter_(requests_per_minute, sleep),
      sleep_(std::move(sleep)) {
    if (!sleep_) {
        sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

std::unique_ptr<HttpBackend> HttpBackend::from_config(const RunConfig& config) {
    std::string api_key;
    if (!config.api_key_env.empty()) {
        if (const char* value = std::getenv(config.api_key_env.c_str())) {
            api_key = value;
        }
    }
    RetryPolicy retry;
    retry.max_retries = config.max_retries;
    return std::make_unique<HttpBackend>(make_httplib_transport(config.base_url, api_key), retry,
                                         config.max_in_flight, config.requests_per_minute);
}

std::string HttpBackend::complete(const CompletionRequest& request) {
    json body;
    body["model"] = request.model_name;
    body["temperature"] = request.temperature;
    body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
    if (request.max_tokens) {
        body["max_tokens"] = *request.max_tokens;
    }
    const std::string payload = body.dump();

    thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
    HttpResponse last;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(static_cast<long>(
                retry_.initial_delay.count() * std::pow(retry_.backoff_factor, attempt - 1)));
            delay = std::min(delay, retry_.max_delay);
            auto jitter = std::chrono::milliseconds(
                std::uniform_int_distribution<long>(0, delay.count() / 2)(jitter_rng));
            spdlog::debug("retrying request in {} ms (attempt {}/{})",
                          (delay + jitter).count(), attempt + 1, retry_.max_retries + 1);
            sleep_(delay + jitter);
        }

        limiter_.acquire();
        {
            InFlightGate::Ticket ticket(gate_);
            ++attempts_;
            last = transport_->post_json(kChatCompletionsPath, payload);
        }

        if (!last.network_error && last.status == 200) {
            return extract_content(last.body);
        }
        if (last.status == 401 || last.status == 403) {
            throw BackendError(BackendFailure::auth,
                               "authentication rejected (HTTP " + std::to_string(last.status) +
                                   ")");
        }
        if (last.status == 400 && mentions_context_overflow(last.body)) {
            throw BackendError(BackendFailure::context_too_long,
                               "prompt exceeds the model context window");
        }
        if (!is_retryable(last)) {
            throw BackendError(BackendFailure::protocol,
                               "HTTP " + std::to_string(last.status) + ": " +
                                   last.body.substr(0, 200));
        }
        spdlog::warn("transient backend failure (status {}, {})", last.status,
                     last.network_error ? last.error_message : "retryable");
    }

    throw BackendError(BackendFailure::unavailable,
                       "backend unavailable after " + std::to_string(retry_.max_retries + 1) +
                           " attempts (last status " + std::to_string(last.status) + ")");
}

}  // namespace llmclust
