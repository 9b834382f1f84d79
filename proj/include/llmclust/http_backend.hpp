#pragma once

#include <memory>
#include <string>

#include "llmclust/backend.hpp"

namespace llmclust {

struct HttpResponse {
    int status = 0;
    std::string body;
    bool network_error = false;
    std::string error_message;
};

/// Transport seam: production wraps an HTTP client, tests inject scripted
/// responses.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& path, const std::string& body) = 0;
};

/// cpp-httplib transport against a chat-completions style service.
/// base_url carries scheme, host, optional port and path prefix.
std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url,
                                                      const std::string& api_key);

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_delay{500};
    std::chrono::milliseconds max_delay{30000};
    double backoff_factor = 2.0;
};

/// Chat-completions client: single user message per request, retries with
/// exponential backoff and jitter on timeouts / 429 / 5xx, honors the
/// in-flight cap and the requests-per-minute budget.
class HttpBackend : public CompletionBackend {
public:
    HttpBackend(std::unique_ptr<HttpTransport> transport, RetryPolicy retry, int max_in_flight,
                int requests_per_minute, SleepFn sleep = {});

    /// Reads the API key from the configured environment variable; empty is
    /// allowed (local endpoints without auth).
    static std::unique_ptr<HttpBackend> from_config(const RunConfig& config);

    std::string complete(const CompletionRequest& request) override;
    BackendKind kind() const override { return BackendKind::http; }

    std::int64_t attempts() const { return attempts_.load(); }

private:
    std::unique_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
    InFlightGate gate_;
    RateLimiter limiter_;
    SleepFn sleep_;
    std::atomic<std::int64_t> attempts_{0};
};

}  // namespace llmclust
