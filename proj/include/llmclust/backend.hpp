#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "llmclust/core.hpp"

namespace llmclust {

struct CompletionRequest {
    std::string prompt;
    std::string model_name;
    double temperature = 0.0;
    std::optional<int> max_tokens;
};

/// Single-shot completion interface. Implementations are safe to call from
/// multiple threads and enforce their own in-flight bound.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;

    /// Returns the model's raw response text.
    /// Throws BackendError on failure.
    virtual std::string complete(const CompletionRequest& request) = 0;

    virtual BackendKind kind() const = 0;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Hard cap on simultaneous outstanding requests, with a peak counter so
/// tests can assert the bound was honored.
class InFlightGate {
public:
    explicit InFlightGate(int limit);

    class Ticket {
    public:
        explicit Ticket(InFlightGate& gate);
        ~Ticket();
        Ticket(const Ticket&) = delete;
        Ticket& operator=(const Ticket&) = delete;

    private:
        InFlightGate& gate_;
    };

    int peak() const { return peak_.load(); }

private:
    friend class Ticket;
    void acquire();
    void release();

    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int current_ = 0;
    std::atomic<int> peak_{0};
};

/// Token bucket over a fixed requests-per-minute budget. 0 disables limiting.
class RateLimiter {
public:
    RateLimiter(int requests_per_minute, SleepFn sleep = {});

    void acquire();

private:
    double rate_per_ms_;  // tokens per millisecond; <= 0 means unlimited
    double tokens_;
    double capacity_;
    std::chrono::steady_clock::time_point last_refill_;
    std::mutex mutex_;
    SleepFn sleep_;
};

}  // namespace llmclust
