#include "llmclust/backend.hpp"

#include <thread>

#include "llmclust/errors.hpp"

namespace llmclust {

InFlightGate::InFlightGate(int limit) : limit_(limit) {
    if (limit < 1) {
        throw ConfigError("in-flight limit must be >= 1");
    }
}

InFlightGate::Ticket::Ticket(InFlightGate& gate) : gate_(gate) {
    gate_.acquire();
}

InFlightGate::Ticket::~Ticket() {
    gate_.release();
}

void InFlightGate::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return current_ < limit_; });
    ++current_;
    int prev = peak_.load();
    while (prev < current_ && !peak_.compare_exchange_weak(prev, current_)) {
    }
}

void InFlightGate::release() {
    {
        std::lock_guard lock(mutex_);
        --current_;
    }
    cv_.notify_one();
}

RateLimiter::RateLimiter(int requests_per_minute, SleepFn sleep)
    : rate_per_ms_(requests_per_minute / 60000.0),
      tokens_(requests_per_minute > 0 ? 1.0 : 0.0),
      capacity_(static_cast<double>(requests_per_minute)),
      last_refill_(std::chrono::steady_clock::now()),
      sleep_(std::move(sleep)) {
    if (!sleep_) {
        sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

void RateLimiter::acquire() {
    if (rate_per_ms_ <= 0.0) {
        return;
    }
    while (true) {
        std::chrono::milliseconds wait{0};
        {
            std::lock_guard lock(mutex_);
            auto now = std::chrono::steady_clock::now();
            auto elapsed =
                std::chrono::duration_cast<std::chrono::milliseconds>(now - last_refill_);
            last_refill_ = now;
            tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_per_ms_);
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::milliseconds(
                static_cast<long>((1.0 - tokens_) / rate_per_ms_) + 1);
        }
        sleep_(wait);
    }
}

}  // namespace llmclust
