#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "llmclust/backend.hpp"

namespace llmclust {

/// Hex digest identifying a completion request: sha256 over
/// (model_name, temperature, prompt). Dataset and document ids are
/// deliberately absent; identical prompts share one entry.
std::string cache_key(const CompletionRequest& request);

/// One file per entry under cache_dir, named <key>.json, holding the raw
/// response plus a small metadata header. Writes go through a temp file and
/// an atomic rename, so concurrent writers are safe. Unreadable entries are
/// quarantined to <key>.corrupt and treated as misses.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> lookup(const std::string& key);
    void store(const std::string& key, const CompletionRequest& request,
               const std::string& response_text, BackendKind backend_kind);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

struct CompletionResult {
    std::string text;
    bool cache_hit = false;
};

/// Read-through cache in front of a backend. Counters reflect this client's
/// lifetime: physical backend calls (misses) and cache hits.
class CachingClient {
public:
    CachingClient(std::shared_ptr<CompletionBackend> backend, std::filesystem::path cache_dir);

    CompletionResult cached_complete(const CompletionRequest& request);

    std::int64_t backend_calls() const { return backend_calls_.load(); }
    std::int64_t cache_hits() const { return cache_hits_.load(); }

    CompletionBackend& backend() { return *backend_; }

private:
    std::shared_ptr<CompletionBackend> backend_;
    ResponseCache cache_;
    std::atomic<std::int64_t> backend_calls_{0};
    std::atomic<std::int64_t> cache_hits_{0};
};

}  // namespace llmclust
