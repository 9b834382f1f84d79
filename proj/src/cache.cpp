#include "llmclust/cache.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <json.hpp>

#include "llmclust/errors.hpp"

namespace llmclust {

namespace {

using nlohmann::json;

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw CacheError("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string canonical_temperature(double t) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", t);
    return buf;
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string cache_key(const CompletionRequest& request) {
    std::string material = request.model_name;
    material.push_back('\x1f');
    material += canonical_temperature(request.temperature);
    material.push_back('\x1f');
    material += request.prompt;
    return sha256_hex(material);
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
        throw CacheError("cannot create cache directory " + dir_.string() + ": " + ec.message());
    }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) {
    auto path = dir_ / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    json entry = json::parse(in, nullptr, false);
    if (entry.is_discarded() || !entry.is_object() || !entry.contains("response_text") ||
        !entry["response_text"].is_string()) {
        spdlog::warn("quarantining corrupt cache entry {}", path.string());
        std::error_code ec;
        std::filesystem::rename(path, dir_ / (key + ".corrupt"), ec);
        return std::nullopt;
    }
    return entry["response_text"].get<std::string>();
}

void ResponseCache::store(const std::string& key, const CompletionRequest& request,
                          const std::string& response_text, BackendKind backend_kind) {
    json entry;
    entry["key"] = key;
    entry["model_name"] = request.model_name;
    entry["temperature"] = request.temperature;
    entry["backend_kind"] = std::string(to_string(backend_kind));
    entry["created_at"] = utc_timestamp();
    entry["response_text"] = response_text;

    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << key << ".tmp." << ::getpid() << "." << counter.fetch_add(1);
    auto tmp_path = dir_ / tmp_name.str();
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CacheError("cannot write cache entry " + tmp_path.string());
        }
        out << entry.dump(2) << '\n';
        if (!out.good()) {
            throw CacheError("short write on cache entry " + tmp_path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp_path, dir_ / (key + ".json"), ec);
    if (ec) {
        std::filesystem::remove(tmp_path, ec);
        throw CacheError("cannot finalize cache entry for key " + key);
    }
}

CachingClient::CachingClient(std::shared_ptr<CompletionBackend> backend,
                             std::filesystem::path cache_dir)
    : backend_(std::move(backend)), cache_(std::move(cache_dir)) {}

CompletionResult CachingClient::cached_complete(const CompletionRequest& request) {
    if (request.prompt.empty()) {
        throw ConfigError("completion request has an empty prompt");
    }
    const std::string key = cache_key(request);
    if (auto hit = cache_.lookup(key)) {
        ++cache_hits_;
        return {*hit, true};
    }
    std::string text = backend_->complete(request);
    ++backend_calls_;
    cache_.store(key, request, text, backend_->kind());
    return {std::move(text), false};
}

}  // namespace llmclust
