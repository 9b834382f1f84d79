#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "llmclust/backend.hpp"

namespace llmclust {

/// Deterministic scripted stand-in for the LLM. Generation prompts yield the
/// scripted labels of the batch's sentences that are not already offered;
/// merge prompts apply merge_map to fixpoint and return the deduplicated
/// image; assign prompts return the scripted label (canonicalized through
/// merge_map) when it is in the offered list, else default_label.
struct MockScript {
    std::map<std::string, std::string> generation_rules;  // document text -> label
    std::map<std::string, std::string> merge_map;         // label -> canonical label
    std::string default_label = "other";

    // Fault injection: verbatim responses that bypass the scripted logic.
    std::map<std::string, std::string> assign_overrides;  // sentence -> returned label
    std::optional<std::string> generate_raw_response;
    std::optional<std::string> merge_raw_response;

    /// Throws ConfigError when merge_map contains a cycle.
    void validate() const;

    /// Follows merge_map (normalized keys) to its fixpoint.
    std::string canonical(const std::string& label) const;

    static MockScript from_json_file(const std::filesystem::path& path);
};

class MockBackend : public CompletionBackend {
public:
    MockBackend(MockScript script, int max_in_flight,
                std::chrono::milliseconds latency = std::chrono::milliseconds(0));

    std::string complete(const CompletionRequest& request) override;
    BackendKind kind() const override { return BackendKind::mock; }

    int peak_in_flight() const { return gate_.peak(); }
    std::int64_t calls() const { return calls_.load(); }

private:
    std::string respond_generate(const std::string& prompt) const;
    std::string respond_merge(const std::string& prompt) const;
    std::string respond_assign(const std::string& prompt) const;

    MockScript script_;
    InFlightGate gate_;
    std::chrono::milliseconds latency_;
    std::atomic<std::int64_t> calls_{0};
};

}  // namespace llmclust
