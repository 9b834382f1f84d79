#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "llmclust/cache.hpp"
#include "llmclust/core.hpp"
#include "llmclust/dataset_io.hpp"
#include "llmclust/prompting.hpp"

namespace llmclust {

struct RunStats {
    std::int64_t batches = 0;
    std::int64_t generation_requests = 0;
    std::int64_t merge_requests = 0;
    std::int64_t classify_requests = 0;  // includes re-asks
    std::int64_t reasks = 0;
    std::int64_t generation_parse_failures = 0;
    std::int64_t merge_fallbacks = 0;
    std::int64_t unmatched = 0;
    std::int64_t backend_calls = 0;  // physical calls (cache misses)
    std::int64_t cache_hits = 0;
};

struct GenerationState {
    std::vector<std::string> examples;                       // seeded surface forms
    std::vector<std::vector<std::string>> raw_labels_per_batch;
    std::vector<std::string> running_pool;                   // examples + generated, unique
    std::vector<std::string> unique_labels;                  // aggregate of the above
};

struct ClusteringResult {
    LabelSet label_set;
    Assignment assignment;
    RunStats stats;
    RunConfig config_snapshot;
};

/// Stage orchestration: label generation over mini-batches, aggregation,
/// merging, then per-document classification. Generation is sequential (the
/// running pool feeds later prompts); classification fans out up to
/// max_in_flight concurrent requests.
class Pipeline {
public:
    Pipeline(RunConfig config, PromptTemplates templates,
             std::shared_ptr<CompletionBackend> backend, std::filesystem::path cache_dir);

    /// Stage 1a: one generation prompt per mini-batch, in order. The prompt's
    /// label context is the seeded examples, plus everything generated so far
    /// when feed_back_generated_labels is on. A batch whose response cannot
    /// be parsed after one re-ask contributes zero labels.
    GenerationState generate_labels(const Dataset& dataset, const LabelSet& examples);

    /// Stage 1b: examples followed by generated labels, deduplicated under
    /// normalization, first occurrence wins. Throws DataError when empty.
    static std::vector<std::string> aggregate_unique(const GenerationState& state);

    /// Stage 1c: one merge call (chunked when the prompt exceeds the
    /// character budget). Falls back to the input unchanged when the response
    /// is unparseable, empty, or larger than the input.
    LabelSet merge_labels(const std::vector<std::string>& unique_labels);

    /// Stage 2: classify every document against the merged labels. An answer
    /// outside the label set is re-asked once, then recorded as UNMATCHED.
    Assignment classify_all(const Dataset& dataset, const LabelSet& labels);

    /// Full run: sample examples, generate, aggregate, merge, classify, and
    /// persist artifacts under run_dir (pass an empty path to skip
    /// persistence). Re-running a completed run replays from the response
    /// cache with zero backend calls.
    ClusteringResult run(const Dataset& dataset, const std::filesystem::path& run_dir);

    const RunStats& stats() const { return stats_; }
    CachingClient& client() { return *client_; }

private:
    struct MergeOutcome {
        std::vector<std::string> labels;
        bool fell_back = false;
    };

    CompletionResult request(const std::string& prompt);
    std::vector<std::string> request_labels_with_reask(const std::string& prompt,
                                                       PromptKind kind,
                                                       std::int64_t& request_counter);
    MergeOutcome merge_once(const std::vector<std::string>& labels);

    RunConfig config_;
    PromptTemplates templates_;
    std::shared_ptr<CompletionBackend> backend_;
    std::unique_ptr<CachingClient> client_;
    RunStats stats_;
};

}  // namespace llmclust
