#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace llmclust {

/// Canonical form used for label deduplication and matching: trims outer
/// whitespace, collapses internal whitespace runs to single spaces and
/// lower-cases ASCII letters. Other bytes pass through untouched, so UTF-8
/// input stays valid. Total and idempotent; may return "".
std::string normalize_label(std::string_view raw);

struct Document {
    std::size_t id = 0;  // contiguous 0..N-1 within a Dataset
    std::string text;
    std::optional<std::string> gold_label;
};

class Dataset {
public:
    Dataset(std::vector<Document> documents, std::string name,
            std::optional<std::vector<std::string>> gold_label_set = std::nullopt);

    const std::vector<Document>& documents() const { return documents_; }
    const std::string& name() const { return name_; }
    std::size_t size() const { return documents_.size(); }

    bool has_gold_labels() const { return gold_label_set_.has_value(); }
    // Unique gold labels ordered by first occurrence.
    const std::vector<std::string>& gold_label_set() const;
    std::size_t num_gold_classes() const { return gold_label_set().size(); }

private:
    std::vector<Document> documents_;
    std::string name_;
    std::optional<std::vector<std::string>> gold_label_set_;
};

enum class Provenance { seeded, generated, merged, gold };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// Ordered list of cluster labels, unique under normalize_label. Original
/// surface forms are kept for readability; lookups go through the
/// normalized keys.
class LabelSet {
public:
    // Throws ConfigError on empty-after-normalization or duplicate labels.
    LabelSet(std::vector<std::string> labels, Provenance provenance);

    // First occurrence wins; empty-after-normalization entries are dropped.
    static LabelSet deduplicated(const std::vector<std::string>& raw, Provenance provenance);

    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<std::string>& normalized() const { return normalized_; }
    Provenance provenance() const { return provenance_; }
    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }

    // Index of the label whose normalized form equals normalize_label(raw).
    std::optional<std::size_t> find(std::string_view raw) const;

private:
    LabelSet() = default;

    std::vector<std::string> labels_;
    std::vector<std::string> normalized_;
    std::unordered_map<std::string, std::size_t> index_;
    Provenance provenance_ = Provenance::generated;
};

/// Total map from document id to an index into a LabelSet, or kUnmatched for
/// documents whose classification never resolved to an offered label.
class Assignment {
public:
    static constexpr std::int64_t kUnmatched = -1;

    Assignment(std::vector<std::int64_t> doc_to_label, LabelSet label_set);

    const std::vector<std::int64_t>& doc_to_label() const { return doc_to_label_; }
    const LabelSet& label_set() const { return label_set_; }
    std::size_t size() const { return doc_to_label_.size(); }

    std::size_t unmatched_count() const;

private:
    std::vector<std::int64_t> doc_to_label_;
    LabelSet label_set_;
};

enum class BackendKind { http, mock };

std::string_view to_string(BackendKind k);
BackendKind backend_kind_from_string(std::string_view s);

struct RunConfig {
    int batch_size = 15;
    double example_fraction = 0.20;
    std::uint64_t seed = 0;
    BackendKind backend = BackendKind::mock;
    std::string model_name = "gpt-3.5-turbo";
    double temperature = 0.0;
    int max_retries = 3;
    int max_in_flight = 4;
    std::string cache_dir;  // empty -> <run_dir>/cache
    bool feed_back_generated_labels = true;

    // http backend
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    int requests_per_minute = 0;  // 0 = unlimited
    int max_tokens = 0;           // 0 = backend default

    // merge chunking (labels per chunk, prompt character budget)
    int merge_chunk_size = 200;
    int merge_char_budget = 60000;

    // Throws ConfigError when a field is out of range.
    void validate() const;
};

}  // namespace llmclust
