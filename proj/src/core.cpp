#include "llmclust/core.hpp"

#include <algorithm>
#include <cctype>

#include "llmclust/errors.hpp"

namespace llmclust {

namespace {

bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::string normalize_label(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

Dataset::Dataset(std::vector<Document> documents, std::string name,
                 std::optional<std::vector<std::string>> gold_label_set)
    : documents_(std::move(documents)),
      name_(std::move(name)),
      gold_label_set_(std::move(gold_label_set)) {
    if (documents_.empty()) {
        throw DataError("dataset '" + name_ + "' has no documents");
    }
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        if (documents_[i].id != i) {
            throw DataError("document ids must be contiguous: expected " + std::to_string(i) +
                            ", got " + std::to_string(documents_[i].id));
        }
        const auto& text = documents_[i].text;
        if (std::all_of(text.begin(), text.end(),
                        [](unsigned char c) { return is_ascii_space(c); })) {
            throw DataError("document " + std::to_string(i) + " has empty text");
        }
    }
    if (gold_label_set_.has_value()) {
        for (const auto& doc : documents_) {
            if (!doc.gold_label) {
                continue;
            }
            if (std::find(gold_label_set_->begin(), gold_label_set_->end(), *doc.gold_label) ==
                gold_label_set_->end()) {
                throw DataError("gold label '" + *doc.gold_label +
                                "' of document " + std::to_string(doc.id) +
                                " is missing from the gold label set");
            }
        }
    }
}

const std::vector<std::string>& Dataset::gold_label_set() const {
    if (!gold_label_set_) {
        throw DataError("dataset '" + name_ + "' has no gold labels");
    }
    return *gold_label_set_;
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::seeded: return "seeded";
        case Provenance::generated: return "generated";
        case Provenance::merged: return "merged";
        case Provenance::gold: return "gold";
    }
    return "generated";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "seeded") return Provenance::seeded;
    if (s == "generated") return Provenance::generated;
    if (s == "merged") return Provenance::merged;
    if (s == "gold") return Provenance::gold;
    throw ConfigError("unknown provenance: '" + std::string(s) + "'");
}

LabelSet::LabelSet(std::vector<std::string> labels, Provenance provenance) {
    provenance_ = provenance;
    labels_.reserve(labels.size());
    normalized_.reserve(labels.size());
    for (auto& label : labels) {
        std::string key = normalize_label(label);
        if (key.empty()) {
            throw ConfigError("label '" + label + "' is empty after normalization");
        }
        auto [it, inserted] = index_.emplace(key, labels_.size());
        if (!inserted) {
            throw ConfigError("duplicate label under normalization: '" + label + "' vs '" +
                              labels_[it->second] + "'");
        }
        labels_.push_back(std::move(label));
        normalized_.push_back(std::move(key));
    }
}

LabelSet LabelSet::deduplicated(const std::vector<std::string>& raw, Provenance provenance) {
    LabelSet set;
    set.provenance_ = provenance;
    for (const auto& label : raw) {
        std::string key = normalize_label(label);
        if (key.empty()) {
            continue;
        }
        auto [it, inserted] = set.index_.emplace(key, set.labels_.size());
        if (!inserted) {
            continue;
        }
        set.labels_.push_back(label);
        set.normalized_.push_back(std::move(key));
    }
    return set;
}

std::optional<std::size_t> LabelSet::find(std::string_view raw) const {
    auto it = index_.find(normalize_label(raw));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

Assignment::Assignment(std::vector<std::int64_t> doc_to_label, LabelSet label_set)
    : doc_to_label_(std::move(doc_to_label)), label_set_(std::move(label_set)) {
    for (std::size_t id = 0; id < doc_to_label_.size(); ++id) {
        std::int64_t v = doc_to_label_[id];
        if (v == kUnmatched) {
            continue;
        }
        if (v < 0 || static_cast<std::size_t>(v) >= label_set_.size()) {
            throw DataError("assignment of document " + std::to_string(id) +
                            " points outside the label set: " + std::to_string(v));
        }
    }
}

std::size_t Assignment::unmatched_count() const {
    return static_cast<std::size_t>(
        std::count(doc_to_label_.begin(), doc_to_label_.end(), kUnmatched));
}

std::string_view to_string(BackendKind k) {
    return k == BackendKind::http ? "http" : "mock";
}

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http") return BackendKind::http;
    if (s == "mock") return BackendKind::mock;
    throw ConfigError("unknown backend: '" + std::string(s) + "' (expected http or mock)");
}

void RunConfig::validate() const {
    if (batch_size < 1) {
        throw ConfigError("batch_size must be >= 1");
    }
    if (example_fraction < 0.0 || example_fraction > 1.0) {
        throw ConfigError("example_fraction must be in [0, 1]");
    }
    if (temperature < 0.0) {
        throw ConfigError("temperature must be >= 0");
    }
    if (max_retries < 0) {
        throw ConfigError("max_retries must be >= 0");
    }
    if (max_in_flight < 1) {
        throw ConfigError("max_in_flight must be >= 1");
    }
    if (requests_per_minute < 0) {
        throw ConfigError("requests_per_minute must be >= 0");
    }
    if (merge_chunk_size < 1) {
        throw ConfigError("merge_chunk_size must be >= 1");
    }
    if (model_name.empty()) {
        throw ConfigError("model_name must not be empty");
    }
}

}  // namespace llmclust
