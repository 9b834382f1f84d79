#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "llmclust/dataset_io.hpp"

namespace llmclust {

enum class PromptKind { generate, merge, assign };

std::string_view to_string(PromptKind k);

/// JSON key the model is asked to respond with for each task.
std::string_view response_key(PromptKind kind);

/// The literal JSON example appended to each template.
std::string_view json_example(PromptKind kind);

struct PromptBundle {
    PromptKind kind = PromptKind::generate;
    std::string rendered_text;
    std::string json_example;
    std::vector<std::string> label_context;  // labels used to fill the template
};

/// The three task templates. Placeholders: {given_labels}, {sentence_list},
/// {label_list}, {sentence}, {json_example}.
struct PromptTemplates {
    std::string generate;
    std::string merge;
    std::string assign;

    /// Compiled-in copies of the canonical template assets.
    static PromptTemplates builtin();

    /// Loads generate.txt / merge.txt / assign.txt from a directory. One
    /// trailing newline per file is stripped. Throws ConfigError when a file
    /// is missing or lacks a required placeholder.
    static PromptTemplates load_dir(const std::filesystem::path& dir);

    void validate() const;
};

/// ['a', 'b'] with single quotes; embedded single quotes become \'.
std::string render_label_list(const std::vector<std::string>& items);

/// "..." with embedded double quotes escaped, the form sentences take in
/// the assign template.
std::string render_quoted_sentence(std::string_view sentence);

PromptBundle render_generation_prompt(const PromptTemplates& templates,
                                      const std::vector<std::string>& given_labels,
                                      const MiniBatch& batch);

PromptBundle render_merge_prompt(const PromptTemplates& templates,
                                 const std::vector<std::string>& labels);

PromptBundle render_assign_prompt(const PromptTemplates& templates,
                                  const std::vector<std::string>& labels,
                                  std::string_view sentence);

/// Extracts the value at `key` from the first JSON object found in `text`,
/// tolerating surrounding prose and code fences. A string value yields one
/// element, an array of strings yields its elements in order; every element
/// is normalized and empty ones are dropped.
/// Throws ResponseFormatError: no_json_found, key_missing, wrong_shape.
std::vector<std::string> parse_labels_response(std::string_view text, std::string_view key);

}  // namespace llmclust
