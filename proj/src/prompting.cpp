#include "llmclust/prompting.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "llmclust/errors.hpp"

namespace llmclust {

namespace {

constexpr std::string_view kGenerateTemplate =
    R"(Given the labels, under a text classification scenario, can all these text match the label given?
If the sentence does not match any of the label, please generate a meaningful new label name.
Labels: {given_labels}
Sentences: {sentence_list}
You should NOT return meaningless label names such as 'new_label_1' or 'unknown_topic_1' and only return the new label names, please return in json format like: {json_example})";

constexpr std::string_view kMergeTemplate =
    R"(Please analyze the provided list of labels to identify entries that are similar or duplicate, considering synonyms, variations in phrasing, and closely related terms that essentially refer to the same concept. Your task is to merge these similar entries into a single representative label for each unique concept identified. The goal is to simplify the list by reducing redundancies without organizing it into subcategories or altering its fundamental structure. Here is the list of labels for analysis and simplification:{label_list}.
Produce the final, simplified list in a flat, JSON-formatted structure without any substructures or hierarchical categorization like: {json_example})";

constexpr std::string_view kAssignTemplate =
    R"(Given the label list and the sentence, please categorize the sentence into one of the labels.
Label list: {label_list}
Sentence: {sentence}
You should only return the label name, please return in json format like: {json_example})";

struct Substitution {
    std::string_view placeholder;
    std::string_view value;
};

// Single left-to-right pass over the template; substitution values are never
// rescanned, so labels or sentences that happen to contain a placeholder
// marker stay literal.
std::string fill_template(std::string_view tmpl, const std::vector<Substitution>& subs) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t best = std::string_view::npos;
        const Substitution* best_sub = nullptr;
        for (const auto& sub : subs) {
            auto found = tmpl.find(sub.placeholder, pos);
            if (found < best) {
                best = found;
                best_sub = &sub;
            }
        }
        if (best_sub == nullptr) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, best - pos));
        out.append(best_sub->value);
        pos = best + best_sub->placeholder.size();
    }
    return out;
}

void require_placeholders(std::string_view tmpl, std::string_view name,
                          std::initializer_list<std::string_view> placeholders) {
    for (auto p : placeholders) {
        if (tmpl.find(p) == std::string_view::npos) {
            throw ConfigError(std::string(name) + " template is missing placeholder " +
                              std::string(p));
        }
    }
}

std::string read_template_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open prompt template: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (!text.empty() && text.back() == '\n') {
        text.pop_back();
        if (!text.empty() && text.back() == '\r') {
            text.pop_back();
        }
    }
    return text;
}

std::string quote_single(std::string_view item) {
    std::string out;
    out.reserve(item.size() + 2);
    out.push_back('\'');
    for (char c : item) {
        if (c == '\'') {
            out.push_back('\\');
        }
        out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

}  // namespace

std::string_view to_string(PromptKind k) {
    switch (k) {
        case PromptKind::generate: return "generate";
        case PromptKind::merge: return "merge";
        case PromptKind::assign: return "assign";
    }
    return "generate";
}

std::string_view response_key(PromptKind kind) {
    switch (kind) {
        case PromptKind::generate: return "labels";
        case PromptKind::merge: return "merged_labels";
        case PromptKind::assign: return "label_name";
    }
    return "labels";
}

std::string_view json_example(PromptKind kind) {
    switch (kind) {
        case PromptKind::generate: return "{'labels': ['label name', 'label name']}";
        case PromptKind::merge: return "{'merged_labels': ['label name', 'label name']}";
        case PromptKind::assign: return "{'label_name': 'label'}";
    }
    return "";
}

PromptTemplates PromptTemplates::builtin() {
    PromptTemplates t;
    t.generate = std::string(kGenerateTemplate);
    t.merge = std::string(kMergeTemplate);
    t.assign = std::string(kAssignTemplate);
    return t;
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.generate = read_template_file(dir / "generate.txt");
    t.merge = read_template_file(dir / "merge.txt");
    t.assign = read_template_file(dir / "assign.txt");
    t.validate();
    return t;
}

void PromptTemplates::validate() const {
    require_placeholders(generate, "generate",
                         {"{given_labels}", "{sentence_list}", "{json_example}"});
    require_placeholders(merge, "merge", {"{label_list}", "{json_example}"});
    require_placeholders(assign, "assign", {"{label_list}", "{sentence}", "{json_example}"});
}

std::string render_label_list(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += quote_single(items[i]);
    }
    out += "]";
    return out;
}

std::string render_quoted_sentence(std::string_view sentence) {
    std::string out;
    out.reserve(sentence.size() + 2);
    out.push_back('"');
    for (char c : sentence) {
        if (c == '"') {
            out.push_back('\\');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

PromptBundle render_generation_prompt(const PromptTemplates& templates,
                                      const std::vector<std::string>& given_labels,
                                      const MiniBatch& batch) {
    if (batch.documents.empty()) {
        throw ConfigError("cannot render a generation prompt for an empty batch");
    }
    std::vector<std::string> sentences;
    sentences.reserve(batch.documents.size());
    for (const auto& doc : batch.documents) {
        sentences.push_back(doc.text);
    }

    PromptBundle bundle;
    bundle.kind = PromptKind::generate;
    bundle.json_example = std::string(json_example(PromptKind::generate));
    bundle.label_context = given_labels;
    bundle.rendered_text = fill_template(
        templates.generate, {{"{given_labels}", render_label_list(given_labels)},
                             {"{sentence_list}", render_label_list(sentences)},
                             {"{json_example}", bundle.json_example}});
    return bundle;
}

PromptBundle render_merge_prompt(const PromptTemplates& templates,
                                 const std::vector<std::string>& labels) {
    if (labels.empty()) {
        throw ConfigError("cannot render a merge prompt for an empty label list");
    }
    PromptBundle bundle;
    bundle.kind = PromptKind::merge;
    bundle.json_example = std::string(json_example(PromptKind::merge));
    bundle.label_context = labels;
    bundle.rendered_text =
        fill_template(templates.merge, {{"{label_list}", render_label_list(labels)},
                                        {"{json_example}", bundle.json_example}});
    return bundle;
}

PromptBundle render_assign_prompt(const PromptTemplates& templates,
                                  const std::vector<std::string>& labels,
                                  std::string_view sentence) {
    if (labels.empty()) {
        throw ConfigError("cannot render an assign prompt for an empty label list");
    }
    if (sentence.empty()) {
        throw ConfigError("cannot render an assign prompt for an empty sentence");
    }
    PromptBundle bundle;
    bundle.kind = PromptKind::assign;
    bundle.json_example = std::string(json_example(PromptKind::assign));
    bundle.label_context = labels;
    bundle.rendered_text =
        fill_template(templates.assign, {{"{label_list}", render_label_list(labels)},
                                         {"{sentence}", render_quoted_sentence(sentence)},
                                         {"{json_example}", bundle.json_example}});
    return bundle;
}

std::vector<std::string> parse_labels_response(std::string_view text, std::string_view key) {
    using nlohmann::json;

    // Models decorate JSON with prose and ``` fences; scan for the first
    // balanced object that actually parses.
    json payload;
    bool found = false;
    for (std::size_t start = text.find('{'); start != std::string_view::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    auto candidate = text.substr(start, i - start + 1);
                    payload = json::parse(candidate, nullptr, false);
                    if (!payload.is_discarded() && payload.is_object()) {
                        found = true;
                    }
                    break;
                }
            }
        }
        if (found) {
            break;
        }
    }
    if (!found) {
        throw ResponseFormatError(ResponseFormatError::Cause::no_json_found,
                                  "no JSON object found in response");
    }

    if (!payload.contains(key)) {
        throw ResponseFormatError(ResponseFormatError::Cause::key_missing,
                                  "response JSON has no key '" + std::string(key) + "'");
    }

    const auto& value = payload.at(std::string(key));
    std::vector<std::string> raw;
    if (value.is_string()) {
        raw.push_back(value.get<std::string>());
    } else if (value.is_array()) {
        for (const auto& item : value) {
            if (!item.is_string()) {
                throw ResponseFormatError(ResponseFormatError::Cause::wrong_shape,
                                          "'" + std::string(key) +
                                              "' must be a string or a list of strings");
            }
            raw.push_back(item.get<std::string>());
        }
    } else {
        throw ResponseFormatError(ResponseFormatError::Cause::wrong_shape,
                                  "'" + std::string(key) +
                                      "' must be a string or a list of strings");
    }

    std::vector<std::string> labels;
    labels.reserve(raw.size());
    for (const auto& item : raw) {
        std::string normalized = normalize_label(item);
        if (!normalized.empty()) {
            labels.push_back(std::move(normalized));
        }
    }
    return labels;
}

}  // namespace llmclust
