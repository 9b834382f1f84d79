#include "llmclust/mock_backend.hpp"

#include <fstream>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "llmclust/errors.hpp"
#include "llmclust/prompting.hpp"

namespace llmclust {

namespace {

using nlohmann::json;

// Inverse of render_label_list: ['a', 'b'] with \' escapes. Tolerates
// whitespace padding inside the brackets.
std::vector<std::string> parse_quoted_list(std::string_view text) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    };
    skip_ws();
    if (pos >= text.size() || text[pos] != '[') {
        throw DataError("scripted backend expected a bracketed list");
    }
    ++pos;
    skip_ws();
    if (pos < text.size() && text[pos] == ']') {
        return items;
    }
    while (pos < text.size()) {
        if (text[pos] != '\'') {
            throw DataError("scripted backend expected a quoted list item");
        }
        ++pos;
        std::string item;
        while (pos < text.size()) {
            char c = text[pos];
            if (c == '\\' && pos + 1 < text.size() && text[pos + 1] == '\'') {
                item.push_back('\'');
                pos += 2;
                continue;
            }
            if (c == '\'') {
                break;
            }
            item.push_back(c);
            ++pos;
        }
        if (pos >= text.size()) {
            throw DataError("scripted backend hit an unterminated list item");
        }
        ++pos;  // closing quote
        items.push_back(std::move(item));
        skip_ws();
        if (pos < text.size() && text[pos] == ',') {
            ++pos;
            skip_ws();
            continue;
        }
        if (pos < text.size() && text[pos] == ']') {
            return items;
        }
        throw DataError("scripted backend expected ',' or ']' in list");
    }
    throw DataError("scripted backend hit an unterminated list");
}

// Extracts the rest of the line following `marker`.
std::string_view line_after(std::string_view prompt, std::string_view marker) {
    auto start = prompt.find(marker);
    if (start == std::string_view::npos) {
        throw DataError("scripted backend could not find '" + std::string(marker) +
                        "' in the prompt");
    }
    start += marker.size();
    auto end = prompt.find('\n', start);
    if (end == std::string_view::npos) {
        end = prompt.size();
    }
    return prompt.substr(start, end - start);
}

std::string parse_quoted_sentence(std::string_view text) {
    auto start = text.find('"');
    if (start == std::string_view::npos) {
        throw DataError("scripted backend expected a quoted sentence");
    }
    std::string out;
    for (std::size_t i = start + 1; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\\' && i + 1 < text.size() && text[i + 1] == '"') {
            out.push_back('"');
            ++i;
            continue;
        }
        if (c == '"') {
            return out;
        }
        out.push_back(c);
    }
    throw DataError("scripted backend hit an unterminated sentence");
}

std::map<std::string, std::string> normalized_map(const std::map<std::string, std::string>& raw) {
    std::map<std::string, std::string> out;
    for (const auto& [key, value] : raw) {
        out[normalize_label(key)] = value;
    }
    return out;
}

}  // namespace

void MockScript::validate() const {
    for (const auto& [key, value] : merge_map) {
        std::unordered_set<std::string> seen;
        std::string cur = normalize_label(key);
        std::string next = normalize_label(value);
        seen.insert(cur);
        auto normalized = normalized_map(merge_map);
        while (next != cur) {
            if (!seen.insert(next).second) {
                throw ConfigError("merge_map contains a cycle through '" + key + "'");
            }
            cur = next;
            auto it = normalized.find(cur);
            if (it == normalized.end()) {
                break;
            }
            next = normalize_label(it->second);
        }
    }
}

std::string MockScript::canonical(const std::string& label) const {
    auto normalized = normalized_map(merge_map);
    std::string cur = normalize_label(label);
    std::unordered_set<std::string> seen{cur};
    while (true) {
        auto it = normalized.find(cur);
        if (it == normalized.end()) {
            return cur;
        }
        std::string next = normalize_label(it->second);
        if (next == cur || !seen.insert(next).second) {
            return next;
        }
        cur = std::move(next);
    }
}

MockScript MockScript::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open mock script: " + path.string());
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("mock script is not a JSON object: " + path.string());
    }

    MockScript script;
    for (const auto& [key, value] : doc.items()) {
        if (key == "generation_rules") {
            script.generation_rules = value.get<std::map<std::string, std::string>>();
        } else if (key == "merge_map") {
            script.merge_map = value.get<std::map<std::string, std::string>>();
        } else if (key == "default_label") {
            script.default_label = value.get<std::string>();
        } else if (key == "assign_overrides") {
            script.assign_overrides = value.get<std::map<std::string, std::string>>();
        } else if (key == "generate_raw_response") {
            script.generate_raw_response = value.get<std::string>();
        } else if (key == "merge_raw_response") {
            script.merge_raw_response = value.get<std::string>();
        } else {
            throw ConfigError("unknown mock script key: '" + key + "'");
        }
    }
    script.validate();
    return script;
}

MockBackend::MockBackend(MockScript script, int max_in_flight, std::chrono::milliseconds latency)
    : script_(std::move(script)), gate_(max_in_flight), latency_(latency) {
    script_.validate();
}

std::string MockBackend::complete(const CompletionRequest& request) {
    InFlightGate::Ticket ticket(gate_);
    ++calls_;
    if (latency_.count() > 0) {
        std::this_thread::sleep_for(latency_);
    }

    const std::string& prompt = request.prompt;
    if (prompt.find("\nSentences: [") != std::string::npos) {
        return respond_generate(prompt);
    }
    if (prompt.find("simplification:[") != std::string::npos) {
        return respond_merge(prompt);
    }
    if (prompt.find("\nSentence: \"") != std::string::npos) {
        return respond_assign(prompt);
    }
    throw BackendError(BackendFailure::protocol,
                       "scripted backend does not recognize the prompt shape");
}

std::string MockBackend::respond_generate(const std::string& prompt) const {
    if (script_.generate_raw_response) {
        return *script_.generate_raw_response;
    }
    auto given = parse_quoted_list(line_after(prompt, "\nLabels: "));
    auto sentences = parse_quoted_list(line_after(prompt, "\nSentences: "));

    std::unordered_set<std::string> offered;
    for (const auto& label : given) {
        offered.insert(normalize_label(label));
    }

    json labels = json::array();
    for (const auto& sentence : sentences) {
        auto it = script_.generation_rules.find(sentence);
        if (it == script_.generation_rules.end()) {
            continue;
        }
        if (offered.insert(normalize_label(it->second)).second) {
            labels.push_back(it->second);
        }
    }
    return json{{"labels", labels}}.dump();
}

std::string MockBackend::respond_merge(const std::string& prompt) const {
    if (script_.merge_raw_response) {
        return *script_.merge_raw_response;
    }
    auto offset = prompt.find("simplification:[");
    auto labels = parse_quoted_list(
        std::string_view(prompt).substr(offset + std::string_view("simplification:").size()));

    json merged = json::array();
    std::unordered_set<std::string> seen;
    for (const auto& label : labels) {
        std::string canonical = script_.canonical(label);
        if (seen.insert(canonical).second) {
            merged.push_back(canonical);
        }
    }
    return json{{"merged_labels", merged}}.dump();
}

std::string MockBackend::respond_assign(const std::string& prompt) const {
    auto offered = parse_quoted_list(line_after(prompt, "\nLabel list: "));
    auto sentence = parse_quoted_sentence(line_after(prompt, "\nSentence: "));

    if (auto it = script_.assign_overrides.find(sentence); it != script_.assign_overrides.end()) {
        return json{{"label_name", it->second}}.dump();
    }

    std::unordered_set<std::string> in_list;
    for (const auto& label : offered) {
        in_list.insert(normalize_label(label));
    }

    std::string answer = script_.default_label;
    if (auto it = script_.generation_rules.find(sentence); it != script_.generation_rules.end()) {
        std::string canonical = script_.canonical(it->second);
        if (in_list.count(canonical) > 0) {
            answer = canonical;
        } else if (in_list.count(normalize_label(it->second)) > 0) {
            answer = it->second;
        }
    }
    return json{{"label_name", answer}}.dump();
}

}  // namespace llmclust
