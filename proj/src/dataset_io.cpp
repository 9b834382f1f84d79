#include "llmclust/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "llmclust/errors.hpp"

namespace llmclust {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n\f\v");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n\f\v");
    return s.substr(begin, end - begin + 1);
}

struct RawRow {
    std::string text;
    std::optional<std::string> label;
};

void append_row(std::vector<Document>& docs, std::vector<std::string>& gold_set,
                std::unordered_set<std::string>& seen_labels, RawRow row, std::size_t line_no) {
    if (trim(row.text).empty()) {
        throw DataError("empty text field", line_no);
    }
    Document doc;
    doc.id = docs.size();
    doc.text = std::move(row.text);
    if (row.label && !trim(*row.label).empty()) {
        doc.gold_label = std::move(*row.label);
        if (seen_labels.insert(*doc.gold_label).second) {
            gold_set.push_back(*doc.gold_label);
        }
    }
    docs.push_back(std::move(doc));
}

void load_jsonl(std::istream& in, std::vector<Document>& docs, std::vector<std::string>& gold_set,
                std::unordered_set<std::string>& seen_labels) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw DataError("malformed JSON record", line_no);
        }
        if (!record.contains("text") || !record["text"].is_string()) {
            throw DataError("missing string field 'text'", line_no);
        }
        RawRow row;
        row.text = record["text"].get<std::string>();
        if (record.contains("label") && !record["label"].is_null()) {
            if (!record["label"].is_string()) {
                throw DataError("field 'label' must be a string or null", line_no);
            }
            row.label = record["label"].get<std::string>();
        }
        append_row(docs, gold_set, seen_labels, std::move(row), line_no);
    }
}

// RFC 4180 style: quoted fields may contain the delimiter, newlines are not
// supported inside fields (records are physical lines), "" unescapes to ".
std::vector<std::string> split_delimited(const std::string& line, char delim, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            if (!cur.empty()) {
                throw DataError("unexpected quote inside unquoted field", line_no);
            }
            in_quotes = true;
        } else if (c == delim) {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (in_quotes) {
        throw DataError("unterminated quoted field", line_no);
    }
    fields.push_back(std::move(cur));
    return fields;
}

void load_delimited(std::istream& in, char delim, std::vector<Document>& docs,
                    std::vector<std::string>& gold_set,
                    std::unordered_set<std::string>& seen_labels) {
    std::string line;
    if (!std::getline(in, line)) {
        return;
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    auto header = split_delimited(line, delim, 1);
    std::ptrdiff_t text_col = -1, label_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = trim(header[i]);
        if (name == "text") text_col = static_cast<std::ptrdiff_t>(i);
        if (name == "label") label_col = static_cast<std::ptrdiff_t>(i);
    }
    if (text_col < 0) {
        throw DataError("header row must contain a 'text' column", 1);
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto fields = split_delimited(line, delim, line_no);
        if (fields.size() != header.size()) {
            throw DataError("expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()), line_no);
        }
        RawRow row;
        row.text = fields[static_cast<std::size_t>(text_col)];
        if (label_col >= 0 && !fields[static_cast<std::size_t>(label_col)].empty()) {
            row.label = fields[static_cast<std::size_t>(label_col)];
        }
        append_row(docs, gold_set, seen_labels, std::move(row), line_no);
    }
}

}  // namespace

DatasetFormat dataset_format_from_string(std::string_view s) {
    if (s == "jsonl") return DatasetFormat::jsonl;
    if (s == "csv") return DatasetFormat::csv;
    if (s == "tsv") return DatasetFormat::tsv;
    throw ConfigError("unknown dataset format: '" + std::string(s) + "'");
}

std::string_view to_string(DatasetFormat f) {
    switch (f) {
        case DatasetFormat::jsonl: return "jsonl";
        case DatasetFormat::csv: return "csv";
        case DatasetFormat::tsv: return "tsv";
    }
    return "jsonl";
}

DatasetFormat guess_dataset_format(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".csv") return DatasetFormat::csv;
    if (ext == ".tsv") return DatasetFormat::tsv;
    return DatasetFormat::jsonl;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset file: " + path.string());
    }

    std::vector<Document> docs;
    std::vector<std::string> gold_set;
    std::unordered_set<std::string> seen_labels;
    switch (format) {
        case DatasetFormat::jsonl:
            load_jsonl(in, docs, gold_set, seen_labels);
            break;
        case DatasetFormat::csv:
            load_delimited(in, ',', docs, gold_set, seen_labels);
            break;
        case DatasetFormat::tsv:
            load_delimited(in, '\t', docs, gold_set, seen_labels);
            break;
    }
    if (docs.empty()) {
        throw DataError("dataset file has no valid rows: " + path.string());
    }

    std::optional<std::vector<std::string>> labels;
    if (!gold_set.empty()) {
        labels = std::move(gold_set);
    }
    return Dataset(std::move(docs), path.stem().string(), std::move(labels));
}

void write_canonical_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write canonical dataset copy: " + path.string());
    }
    for (const auto& doc : dataset.documents()) {
        json record;
        record["id"] = doc.id;
        record["text"] = doc.text;
        record["label"] = doc.gold_label ? json(*doc.gold_label) : json(nullptr);
        out << record.dump() << '\n';
    }
    if (!out.good()) {
        throw DataError("short write on canonical dataset copy: " + path.string());
    }
}

LabelSet sample_example_labels(const Dataset& dataset, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw ConfigError("example fraction must be in [0, 1]");
    }
    if (fraction == 0.0 || !dataset.has_gold_labels()) {
        if (fraction > 0.0) {
            throw DataError("cannot sample example labels: dataset has no gold labels");
        }
        return LabelSet({}, Provenance::seeded);
    }

    const auto& gold = dataset.gold_label_set();
    const auto k = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(gold.size())));

    // Partial Fisher-Yates with explicit modulo draws keeps the selection
    // stable across standard libraries.
    std::vector<std::size_t> order(gold.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k && i + 1 < order.size(); ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (order.size() - i));
        std::swap(order[i], order[j]);
    }

    std::vector<std::size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(picked.begin(), picked.end());  // keep gold-set order in the output
    std::vector<std::string> labels;
    labels.reserve(k);
    for (std::size_t idx : picked) {
        labels.push_back(gold[idx]);
    }
    return LabelSet(std::move(labels), Provenance::seeded);
}

std::vector<MiniBatch> split_batches(const Dataset& dataset, int batch_size) {
    if (batch_size < 1) {
        throw ConfigError("batch size must be >= 1");
    }
    const auto b = static_cast<std::size_t>(batch_size);
    const auto& docs = dataset.documents();

    std::vector<MiniBatch> batches;
    batches.reserve((docs.size() + b - 1) / b);
    for (std::size_t start = 0; start < docs.size(); start += b) {
        MiniBatch batch;
        batch.batch_index = batches.size();
        auto end = std::min(start + b, docs.size());
        batch.documents.assign(docs.begin() + static_cast<std::ptrdiff_t>(start),
                               docs.begin() + static_cast<std::ptrdiff_t>(end));
        batches.push_back(std::move(batch));
    }
    return batches;
}

}  // namespace llmclust
