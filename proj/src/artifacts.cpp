#include "llmclust/artifacts.hpp"

#include <fstream>

#include "llmclust/dataset_io.hpp"
#include "llmclust/errors.hpp"

namespace llmclust::artifacts {

namespace {

using nlohmann::json;

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
    if (!out.good()) {
        throw DataError("short write on " + path.string());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("missing run artifact: " + path.string());
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        throw DataError("corrupt run artifact: " + path.string());
    }
    return doc;
}

}  // namespace

json run_config_to_json(const RunConfig& config) {
    json doc;
    doc["batch_size"] = config.batch_size;
    doc["example_fraction"] = config.example_fraction;
    doc["seed"] = config.seed;
    doc["backend"] = std::string(to_string(config.backend));
    doc["model_name"] = config.model_name;
    doc["temperature"] = config.temperature;
    doc["max_retries"] = config.max_retries;
    doc["max_in_flight"] = config.max_in_flight;
    doc["cache_dir"] = config.cache_dir;
    doc["feed_back_generated_labels"] = config.feed_back_generated_labels;
    doc["base_url"] = config.base_url;
    doc["api_key_env"] = config.api_key_env;
    doc["requests_per_minute"] = config.requests_per_minute;
    doc["max_tokens"] = config.max_tokens;
    doc["merge_chunk_size"] = config.merge_chunk_size;
    doc["merge_char_budget"] = config.merge_char_budget;
    return doc;
}

RunConfig run_config_from_json(const json& doc) {
    RunConfig config;
    config.batch_size = doc.value("batch_size", config.batch_size);
    config.example_fraction = doc.value("example_fraction", config.example_fraction);
    config.seed = doc.value("seed", config.seed);
    config.backend = backend_kind_from_string(
        doc.value("backend", std::string(to_string(config.backend))));
    config.model_name = doc.value("model_name", config.model_name);
    config.temperature = doc.value("temperature", config.temperature);
    config.max_retries = doc.value("max_retries", config.max_retries);
    config.max_in_flight = doc.value("max_in_flight", config.max_in_flight);
    config.cache_dir = doc.value("cache_dir", config.cache_dir);
    config.feed_back_generated_labels =
        doc.value("feed_back_generated_labels", config.feed_back_generated_labels);
    config.base_url = doc.value("base_url", config.base_url);
    config.api_key_env = doc.value("api_key_env", config.api_key_env);
    config.requests_per_minute = doc.value("requests_per_minute", config.requests_per_minute);
    config.max_tokens = doc.value("max_tokens", config.max_tokens);
    config.merge_chunk_size = doc.value("merge_chunk_size", config.merge_chunk_size);
    config.merge_char_budget = doc.value("merge_char_budget", config.merge_char_budget);
    config.validate();
    return config;
}

void write_config(const std::filesystem::path& run_dir, const RunConfig& config,
                  const std::string& dataset_name) {
    std::error_code ec;
    std::filesystem::create_directories(run_dir, ec);
    if (ec) {
        throw DataError("cannot create run directory " + run_dir.string() + ": " + ec.message());
    }
    json doc = run_config_to_json(config);
    doc["dataset_name"] = dataset_name;
    write_json_file(run_dir / "config.json", doc);
}

void write_run(const std::filesystem::path& run_dir, const Dataset& dataset,
               const GenerationState& state, const ClusteringResult& result) {
    write_config(run_dir, result.config_snapshot, dataset.name());
    write_canonical_jsonl(dataset, run_dir / "dataset.jsonl");
    write_generation_state(run_dir, state);
    write_labels(run_dir, result.label_set);
    write_assignments(run_dir, dataset, result.assignment);
    write_stats(run_dir, result.stats);
}

void write_generation_state(const std::filesystem::path& run_dir, const GenerationState& state) {
    json doc;
    doc["examples"] = state.examples;
    doc["raw_labels_per_batch"] = state.raw_labels_per_batch;
    doc["running_pool"] = state.running_pool;
    doc["unique_labels"] = state.unique_labels;
    write_json_file(run_dir / "generation.json", doc);
}

GenerationState load_generation_state(const std::filesystem::path& run_dir) {
    json doc = read_json_file(run_dir / "generation.json");
    GenerationState state;
    try {
        state.examples = doc.at("examples").get<std::vector<std::string>>();
        state.raw_labels_per_batch =
            doc.at("raw_labels_per_batch").get<std::vector<std::vector<std::string>>>();
        state.running_pool = doc.at("running_pool").get<std::vector<std::string>>();
        state.unique_labels = doc.at("unique_labels").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError("corrupt generation.json: " + std::string(e.what()));
    }
    return state;
}

void write_labels(const std::filesystem::path& run_dir, const LabelSet& labels) {
    json doc;
    doc["provenance"] = std::string(to_string(labels.provenance()));
    doc["labels"] = labels.labels();
    write_json_file(run_dir / "labels.json", doc);
}

LabelSet load_labels(const std::filesystem::path& run_dir) {
    json doc = read_json_file(run_dir / "labels.json");
    try {
        auto labels = doc.at("labels").get<std::vector<std::string>>();
        auto provenance = provenance_from_string(doc.at("provenance").get<std::string>());
        return LabelSet(std::move(labels), provenance);
    } catch (const json::exception& e) {
        throw DataError("corrupt labels.json: " + std::string(e.what()));
    }
}

void write_assignments(const std::filesystem::path& run_dir, const Dataset& dataset,
                       const Assignment& assignment) {
    auto path = run_dir / "assignments.jsonl";
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    for (const auto& doc : dataset.documents()) {
        std::int64_t idx = assignment.doc_to_label()[doc.id];
        json record;
        record["id"] = doc.id;
        record["text"] = doc.text;
        record["label"] = idx == Assignment::kUnmatched
                              ? json(nullptr)
                              : json(assignment.label_set().labels()[static_cast<std::size_t>(idx)]);
        out << record.dump() << '\n';
    }
    if (!out.good()) {
        throw DataError("short write on " + path.string());
    }
}

Assignment load_assignments(const std::filesystem::path& run_dir, const Dataset& dataset,
                            const LabelSet& labels) {
    auto path = run_dir / "assignments.jsonl";
    std::ifstream in(path);
    if (!in) {
        throw DataError("missing run artifact: " + path.string());
    }

    std::vector<std::int64_t> doc_to_label(dataset.size(), Assignment::kUnmatched);
    std::vector<bool> seen(dataset.size(), false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object() || !record.contains("id") ||
            !record["id"].is_number_unsigned() || !record.contains("label")) {
            throw DataError("malformed assignment record", line_no);
        }
        auto id = record["id"].get<std::size_t>();
        if (id >= dataset.size() || seen[id]) {
            throw DataError("assignment id out of range or repeated: " + std::to_string(id),
                            line_no);
        }
        seen[id] = true;
        if (record["label"].is_null()) {
            continue;
        }
        if (!record["label"].is_string()) {
            throw DataError("assignment label must be a string or null", line_no);
        }
        auto idx = labels.find(record["label"].get<std::string>());
        if (!idx) {
            throw DataError("assignment label '" + record["label"].get<std::string>() +
                                "' is not in labels.json",
                            line_no);
        }
        doc_to_label[id] = static_cast<std::int64_t>(*idx);
    }
    for (std::size_t id = 0; id < seen.size(); ++id) {
        if (!seen[id]) {
            throw DataError("assignments.jsonl is missing document " + std::to_string(id));
        }
    }
    return Assignment(std::move(doc_to_label), labels);
}

void write_stats(const std::filesystem::path& run_dir, const RunStats& stats) {
    json doc;
    doc["batches"] = stats.batches;
    doc["generation_requests"] = stats.generation_requests;
    doc["merge_requests"] = stats.merge_requests;
    doc["classify_requests"] = stats.classify_requests;
    doc["reasks"] = stats.reasks;
    doc["generation_parse_failures"] = stats.generation_parse_failures;
    doc["merge_fallbacks"] = stats.merge_fallbacks;
    doc["unmatched"] = stats.unmatched;
    doc["backend_calls"] = stats.backend_calls;
    doc["cache_hits"] = stats.cache_hits;
    write_json_file(run_dir / "stats.json", doc);
}

json report_to_json(const EvalReport& report) {
    json doc;
    doc["acc"] = report.acc;
    doc["nmi"] = report.nmi;
    doc["ari"] = report.ari;
    doc["k_true"] = report.k_true;
    doc["k_pred"] = report.k_pred;
    doc["granularity_diff"] = report.granularity_diff;
    doc["unmatched_count"] = report.unmatched_count;
    doc["n_documents"] = report.n_documents;
    doc["config_ref"] = "config.json";
    return doc;
}

void write_report(const std::filesystem::path& run_dir, const EvalReport& report) {
    write_json_file(run_dir / "report.json", report_to_json(report));
}

bool run_artifacts_present(const std::filesystem::path& run_dir) {
    return std::filesystem::exists(run_dir / "labels.json") &&
           std::filesystem::exists(run_dir / "assignments.jsonl");
}

}  // namespace llmclust::artifacts
