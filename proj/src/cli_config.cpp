#include "llmclust/cli_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "llmclust/errors.hpp"

namespace llmclust {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "dataset",     "format",      "run_dir",
        "prompt_dir",  "mock_script", "batch_size",
        "example_fraction", "seed",   "backend",
        "model_name",  "temperature", "max_retries",
        "max_in_flight", "cache_dir", "feed_back_generated_labels",
        "base_url",    "api_key_env", "requests_per_minute",
        "max_tokens",  "merge_chunk_size", "merge_char_budget",
    };
    return keys;
}

}  // namespace

CliConfig CliConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("config file is not a JSON object: " + path.string());
    }

    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (known_keys().count(key) == 0) {
            throw ConfigError("unknown config key: '" + key + "'");
        }
    }

    CliConfig config;
    try {
        config.dataset_path = doc.value("dataset", config.dataset_path);
        if (doc.contains("format")) {
            config.format = dataset_format_from_string(doc["format"].get<std::string>());
        }
        config.run_dir = doc.value("run_dir", config.run_dir);
        config.prompt_dir = doc.value("prompt_dir", config.prompt_dir);
        config.mock_script = doc.value("mock_script", config.mock_script);

        RunConfig& run = config.run;
        run.batch_size = doc.value("batch_size", run.batch_size);
        run.example_fraction = doc.value("example_fraction", run.example_fraction);
        run.seed = doc.value("seed", run.seed);
        if (doc.contains("backend")) {
            run.backend = backend_kind_from_string(doc["backend"].get<std::string>());
        }
        run.model_name = doc.value("model_name", run.model_name);
        run.temperature = doc.value("temperature", run.temperature);
        run.max_retries = doc.value("max_retries", run.max_retries);
        run.max_in_flight = doc.value("max_in_flight", run.max_in_flight);
        run.cache_dir = doc.value("cache_dir", run.cache_dir);
        run.feed_back_generated_labels =
            doc.value("feed_back_generated_labels", run.feed_back_generated_labels);
        run.base_url = doc.value("base_url", run.base_url);
        run.api_key_env = doc.value("api_key_env", run.api_key_env);
        run.requests_per_minute = doc.value("requests_per_minute", run.requests_per_minute);
        run.max_tokens = doc.value("max_tokens", run.max_tokens);
        run.merge_chunk_size = doc.value("merge_chunk_size", run.merge_chunk_size);
        run.merge_char_budget = doc.value("merge_char_budget", run.merge_char_budget);
    } catch (const json::exception& e) {
        throw ConfigError("bad config value in " + path.string() + ": " + e.what());
    }
    return config;
}

void CliConfig::validate() const {
    run.validate();
    if (dataset_path.empty()) {
        throw ConfigError("no dataset given (use --dataset or the 'dataset' config key)");
    }
    if (!std::filesystem::exists(dataset_path)) {
        throw ConfigError("dataset file does not exist: " + dataset_path);
    }
    if (run.backend == BackendKind::mock && mock_script.empty()) {
        throw ConfigError("the mock backend needs a script (--mock-script or 'mock_script')");
    }
    if (run_dir.empty()) {
        throw ConfigError("run_dir must not be empty");
    }
}

std::filesystem::path CliConfig::effective_cache_dir() const {
    if (!run.cache_dir.empty()) {
        return run.cache_dir;
    }
    return std::filesystem::path(run_dir) / "cache";
}

}  // namespace llmclust
