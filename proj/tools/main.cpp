#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "llmclust/artifacts.hpp"
#include "llmclust/cli_config.hpp"
#include "llmclust/errors.hpp"
#include "llmclust/runner.hpp"
#include "llmclust/sweep.hpp"

namespace {

using namespace llmclust;

struct Flags {
    std::string config_path;
    std::optional<std::string> dataset;
    std::optional<std::string> format;
    std::optional<std::string> backend;
    std::optional<std::string> run_dir;
    std::optional<std::string> mock_script;
    std::optional<std::string> prompt_dir;
    std::optional<std::string> cache_dir;
    std::optional<std::string> model;
    std::optional<int> batch_size;
    std::optional<double> example_fraction;
    std::optional<std::uint64_t> seed;
    std::optional<double> temperature;
    std::optional<int> max_in_flight;
    bool resume = false;
};

void add_common_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config_path, "JSON config file");
    sub->add_option("--dataset", f.dataset, "dataset file (JSONL/CSV/TSV)");
    sub->add_option("--format", f.format, "dataset format: jsonl|csv|tsv");
    sub->add_option("--backend", f.backend, "backend: mock|http");
    sub->add_option("--batch-size", f.batch_size, "mini-batch size B");
    sub->add_option("--example-fraction", f.example_fraction,
                    "fraction of gold labels seeded as examples");
    sub->add_option("--seed", f.seed, "RNG seed for example sampling");
    sub->add_option("--run-dir", f.run_dir, "run directory for artifacts");
    sub->add_option("--mock-script", f.mock_script, "mock backend script (JSON)");
    sub->add_option("--prompt-dir", f.prompt_dir, "directory with prompt template assets");
    sub->add_option("--cache-dir", f.cache_dir, "response cache directory");
    sub->add_option("--model", f.model, "model name");
    sub->add_option("--temperature", f.temperature, "sampling temperature");
    sub->add_option("--max-in-flight", f.max_in_flight, "max concurrent requests");
}

CliConfig build_config(const Flags& f) {
    CliConfig config;
    if (!f.config_path.empty()) {
        config = CliConfig::load_file(f.config_path);
    }
    if (f.dataset) config.dataset_path = *f.dataset;
    if (f.format) config.format = dataset_format_from_string(*f.format);
    if (f.backend) config.run.backend = backend_kind_from_string(*f.backend);
    if (f.run_dir) config.run_dir = *f.run_dir;
    if (f.mock_script) config.mock_script = *f.mock_script;
    if (f.prompt_dir) config.prompt_dir = *f.prompt_dir;
    if (f.cache_dir) config.run.cache_dir = *f.cache_dir;
    if (f.model) config.run.model_name = *f.model;
    if (f.batch_size) config.run.batch_size = *f.batch_size;
    if (f.example_fraction) config.run.example_fraction = *f.example_fraction;
    if (f.seed) config.run.seed = *f.seed;
    if (f.temperature) config.run.temperature = *f.temperature;
    if (f.max_in_flight) config.run.max_in_flight = *f.max_in_flight;
    return config;
}

Dataset load_configured_dataset(const CliConfig& config) {
    return load_dataset(config.dataset_path,
                        config.format.value_or(guess_dataset_format(config.dataset_path)));
}

void print_report(const EvalReport& report) {
    std::printf("acc / nmi / ari : %.4f / %.4f / %.4f\n", report.acc, report.nmi, report.ari);
    std::printf("clusters        : %lld predicted vs %lld gold (diff %+lld)\n",
                static_cast<long long>(report.k_pred), static_cast<long long>(report.k_true),
                static_cast<long long>(report.granularity_diff));
    std::printf("unmatched docs  : %lld\n", static_cast<long long>(report.unmatched_count));
}

void print_stats(const RunStats& stats) {
    std::printf("backend calls: %lld (cache hits: %lld)\n",
                static_cast<long long>(stats.backend_calls),
                static_cast<long long>(stats.cache_hits));
}

int cmd_run(const Flags& flags) {
    CliConfig config = build_config(flags);
    config.validate();
    Dataset dataset = load_configured_dataset(config);

    if (artifacts::run_artifacts_present(config.run_dir) && !flags.resume) {
        throw ConfigError("run directory " + config.run_dir +
                          " already holds a completed run (use --resume to replay it)");
    }

    RunOutput output = execute_run(config, dataset, config.run_dir,
                                   config.effective_cache_dir());

    std::printf("dataset         : %s (%zu documents)\n", dataset.name().c_str(), dataset.size());
    std::printf("labels (K')     : %zu\n", output.result.label_set.size());
    print_stats(output.result.stats);
    if (output.report) {
        print_report(*output.report);
    } else {
        std::printf("no gold labels; metrics skipped\n");
    }
    std::printf("run directory   : %s\n", config.run_dir.c_str());
    return 0;
}

int cmd_generate(const Flags& flags) {
    CliConfig config = build_config(flags);
    config.validate();
    Dataset dataset = load_configured_dataset(config);

    Pipeline pipeline(config.run, load_templates(config), make_backend(config),
                      config.effective_cache_dir());
    LabelSet examples =
        sample_example_labels(dataset, config.run.example_fraction, config.run.seed);
    GenerationState state = pipeline.generate_labels(dataset, examples);

    artifacts::write_config(config.run_dir, config.run, dataset.name());
    write_canonical_jsonl(dataset, std::filesystem::path(config.run_dir) / "dataset.jsonl");
    artifacts::write_generation_state(config.run_dir, state);
    artifacts::write_stats(config.run_dir, pipeline.stats());

    std::printf("generated %zu unique labels over %lld batches\n", state.unique_labels.size(),
                static_cast<long long>(pipeline.stats().batches));
    print_stats(RunStats{.backend_calls = pipeline.client().backend_calls(),
                         .cache_hits = pipeline.client().cache_hits()});
    return 0;
}

int cmd_merge(const Flags& flags) {
    CliConfig config = build_config(flags);
    config.run.validate();

    GenerationState state = artifacts::load_generation_state(config.run_dir);
    Pipeline pipeline(config.run, load_templates(config), make_backend(config),
                      config.effective_cache_dir());
    LabelSet merged = pipeline.merge_labels(state.unique_labels);
    artifacts::write_labels(config.run_dir, merged);

    std::printf("merged %zu labels down to %zu\n", state.unique_labels.size(), merged.size());
    return 0;
}

int cmd_classify(const Flags& flags) {
    CliConfig config = build_config(flags);
    config.validate();
    Dataset dataset = load_configured_dataset(config);

    LabelSet labels = artifacts::load_labels(config.run_dir);
    Pipeline pipeline(config.run, load_templates(config), make_backend(config),
                      config.effective_cache_dir());
    Assignment assignment = pipeline.classify_all(dataset, labels);
    artifacts::write_assignments(config.run_dir, dataset, assignment);
    artifacts::write_stats(config.run_dir, pipeline.stats());

    std::printf("classified %zu documents (%lld unmatched)\n", dataset.size(),
                static_cast<long long>(pipeline.stats().unmatched));
    print_stats(RunStats{.backend_calls = pipeline.client().backend_calls(),
                         .cache_hits = pipeline.client().cache_hits()});
    return 0;
}

int cmd_evaluate(const Flags& flags) {
    CliConfig config = build_config(flags);
    if (config.dataset_path.empty() || !std::filesystem::exists(config.dataset_path)) {
        throw ConfigError("evaluate needs an existing dataset (--dataset)");
    }
    Dataset dataset = load_configured_dataset(config);

    LabelSet labels = artifacts::load_labels(config.run_dir);
    Assignment assignment = artifacts::load_assignments(config.run_dir, dataset, labels);
    EvalReport report = evaluate(dataset, assignment);
    artifacts::write_report(config.run_dir, report);

    print_report(report);
    std::printf("report          : %s\n",
                (std::filesystem::path(config.run_dir) / "report.json").string().c_str());
    return 0;
}

int cmd_sweep(const Flags& flags, const std::string& axis_name, const std::string& values_csv,
              const std::optional<std::string>& out_path) {
    CliConfig config = build_config(flags);
    config.validate();
    SweepAxis axis = sweep_axis_from_string(axis_name);

    std::vector<std::string> values;
    std::string token;
    std::istringstream stream(values_csv);
    while (std::getline(stream, token, ',')) {
        if (!token.empty()) {
            values.push_back(token);
        }
    }
    if (values.empty()) {
        throw ConfigError("sweep needs --values with a comma-separated list");
    }

    auto csv_path = out_path ? std::filesystem::path(*out_path)
                             : std::filesystem::path(config.run_dir) /
                                   ("sweep_" + std::string(to_string(axis)) + ".csv");
    std::filesystem::create_directories(csv_path.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : csv_path.parent_path());
    std::size_t ok = run_sweep(config, axis, values, csv_path);
    std::printf("sweep complete: %zu/%zu points, csv at %s\n", ok, values.size(),
                csv_path.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage LLM text clustering: generate labels, merge them, classify documents"};
    app.require_subcommand(1);

    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "increase log verbosity (repeatable)");

    Flags run_flags, generate_flags, merge_flags, classify_flags, evaluate_flags, sweep_flags;

    auto* run_cmd = app.add_subcommand("run", "full pipeline + evaluation");
    add_common_flags(run_cmd, run_flags);
    run_cmd->add_flag("--resume", run_flags.resume, "replay/resume an existing run directory");

    auto* generate_cmd = app.add_subcommand("generate", "stage 1 only: label generation");
    add_common_flags(generate_cmd, generate_flags);

    auto* merge_cmd = app.add_subcommand("merge", "merge labels from a generate run");
    add_common_flags(merge_cmd, merge_flags);

    auto* classify_cmd = app.add_subcommand("classify", "stage 2 only: classification");
    add_common_flags(classify_cmd, classify_flags);

    auto* evaluate_cmd = app.add_subcommand("evaluate", "recompute metrics from run artifacts");
    add_common_flags(evaluate_cmd, evaluate_flags);

    auto* sweep_cmd = app.add_subcommand("sweep", "run the pipeline over an axis of values");
    add_common_flags(sweep_cmd, sweep_flags);
    std::string sweep_axis;
    std::string sweep_values;
    std::optional<std::string> sweep_out;
    sweep_cmd->add_option("--axis", sweep_axis, "batch_size|example_fraction")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep_cmd->add_option("--out", sweep_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    spdlog::set_level(verbosity >= 2   ? spdlog::level::debug
                      : verbosity == 1 ? spdlog::level::info
                                       : spdlog::level::warn);

    try {
        if (run_cmd->parsed()) return cmd_run(run_flags);
        if (generate_cmd->parsed()) return cmd_generate(generate_flags);
        if (merge_cmd->parsed()) return cmd_merge(merge_flags);
        if (classify_cmd->parsed()) return cmd_classify(classify_flags);
        if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate_flags);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags, sweep_axis, sweep_values, sweep_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const BackendError& e) {
        std::fprintf(stderr, "backend error: %s\n", e.what());
        return 4;
    } catch (const DataError& e) {
        if (e.line()) {
            std::fprintf(stderr, "data error (line %zu): %s\n", *e.line(), e.what());
        } else {
            std::fprintf(stderr, "data error: %s\n", e.what());
        }
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind() == ErrorKind::config ? 2 : e.kind() == ErrorKind::backend ? 4 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 2;
}
