#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "llmclust/cli_config.hpp"
#include "llmclust/metrics.hpp"
#include "llmclust/pipeline.hpp"

namespace llmclust {

/// Builds the configured backend: scripted mock or HTTP client.
std::shared_ptr<CompletionBackend> make_backend(const CliConfig& config);

/// Prompt templates from prompt_dir, or the compiled-in set.
PromptTemplates load_templates(const CliConfig& config);

struct RunOutput {
    ClusteringResult result;
    std::optional<EvalReport> report;  // present when the dataset has gold labels
};

/// One full pipeline execution into run_dir, followed by evaluation (and
/// report.json) when gold labels exist.
RunOutput execute_run(const CliConfig& config, const Dataset& dataset,
                      const std::filesystem::path& run_dir,
                      const std::filesystem::path& cache_dir);

}  // namespace llmclust
