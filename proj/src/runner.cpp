#include "llmclust/runner.hpp"

#include "llmclust/artifacts.hpp"
#include "llmclust/errors.hpp"
#include "llmclust/http_backend.hpp"
#include "llmclust/mock_backend.hpp"

namespace llmclust {

std::shared_ptr<CompletionBackend> make_backend(const CliConfig& config) {
    if (config.run.backend == BackendKind::mock) {
        if (config.mock_script.empty()) {
            throw ConfigError("the mock backend needs a script file");
        }
        return std::make_shared<MockBackend>(MockScript::from_json_file(config.mock_script),
                                             config.run.max_in_flight);
    }
    return std::shared_ptr<CompletionBackend>(HttpBackend::from_config(config.run));
}

PromptTemplates load_templates(const CliConfig& config) {
    if (config.prompt_dir.empty()) {
        return PromptTemplates::builtin();
    }
    return PromptTemplates::load_dir(config.prompt_dir);
}

RunOutput execute_run(const CliConfig& config, const Dataset& dataset,
                      const std::filesystem::path& run_dir,
                      const std::filesystem::path& cache_dir) {
    Pipeline pipeline(config.run, load_templates(config), make_backend(config), cache_dir);
    RunOutput output{pipeline.run(dataset, run_dir), std::nullopt};
    if (dataset.has_gold_labels()) {
        output.report = evaluate(dataset, output.result.assignment);
        artifacts::write_report(run_dir, *output.report);
    }
    return output;
}

}  // namespace llmclust
