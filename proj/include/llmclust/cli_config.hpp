#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "llmclust/core.hpp"
#include "llmclust/dataset_io.hpp"

namespace llmclust {

/// File-backed configuration for the CLI. Flags override file values, file
/// values override defaults; unknown keys in the file are rejected.
struct CliConfig {
    std::string dataset_path;
    std::optional<DatasetFormat> format;  // guessed from the extension when unset
    std::string run_dir = "run";
    std::string prompt_dir;   // empty -> compiled-in templates
    std::string mock_script;  // required for the mock backend
    RunConfig run;

    /// Throws ConfigError on unreadable files, bad JSON, or unknown keys.
    static CliConfig load_file(const std::filesystem::path& path);

    /// Final validation once flags have been applied.
    void validate() const;

    /// Cache location: explicit cache_dir, else <run_dir>/cache.
    std::filesystem::path effective_cache_dir() const;
};

}  // namespace llmclust
