#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "llmclust/core.hpp"
#include "llmclust/metrics.hpp"
#include "llmclust/pipeline.hpp"

namespace llmclust::artifacts {

/// Run directory layout:
///   config.json        RunConfig snapshot + dataset name
///   dataset.jsonl      canonical copy of the input
///   generation.json    per-batch raw labels, running pool, unique labels
///   labels.json        merged label set (surface forms + provenance)
///   assignments.jsonl  {"id", "text", "label"} per document, label null
///                      for UNMATCHED
///   stats.json         request/cache counters
///   report.json        metrics, written when gold labels exist
///   cache/             response cache (default location)

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& doc);

void write_config(const std::filesystem::path& run_dir, const RunConfig& config,
                  const std::string& dataset_name);

void write_run(const std::filesystem::path& run_dir, const Dataset& dataset,
               const GenerationState& state, const ClusteringResult& result);

void write_generation_state(const std::filesystem::path& run_dir, const GenerationState& state);
GenerationState load_generation_state(const std::filesystem::path& run_dir);

void write_labels(const std::filesystem::path& run_dir, const LabelSet& labels);
LabelSet load_labels(const std::filesystem::path& run_dir);

void write_assignments(const std::filesystem::path& run_dir, const Dataset& dataset,
                       const Assignment& assignment);
/// Rebuilds the assignment against `labels`; throws DataError (with the line
/// number) on tampered records or ids that do not cover the dataset.
Assignment load_assignments(const std::filesystem::path& run_dir, const Dataset& dataset,
                            const LabelSet& labels);

void write_stats(const std::filesystem::path& run_dir, const RunStats& stats);

nlohmann::json report_to_json(const EvalReport& report);
void write_report(const std::filesystem::path& run_dir, const EvalReport& report);

/// True when the directory already holds a completed run's artifacts.
bool run_artifacts_present(const std::filesystem::path& run_dir);

}  // namespace llmclust::artifacts
