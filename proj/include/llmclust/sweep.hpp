#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "llmclust/cli_config.hpp"

namespace llmclust {

enum class SweepAxis { batch_size, example_fraction };

SweepAxis sweep_axis_from_string(std::string_view s);
std::string_view to_string(SweepAxis axis);

/// Runs the pipeline once per axis value with a shared response cache and
/// writes `value,acc,nmi,ari,k_pred` rows to out_csv. A failing run leaves
/// its metric cells empty and the sweep continues. Returns the number of
/// successful rows.
std::size_t run_sweep(const CliConfig& base, SweepAxis axis,
                      const std::vector<std::string>& values,
                      const std::filesystem::path& out_csv);

}  // namespace llmclust
