#include "llmclust/sweep.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "llmclust/errors.hpp"
#include "llmclust/runner.hpp"

namespace llmclust {

namespace {

std::string sanitize_for_path(const std::string& value) {
    std::string out = value;
    for (char& c : out) {
        if (c == '.' ) c = '_';
    }
    return out;
}

}  // namespace

SweepAxis sweep_axis_from_string(std::string_view s) {
    if (s == "batch_size") return SweepAxis::batch_size;
    if (s == "example_fraction") return SweepAxis::example_fraction;
    throw ConfigError("unknown sweep axis: '" + std::string(s) +
                      "' (expected batch_size or example_fraction)");
}

std::string_view to_string(SweepAxis axis) {
    return axis == SweepAxis::batch_size ? "batch_size" : "example_fraction";
}

std::size_t run_sweep(const CliConfig& base, SweepAxis axis,
                      const std::vector<std::string>& values,
                      const std::filesystem::path& out_csv) {
    if (values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }

    Dataset dataset = load_dataset(base.dataset_path,
                                   base.format.value_or(guess_dataset_format(base.dataset_path)));

    // One cache for every point: overlapping prompts across values are free.
    const auto cache_dir = base.effective_cache_dir();

    std::ostringstream csv;
    csv << "value,acc,nmi,ari,k_pred\n";
    std::size_t ok = 0;
    for (const auto& value : values) {
        CliConfig point = base;
        try {
            if (axis == SweepAxis::batch_size) {
                point.run.batch_size = std::stoi(value);
            } else {
                point.run.example_fraction = std::stod(value);
            }
            point.run.validate();
        } catch (const std::exception& e) {
            throw ConfigError("bad sweep value '" + value + "': " + e.what());
        }

        auto run_dir = std::filesystem::path(base.run_dir) / "sweep" /
                       (std::string(to_string(axis)) + "=" + sanitize_for_path(value));
        try {
            RunOutput output = execute_run(point, dataset, run_dir, cache_dir);
            if (output.report) {
                const auto& r = *output.report;
                csv << value << ',' << r.acc << ',' << r.nmi << ',' << r.ari << ',' << r.k_pred
                    << '\n';
            } else {
                spdlog::warn("sweep point {}={}: no gold labels, metrics unavailable",
                             to_string(axis), value);
                csv << value << ",,,," << output.result.label_set.size() << '\n';
            }
            ++ok;
        } catch (const Error& e) {
            spdlog::error("sweep point {}={} failed: {}", to_string(axis), value, e.what());
            csv << value << ",,,,\n";
        }
    }

    std::ofstream out(out_csv, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write sweep CSV: " + out_csv.string());
    }
    out << csv.str();
    if (!out.good()) {
        throw DataError("short write on sweep CSV: " + out_csv.string());
    }
    return ok;
}

}  // namespace llmclust
