#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "llmclust/core.hpp"

namespace llmclust {

enum class DatasetFormat { jsonl, csv, tsv };

DatasetFormat dataset_format_from_string(std::string_view s);
std::string_view to_string(DatasetFormat f);

/// Detects the format from the file extension; defaults to jsonl.
DatasetFormat guess_dataset_format(const std::filesystem::path& path);

/// Loads a dataset in file order. JSONL records are {"text": ..., "label": ...?}
/// per line; CSV/TSV need a header with a `text` column and an optional
/// `label` column. The gold label set is the unique labels ordered by first
/// occurrence, present only when at least one row is labeled.
/// Throws DataError: file not found, malformed record (with line number),
/// or zero valid rows.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);

/// Writes the run directory's canonical copy: one {"id", "text", "label"}
/// object per line, label null when absent. load_dataset on the result
/// round-trips (id, text, gold_label).
void write_canonical_jsonl(const Dataset& dataset, const std::filesystem::path& path);

/// Draws floor(fraction * K) gold labels uniformly without replacement using
/// a deterministic generator, so the same (dataset, fraction, seed) always
/// yields the same set. Provenance is `seeded`. fraction 0 is allowed on
/// unlabeled datasets; otherwise missing gold labels throw DataError.
LabelSet sample_example_labels(const Dataset& dataset, double fraction, std::uint64_t seed);

struct MiniBatch {
    std::size_t batch_index = 0;
    std::vector<Document> documents;  // contiguous slice, dataset order
};

/// Partitions the dataset into ceil(N/B) batches of B documents in order;
/// only the final batch may be shorter.
std::vector<MiniBatch> split_batches(const Dataset& dataset, int batch_size);

}  // namespace llmclust
