#pragma once

#include <cstdint>
#include <vector>

#include "llmclust/core.hpp"

namespace llmclust {

/// Gold-by-predicted co-occurrence counts underlying all three metrics.
/// Rows are gold classes, columns predicted clusters (including the
/// UNMATCHED column when present).
struct ContingencyTable {
    std::vector<std::vector<std::int64_t>> counts;  // counts[i][j] = n_ij
    std::vector<std::int64_t> row_sums;             // a_i
    std::vector<std::int64_t> col_sums;             // b_j
    std::int64_t total = 0;                         // N

    std::size_t rows() const { return counts.size(); }
    std::size_t cols() const { return counts.empty() ? 0 : counts.front().size(); }
    std::size_t nonempty_cols() const;
};

/// counts[i][j] = |{k : gold[k] = i and pred[k] = j}|. Ids must be dense
/// non-negative; matrix extents are max id + 1 per side.
/// Throws DataError on length mismatch or empty input.
ContingencyTable build_contingency(const std::vector<int>& gold, const std::vector<int>& pred);

/// Clustering accuracy: pads the table with zero rows/columns to square,
/// solves the maximum-weight perfect matching between gold classes and
/// predicted clusters (augmenting-path assignment with potentials, exact
/// integer arithmetic) and returns matched weight / N.
double accuracy_hungarian(const ContingencyTable& table);

/// Normalized mutual information I(G;P) / ((H(G)+H(P))/2) with natural-log
/// entropies. 1.0 when both partitions are single-cluster; 0*log0 terms
/// count as 0.
double nmi(const ContingencyTable& table);

/// Adjusted Rand index from pair counts. 1.0 in the degenerate case where
/// the max index equals the expected index (identical trivial partitions).
/// Requires N >= 2.
double ari(const ContingencyTable& table);

struct EvalReport {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    std::int64_t k_true = 0;
    std::int64_t k_pred = 0;            // non-empty predicted clusters only
    std::int64_t granularity_diff = 0;  // k_pred - k_true
    std::int64_t unmatched_count = 0;
    std::int64_t n_documents = 0;
};

/// Scores an assignment against the dataset's gold labels. UNMATCHED
/// documents form one extra predicted cluster. Requires gold labels for
/// every document (throws DataError otherwise).
EvalReport evaluate(const Dataset& dataset, const Assignment& assignment);

}  // namespace llmclust
