#include "llmclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "llmclust/errors.hpp"

namespace llmclust {

namespace {

// Minimum-cost perfect matching on a square cost matrix, O(n^3)
// augmenting-path formulation with row/column potentials. Returns the
// column assigned to each row.
std::vector<int> solve_assignment(const std::vector<std::vector<std::int64_t>>& cost) {
    const int n = static_cast<int>(cost.size());
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> match(n + 1, 0);  // match[j] = row assigned to column j (1-based)
    std::vector<int> way(n + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<std::int64_t> min_reduced(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = match[j0];
            int j1 = -1;
            std::int64_t delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < min_reduced[j]) {
                    min_reduced[j] = cur;
                    way[j] = j0;
                }
                if (min_reduced[j] < delta) {
                    delta = min_reduced[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_reduced[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j) {
        row_to_col[match[j] - 1] = j - 1;
    }
    return row_to_col;
}

std::int64_t pairs_of(std::int64_t n) {
    return n * (n - 1) / 2;
}

double entropy_nats(const std::vector<std::int64_t>& sums, std::int64_t total) {
    double h = 0.0;
    for (std::int64_t s : sums) {
        if (s <= 0) continue;
        double p = static_cast<double>(s) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

std::size_t ContingencyTable::nonempty_cols() const {
    return static_cast<std::size_t>(
        std::count_if(col_sums.begin(), col_sums.end(), [](std::int64_t b) { return b > 0; }));
}

ContingencyTable build_contingency(const std::vector<int>& gold, const std::vector<int>& pred) {
    if (gold.size() != pred.size()) {
        throw DataError("gold/pred length mismatch: " + std::to_string(gold.size()) + " vs " +
                        std::to_string(pred.size()));
    }
    if (gold.empty()) {
        throw DataError("cannot build a contingency table from zero points");
    }

    int rows = 0, cols = 0;
    for (std::size_t k = 0; k < gold.size(); ++k) {
        if (gold[k] < 0 || pred[k] < 0) {
            throw DataError("cluster ids must be non-negative");
        }
        rows = std::max(rows, gold[k] + 1);
        cols = std::max(cols, pred[k] + 1);
    }

    ContingencyTable table;
    table.counts.assign(rows, std::vector<std::int64_t>(cols, 0));
    table.row_sums.assign(rows, 0);
    table.col_sums.assign(cols, 0);
    table.total = static_cast<std::int64_t>(gold.size());
    for (std::size_t k = 0; k < gold.size(); ++k) {
        ++table.counts[gold[k]][pred[k]];
        ++table.row_sums[gold[k]];
        ++table.col_sums[pred[k]];
    }
    return table;
}

double accuracy_hungarian(const ContingencyTable& table) {
    const std::size_t n = std::max(table.rows(), table.cols());
    if (n == 0 || table.total == 0) {
        throw DataError("empty contingency table");
    }

    // Zero padding keeps the matching square when K != K'; maximize weight
    // by minimizing negated counts.
    std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.cols(); ++j) {
            cost[i][j] = -table.counts[i][j];
        }
    }

    std::vector<int> row_to_col = solve_assignment(cost);
    std::int64_t matched = 0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        std::size_t j = static_cast<std::size_t>(row_to_col[i]);
        if (j < table.cols()) {
            matched += table.counts[i][j];
        }
    }
    return static_cast<double>(matched) / static_cast<double>(table.total);
}

double nmi(const ContingencyTable& table) {
    const double h_gold = entropy_nats(table.row_sums, table.total);
    const double h_pred = entropy_nats(table.col_sums, table.total);
    if (h_gold == 0.0 && h_pred == 0.0) {
        return 1.0;  // both partitions are a single cluster
    }

    // I(G;P) = H(G) + H(P) - H(G,P). Running all three sums through the same
    // entropy routine makes identical partitions come out at exactly 1.
    std::vector<std::int64_t> joint;
    joint.reserve(table.rows() * table.cols());
    for (const auto& row : table.counts) {
        joint.insert(joint.end(), row.begin(), row.end());
    }
    const double mi = h_gold + h_pred - entropy_nats(joint, table.total);
    return mi / (0.5 * (h_gold + h_pred));
}

double ari(const ContingencyTable& table) {
    if (table.total < 2) {
        throw DataError("ARI needs at least 2 points");
    }

    std::int64_t index = 0;
    for (const auto& row : table.counts) {
        for (std::int64_t n_ij : row) {
            index += pairs_of(n_ij);
        }
    }
    std::int64_t sum_rows = 0, sum_cols = 0;
    for (std::int64_t a : table.row_sums) sum_rows += pairs_of(a);
    for (std::int64_t b : table.col_sums) sum_cols += pairs_of(b);

    const long double total_pairs = static_cast<long double>(pairs_of(table.total));
    const long double expected =
        static_cast<long double>(sum_rows) * static_cast<long double>(sum_cols) / total_pairs;
    const long double max_index = 0.5L * (static_cast<long double>(sum_rows) + sum_cols);
    if (max_index == expected) {
        return 1.0;  // both partitions trivial and identical
    }
    return static_cast<double>((static_cast<long double>(index) - expected) /
                               (max_index - expected));
}

EvalReport evaluate(const Dataset& dataset, const Assignment& assignment) {
    if (!dataset.has_gold_labels()) {
        throw DataError("evaluation requires gold labels");
    }
    if (assignment.size() != dataset.size()) {
        throw DataError("assignment covers " + std::to_string(assignment.size()) +
                        " documents, dataset has " + std::to_string(dataset.size()));
    }

    const auto& gold_set = dataset.gold_label_set();
    std::unordered_map<std::string, int> gold_index;
    for (std::size_t i = 0; i < gold_set.size(); ++i) {
        gold_index.emplace(gold_set[i], static_cast<int>(i));
    }

    const int unmatched_id = static_cast<int>(assignment.label_set().size());
    std::vector<int> gold_ids, pred_ids;
    gold_ids.reserve(dataset.size());
    pred_ids.reserve(dataset.size());
    for (const auto& doc : dataset.documents()) {
        if (!doc.gold_label) {
            throw DataError("document " + std::to_string(doc.id) + " has no gold label");
        }
        gold_ids.push_back(gold_index.at(*doc.gold_label));
        std::int64_t p = assignment.doc_to_label()[doc.id];
        pred_ids.push_back(p == Assignment::kUnmatched ? unmatched_id : static_cast<int>(p));
    }

    ContingencyTable table = build_contingency(gold_ids, pred_ids);

    EvalReport report;
    report.acc = accuracy_hungarian(table);
    report.nmi = nmi(table);
    report.ari = ari(table);
    report.k_true = static_cast<std::int64_t>(gold_set.size());
    report.k_pred = static_cast<std::int64_t>(table.nonempty_cols());
    report.granularity_diff = report.k_pred - report.k_true;
    report.unmatched_count = static_cast<std::int64_t>(assignment.unmatched_count());
    report.n_documents = static_cast<std::int64_t>(dataset.size());
    return report;
}

}  // namespace llmclust
