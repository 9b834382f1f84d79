// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exits non-zero if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <spdlog/spdlog.h>

#include "llmclust/artifacts.hpp"
#include "llmclust/metrics.hpp"
#include "llmclust/mock_backend.hpp"
#include "llmclust/pipeline.hpp"
#include "llmclust/prompting.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace llmclust;
using namespace llmclust::test;

namespace {

const std::filesystem::path kSourceDir = LLMCLUST_SOURCE_DIR;
const std::filesystem::path kCliPath = LLMCLUST_CLI_PATH;

int g_failures = 0;

void criterion(const std::string& name, bool passed, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", passed ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    if (!passed) {
        ++g_failures;
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Pipeline make_pipeline(const MockScript& script, const RunConfig& config,
                       const std::filesystem::path& cache_dir) {
    return Pipeline(config, PromptTemplates::builtin(),
                    std::make_shared<MockBackend>(script, config.max_in_flight), cache_dir);
}

RunConfig mock_config() {
    RunConfig config;
    config.backend = BackendKind::mock;
    config.batch_size = 15;
    config.example_fraction = 0.20;
    config.max_in_flight = 4;
    return config;
}

// ---------------------------------------------------------------------------

void check_headline_statement() {
    // The reported headline numbers come from a closed-source stochastic
    // LLM and are not reproducible offline; the gates below are the
    // acceptance basis. A live smoke run stays optional and non-gating
    // (see README).
    criterion("headline numbers out of scope; property suites gate acceptance", true);
}

void check_hungarian_oracle() {
    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240901);
    int mismatches = 0;
    bool saw_unequal_sides = false;
    for (int trial = 0; trial < 200; ++trial) {
        auto inst = random_instance(rng, 40, 7);
        auto table = build_contingency(inst.gold, inst.pred);
        if (table.rows() != table.cols()) {
            saw_unequal_sides = true;
        }
        double expected = static_cast<double>(brute_force_matching_weight(table.counts)) /
                          static_cast<double>(table.total);
        if (accuracy_hungarian(table) != expected) {
            ++mismatches;
        }
    }
    double elapsed = seconds_since(start);
    criterion("Hungarian equals brute force on 200 random instances",
              mismatches == 0 && saw_unequal_sides && elapsed < 10.0,
              std::to_string(mismatches) + " mismatches in " + std::to_string(elapsed) + "s");
}

void check_metric_definitions() {
    bool ok = true;
    std::string detail;

    std::vector<int> ids = {0, 1, 2, 0, 1, 2, 3, 3, 0};
    auto identical = build_contingency(ids, ids);
    if (accuracy_hungarian(identical) != 1.0 || nmi(identical) != 1.0 || ari(identical) != 1.0) {
        ok = false;
        detail = "identical partitions not exactly 1.0";
    }

    auto independent = build_contingency({0, 0, 1, 1}, {0, 1, 0, 1});
    if (std::abs(nmi(independent)) > 1e-12 || std::abs(ari(independent) + 0.5) > 1e-12) {
        ok = false;
        detail = "independent 2x2 off definition";
    }

    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 120; ++trial) {
        auto inst = random_instance(rng, 40, 7);
        auto table = build_contingency(inst.gold, inst.pred);
        worst = std::max(worst, std::abs(nmi(table) - direct_nmi(inst.gold, inst.pred)));
        worst = std::max(worst, std::abs(ari(table) - pair_count_ari(inst.gold, inst.pred)));
    }
    if (worst > 1e-12) {
        ok = false;
        detail = "oracle deviation " + std::to_string(worst);
    }
    criterion("metric definitional checks (exact 1.0, 2x2, 120 oracle instances)", ok, detail);
}

void check_chance_correction() {
    std::vector<int> gold(100);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        gold[i] = static_cast<int>(i / 20);  // 5 balanced classes
    }
    std::vector<int> shuffled = gold;
    std::mt19937_64 rng(4242);
    double sum = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        sum += ari(build_contingency(gold, shuffled));
    }
    double mean = sum / 1000.0;
    criterion("mean ARI over 1000 shuffles within +/-0.02 of zero",
              mean >= -0.02 && mean <= 0.02, "mean " + std::to_string(mean));
}

void check_relabeling_invariance() {
    std::mt19937_64 rng(31);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        auto inst = random_instance(rng, 40, 7);
        auto base = build_contingency(inst.gold, inst.pred);
        double acc0 = accuracy_hungarian(base), nmi0 = nmi(base), ari0 = ari(base);

        auto permute = [&rng](const std::vector<int>& ids) {
            int max_id = *std::max_element(ids.begin(), ids.end());
            std::vector<int> perm(static_cast<std::size_t>(max_id) + 1);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<int> out(ids.size());
            for (std::size_t i = 0; i < ids.size(); ++i) {
                out[i] = perm[static_cast<std::size_t>(ids[i])];
            }
            return out;
        };

        for (const auto& table : {build_contingency(inst.gold, permute(inst.pred)),
                                  build_contingency(permute(inst.gold), inst.pred)}) {
            worst = std::max(worst, std::abs(accuracy_hungarian(table) - acc0));
            worst = std::max(worst, std::abs(nmi(table) - nmi0));
            worst = std::max(worst, std::abs(ari(table) - ari0));
        }
    }
    criterion("relabeling invariance on 50 instances (<= 1e-12)", worst <= 1e-12,
              "worst delta " + std::to_string(worst));
}

void check_oracle_run() {
    auto start = std::chrono::steady_clock::now();
    TempDir dir;
    auto fixture = make_synthetic_fixture(6, 10);
    auto pipeline = make_pipeline(fixture.script, mock_config(), dir.path / "cache");
    auto result = pipeline.run(fixture.dataset, {});
    auto report = evaluate(fixture.dataset, result.assignment);
    double elapsed = seconds_since(start);

    bool ok = report.acc == 1.0 && report.nmi == 1.0 && report.ari == 1.0 &&
              result.label_set.size() == 6 && report.unmatched_count == 0 && elapsed < 5.0;
    criterion("oracle run: 60 docs, 6 classes => ACC=NMI=ARI=1, K'=6, unmatched=0", ok,
              std::to_string(elapsed) + "s");
}

void check_controlled_noise() {
    TempDir dir;
    auto fixture = make_synthetic_fixture(6, 10);
    // one document per class scripted into the next class's cluster
    const auto& gold_set = fixture.dataset.gold_label_set();
    for (int c = 0; c < 6; ++c) {
        const auto& text = fixture.dataset.documents()[static_cast<std::size_t>(c)].text;
        fixture.script.generation_rules[text] = gold_set[static_cast<std::size_t>((c + 1) % 6)];
    }
    auto pipeline = make_pipeline(fixture.script, mock_config(), dir.path / "cache");
    auto result = pipeline.run(fixture.dataset, {});
    auto report = evaluate(fixture.dataset, result.assignment);
    criterion("controlled noise: 6 of 60 misassigned => ACC exactly 0.9", report.acc == 0.9,
              "acc " + std::to_string(report.acc));
}

void check_merge_granularity() {
    TempDir dir;
    auto fixture = make_synthetic_fixture(6, 10);
    const auto& gold_set = fixture.dataset.gold_label_set();
    // split two classes into two raw labels each: 8 raw labels in total
    for (const auto& doc : fixture.dataset.documents()) {
        for (int c : {4, 5}) {
            if (*doc.gold_label == gold_set[static_cast<std::size_t>(c)]) {
                bool first_half = doc.id < 30;
                fixture.script.generation_rules[doc.text] =
                    gold_set[static_cast<std::size_t>(c)] +
                    (first_half ? " variant one" : " variant two");
            }
        }
    }
    for (int c : {4, 5}) {
        const auto& canonical = gold_set[static_cast<std::size_t>(c)];
        fixture.script.merge_map[canonical + " variant one"] = canonical;
        fixture.script.merge_map[canonical + " variant two"] = canonical;
    }

    auto config = mock_config();
    config.example_fraction = 0.0;
    bool ok = true;
    std::string detail;
    {
        auto pipeline = make_pipeline(fixture.script, config, dir.path / "cache_a");
        auto state = pipeline.generate_labels(fixture.dataset, LabelSet({}, Provenance::seeded));
        if (state.unique_labels.size() != 8) {
            ok = false;
            detail = "expected 8 raw labels, got " + std::to_string(state.unique_labels.size());
        }
        auto result = pipeline.run(fixture.dataset, {});
        auto report = evaluate(fixture.dataset, result.assignment);
        if (result.label_set.size() != 6 || report.granularity_diff != 0) {
            ok = false;
            detail = "K'=" + std::to_string(result.label_set.size()) + ", diff=" +
                     std::to_string(report.granularity_diff);
        }
    }
    {
        // unparseable merge response must leave the label list unchanged
        auto broken = fixture.script;
        broken.merge_raw_response = "I'd rather not simplify anything today.";
        auto pipeline = make_pipeline(broken, config, dir.path / "cache_b");
        auto state = pipeline.generate_labels(fixture.dataset, LabelSet({}, Provenance::seeded));
        auto merged = pipeline.merge_labels(state.unique_labels);
        if (merged.labels() != state.unique_labels || pipeline.stats().merge_fallbacks != 1) {
            ok = false;
            detail = "fallback did not preserve the input list";
        }
    }
    criterion("merge granularity: 8 raw -> 6 merged, diff 0; fallback keeps input", ok, detail);
}

void check_call_accounting() {
    TempDir dir;
    auto fixture = make_synthetic_fixture(6, 10);
    auto config = mock_config();

    auto cold_dir = dir.path / "cold";
    auto cold_pipeline = make_pipeline(fixture.script, config, dir.path / "cache");
    auto cold = cold_pipeline.run(fixture.dataset, cold_dir);
    auto cold_report = evaluate(fixture.dataset, cold.assignment);
    artifacts::write_report(cold_dir, cold_report);

    auto warm_dir = dir.path / "warm";
    auto warm_pipeline = make_pipeline(fixture.script, config, dir.path / "cache");
    auto warm = warm_pipeline.run(fixture.dataset, warm_dir);
    auto warm_report = evaluate(fixture.dataset, warm.assignment);
    artifacts::write_report(warm_dir, warm_report);

    bool ok = cold.stats.generation_requests == 4 &&  // ceil(60/15)
              cold.stats.classify_requests >= 60 && cold.stats.cache_hits == 0 &&
              warm.stats.backend_calls == 0 &&
              read_file(cold_dir / "report.json") == read_file(warm_dir / "report.json") &&
              !read_file(cold_dir / "report.json").empty();
    criterion("call accounting: 4 generation calls, >=60 classify, warm run 0 calls", ok,
              "gen " + std::to_string(cold.stats.generation_requests) + ", classify " +
                  std::to_string(cold.stats.classify_requests) + ", warm backend " +
                  std::to_string(warm.stats.backend_calls));
}

void check_prompt_fidelity() {
    auto templates = PromptTemplates::builtin();
    auto golden = [](const std::string& name) {
        return read_file(kSourceDir / "tests" / "golden" / name);
    };
    auto batch_of = [](const std::vector<std::string>& sentences) {
        MiniBatch batch;
        for (const auto& text : sentences) {
            Document doc;
            doc.id = batch.documents.size();
            doc.text = text;
            batch.documents.push_back(std::move(doc));
        }
        return batch;
    };

    const std::vector<std::string> case_labels = {"update call",        "get weather",
                                                  "update method call", "resume music",
                                                  "get stories news",   "get reminder location"};
    bool ok = true;
    ok = ok && render_generation_prompt(templates, {}, batch_of({"hi there"})).rendered_text ==
                   golden("generate_empty_labels.txt");
    ok = ok &&
         render_generation_prompt(
             templates, case_labels,
             batch_of({"do not play any song by lil Yachty",
                       "show me video messages from my grandma",
                       "please add a one and a half minute timer",
                       "read national news headlines"}))
                 .rendered_text == golden("generate_mtop_case.txt");
    ok = ok && render_merge_prompt(templates, {"update call", "get weather", "update method call",
                                               "get reminder location", "create reminder"})
                       .rendered_text == golden("merge_case.txt");
    ok = ok &&
         render_merge_prompt(templates, {"update call"}).rendered_text == golden("merge_single.txt");
    ok = ok && render_assign_prompt(templates,
                                    {"update call", "get weather", "get reminder location",
                                     "create reminder"},
                                    "Show me dates for music festivals in 2018.")
                       .rendered_text == golden("assign_case.txt");
    ok = ok &&
         render_assign_prompt(templates, {"a"}, "x").rendered_text == golden("assign_minimal.txt");
    criterion("prompt fidelity: all six golden transcriptions byte-exact", ok);
}

void check_sweep_outputs() {
    TempDir dir;
    auto base_args = std::string("--dataset \"") +
                     (kSourceDir / "data" / "synthetic60.jsonl").string() +
                     "\" --backend mock --mock-script \"" +
                     (kSourceDir / "data" / "synthetic60_mock.json").string() + "\" --seed 7";

    auto run_sweep_cli = [&](const std::string& axis, const std::string& values,
                             const std::filesystem::path& csv,
                             const std::string& run_name) {
        std::string command = "\"" + kCliPath.string() + "\" sweep " + base_args +
                              " --run-dir \"" + (dir.path / run_name).string() + "\" --axis " +
                              axis + " --values " + values + " --out \"" + csv.string() +
                              "\" > /dev/null 2>&1";
        int status = std::system(command.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };

    auto batch_csv = dir.path / "batch.csv";
    auto frac_csv = dir.path / "frac.csv";
    bool ok = run_sweep_cli("batch_size", "10,15,20", batch_csv, "s1") &&
              run_sweep_cli("example_fraction", "0.10,0.15,0.20,0.25", frac_csv, "s2");

    auto well_formed = [](const std::string& content, std::size_t rows) {
        if (content.rfind("value,acc,nmi,ari,k_pred\n", 0) != 0) return false;
        std::size_t lines = static_cast<std::size_t>(
            std::count(content.begin(), content.end(), '\n'));
        if (lines != rows + 1) return false;
        auto commas = static_cast<std::size_t>(std::count(content.begin(), content.end(), ','));
        return commas == (rows + 1) * 4;
    };
    ok = ok && well_formed(read_file(batch_csv), 3) && well_formed(read_file(frac_csv), 4);
    criterion("sweep CSVs: batch sizes by 3 rows, fractions by 4 rows, well-formed", ok);
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    auto start = std::chrono::steady_clock::now();
    check_headline_statement();
    check_hungarian_oracle();
    check_metric_definitions();
    check_chance_correction();
    check_relabeling_invariance();
    check_oracle_run();
    check_controlled_noise();
    check_merge_granularity();
    check_call_accounting();
    check_prompt_fidelity();
    check_sweep_outputs();

    std::printf("%d criterion(s) failed; suite took %.2fs\n", g_failures, seconds_since(start));
    return g_failures == 0 ? 0 : 1;
}
