#include "llmclust/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "llmclust/artifacts.hpp"
#include "llmclust/errors.hpp"

namespace llmclust {

namespace {

// Appended for the single re-ask after an unusable response. A distinct
// prompt gets a distinct cache key, so the retry is a real second call
// instead of a replay of the cached bad answer.
constexpr std::string_view kGenerateReask =
    "\nYour previous response could not be parsed. Please return only valid json.";
constexpr std::string_view kAssignReask =
    "\nYour previous response was not one of the provided labels. Please pick exactly one label "
    "from the list and return only valid json.";

std::string_view reask_suffix(PromptKind kind) {
    return kind == PromptKind::assign ? kAssignReask : kGenerateReask;
}

}  // namespace

Pipeline::Pipeline(RunConfig config, PromptTemplates templates,
                   std::shared_ptr<CompletionBackend> backend, std::filesystem::path cache_dir)
    : config_(std::move(config)), templates_(std::move(templates)), backend_(std::move(backend)) {
    config_.validate();
    templates_.validate();
    client_ = std::make_unique<CachingClient>(backend_, std::move(cache_dir));
}

CompletionResult Pipeline::request(const std::string& prompt) {
    CompletionRequest req;
    req.prompt = prompt;
    req.model_name = config_.model_name;
    req.temperature = config_.temperature;
    if (config_.max_tokens > 0) {
        req.max_tokens = config_.max_tokens;
    }
    return client_->cached_complete(req);
}

std::vector<std::string> Pipeline::request_labels_with_reask(const std::string& prompt,
                                                             PromptKind kind,
                                                             std::int64_t& request_counter) {
    const std::string key(response_key(kind));
    ++request_counter;
    try {
        return parse_labels_response(request(prompt).text, key);
    } catch (const ResponseFormatError& e) {
        spdlog::debug("unusable {} response ({}); re-asking once", to_string(kind), e.what());
    }
    ++request_counter;
    ++stats_.reasks;
    return parse_labels_response(request(prompt + std::string(reask_suffix(kind))).text, key);
}

GenerationState Pipeline::generate_labels(const Dataset& dataset, const LabelSet& examples) {
    GenerationState state;
    state.examples = examples.labels();
    state.running_pool = examples.labels();

    std::unordered_set<std::string> pool_keys;
    for (const auto& label : examples.normalized()) {
        pool_keys.insert(label);
    }

    auto batches = split_batches(dataset, config_.batch_size);
    stats_.batches = static_cast<std::int64_t>(batches.size());

    for (const auto& batch : batches) {
        const auto& context =
            config_.feed_back_generated_labels ? state.running_pool : state.examples;
        auto bundle = render_generation_prompt(templates_, context, batch);

        std::vector<std::string> parsed;
        try {
            parsed = request_labels_with_reask(bundle.rendered_text, PromptKind::generate,
                                               stats_.generation_requests);
        } catch (const ResponseFormatError& e) {
            ++stats_.generation_parse_failures;
            spdlog::warn("batch {}: response unusable after re-ask, recording zero labels ({})",
                         batch.batch_index, e.what());
        } catch (const BackendError& e) {
            throw BackendError(e.failure(), "batch " + std::to_string(batch.batch_index) + ": " +
                                                e.what());
        }

        for (const auto& label : parsed) {
            if (pool_keys.insert(normalize_label(label)).second) {
                state.running_pool.push_back(label);
            }
        }
        state.raw_labels_per_batch.push_back(std::move(parsed));
    }

    state.unique_labels = aggregate_unique(state);
    return state;
}

std::vector<std::string> Pipeline::aggregate_unique(const GenerationState& state) {
    std::vector<std::string> combined = state.examples;
    for (const auto& batch_labels : state.raw_labels_per_batch) {
        combined.insert(combined.end(), batch_labels.begin(), batch_labels.end());
    }

    std::vector<std::string> unique;
    std::unordered_set<std::string> seen;
    for (auto& label : combined) {
        std::string key = normalize_label(label);
        if (key.empty() || !seen.insert(key).second) {
            continue;
        }
        unique.push_back(std::move(label));
    }
    if (unique.empty()) {
        throw DataError("label pool is empty: no examples given and no labels generated");
    }
    return unique;
}

Pipeline::MergeOutcome Pipeline::merge_once(const std::vector<std::string>& labels) {
    auto bundle = render_merge_prompt(templates_, labels);
    MergeOutcome outcome;
    try {
        auto parsed = request_labels_with_reask(bundle.rendered_text, PromptKind::merge,
                                                stats_.merge_requests);
        outcome.labels = LabelSet::deduplicated(parsed, Provenance::merged).labels();
    } catch (const ResponseFormatError& e) {
        spdlog::warn("merge response unusable after re-ask, keeping labels unchanged ({})",
                     e.what());
        outcome.labels = labels;
        outcome.fell_back = true;
        return outcome;
    }

    if (outcome.labels.empty() || outcome.labels.size() > labels.size()) {
        spdlog::warn("merge returned {} labels for {} inputs, keeping labels unchanged",
                     outcome.labels.size(), labels.size());
        outcome.labels = labels;
        outcome.fell_back = true;
    }
    return outcome;
}

LabelSet Pipeline::merge_labels(const std::vector<std::string>& unique_labels) {
    if (unique_labels.empty()) {
        throw DataError("cannot merge an empty label list");
    }

    const auto budget = static_cast<std::size_t>(config_.merge_char_budget);
    auto single = render_merge_prompt(templates_, unique_labels);

    std::vector<std::string> merged;
    bool fell_back = false;
    if (single.rendered_text.size() <= budget) {
        auto outcome = merge_once(unique_labels);
        merged = std::move(outcome.labels);
        fell_back = outcome.fell_back;
    } else {
        // Chunked passes followed by one final pass over the chunk outputs.
        const auto chunk = static_cast<std::size_t>(config_.merge_chunk_size);
        std::vector<std::string> combined;
        for (std::size_t start = 0; start < unique_labels.size(); start += chunk) {
            auto end = std::min(start + chunk, unique_labels.size());
            std::vector<std::string> slice(unique_labels.begin() + static_cast<std::ptrdiff_t>(start),
                                           unique_labels.begin() + static_cast<std::ptrdiff_t>(end));
            auto outcome = merge_once(slice);
            fell_back = fell_back || outcome.fell_back;
            combined.insert(combined.end(), outcome.labels.begin(), outcome.labels.end());
        }
        auto final_pass = merge_once(combined);
        fell_back = fell_back || final_pass.fell_back;
        merged = std::move(final_pass.labels);
    }

    if (fell_back) {
        ++stats_.merge_fallbacks;
    }

    LabelSet result = LabelSet::deduplicated(merged, Provenance::merged);
    if (result.empty()) {
        throw DataError("merge produced an empty label set");
    }
    return result;
}

Assignment Pipeline::classify_all(const Dataset& dataset, const LabelSet& labels) {
    if (labels.empty()) {
        throw DataError("cannot classify against an empty label set");
    }

    const auto n = dataset.size();
    std::vector<std::int64_t> doc_to_label(n, Assignment::kUnmatched);

    std::atomic<std::size_t> next{0};
    std::atomic<std::int64_t> requests{0};
    std::atomic<std::int64_t> reasks{0};
    std::atomic<std::int64_t> unmatched{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto classify_one = [&](const Document& doc) {
        auto bundle = render_assign_prompt(templates_, labels.labels(), doc.text);
        std::string prompt = bundle.rendered_text;
        for (int attempt = 0; attempt < 2; ++attempt) {
            if (attempt == 1) {
                prompt += std::string(kAssignReask);
                ++reasks;
            }
            ++requests;
            try {
                auto parsed =
                    parse_labels_response(request(prompt).text, response_key(PromptKind::assign));
                if (!parsed.empty()) {
                    if (auto idx = labels.find(parsed.front())) {
                        doc_to_label[doc.id] = static_cast<std::int64_t>(*idx);
                        return;
                    }
                }
            } catch (const ResponseFormatError&) {
                // fall through to the re-ask, then to UNMATCHED
            }
        }
        ++unmatched;
        spdlog::debug("document {} unmatched after re-ask", doc.id);
    };

    auto worker = [&] {
        while (!abort.load()) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                classify_one(dataset.documents()[i]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                abort.store(true);
                return;
            }
        }
    };

    const auto thread_count =
        std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(config_.max_in_flight), n));
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    stats_.classify_requests += requests.load();
    stats_.reasks += reasks.load();
    stats_.unmatched += unmatched.load();
    return Assignment(std::move(doc_to_label), labels);
}

ClusteringResult Pipeline::run(const Dataset& dataset, const std::filesystem::path& run_dir) {
    LabelSet examples = sample_example_labels(dataset, config_.example_fraction, config_.seed);
    spdlog::info("seeded {} example labels", examples.size());

    GenerationState state = generate_labels(dataset, examples);
    spdlog::info("generated {} unique labels over {} batches", state.unique_labels.size(),
                 stats_.batches);

    LabelSet merged = merge_labels(state.unique_labels);
    spdlog::info("merged down to {} labels", merged.size());

    Assignment assignment = classify_all(dataset, merged);
    spdlog::info("classified {} documents ({} unmatched)", dataset.size(), stats_.unmatched);

    stats_.backend_calls = client_->backend_calls();
    stats_.cache_hits = client_->cache_hits();

    ClusteringResult result{merged, std::move(assignment), stats_, config_};
    if (!run_dir.empty()) {
        artifacts::write_run(run_dir, dataset, state, result);
    }
    return result;
}

}  // namespace llmclust
