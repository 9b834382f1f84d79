#include <doctest.h>

#include <fstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "llmclust/cache.hpp"
#include "llmclust/errors.hpp"
#include "llmclust/http_backend.hpp"
#include "llmclust/mock_backend.hpp"
#include "llmclust/prompting.hpp"
#include "test_util.hpp"

using namespace llmclust;
using namespace llmclust::test;
using nlohmann::json;

namespace {

CompletionRequest request_for(std::string prompt) {
    CompletionRequest req;
    req.prompt = std::move(prompt);
    req.model_name = "test-model";
    req.temperature = 0.0;
    return req;
}

MiniBatch batch_of(const std::vector<std::string>& sentences) {
    MiniBatch batch;
    for (const auto& text : sentences) {
        Document doc;
        doc.id = batch.documents.size();
        doc.text = text;
        batch.documents.push_back(std::move(doc));
    }
    return batch;
}

/// Transport stub that replays a fixed response sequence.
class ScriptedTransport : public HttpTransport {
public:
    explicit ScriptedTransport(std::vector<HttpResponse> responses)
        : responses_(std::move(responses)) {}

    HttpResponse post_json(const std::string&, const std::string& body) override {
        last_body = body;
        ++calls;
        if (static_cast<std::size_t>(calls) <= responses_.size()) {
            return responses_[static_cast<std::size_t>(calls - 1)];
        }
        return responses_.back();
    }

    int calls = 0;
    std::string last_body;

private:
    std::vector<HttpResponse> responses_;
};

HttpResponse ok_response(const std::string& content) {
    json body = {{"choices", json::array({{{"message", {{"role", "assistant"},
                                                        {"content", content}}}}})}};
    return {200, body.dump(), false, ""};
}

RetryPolicy fast_retry(int max_retries) {
    RetryPolicy policy;
    policy.max_retries = max_retries;
    policy.initial_delay = std::chrono::milliseconds(1);
    policy.max_delay = std::chrono::milliseconds(2);
    return policy;
}

}  // namespace

TEST_CASE("mock answers an assign prompt with the scripted label") {
    MockScript script;
    script.generation_rules["Show me dates for music festivals in 2018."] = "get event";
    MockBackend backend(script, 4);

    auto prompt = render_assign_prompt(PromptTemplates::builtin(),
                                       {"update call", "get event", "get weather"},
                                       "Show me dates for music festivals in 2018.");
    auto response = backend.complete(request_for(prompt.rendered_text));
    CHECK(json::parse(response)["label_name"] == "get event");
}

TEST_CASE("mock assign falls back to the default label") {
    MockScript script;
    script.generation_rules["some text"] = "not offered";
    script.default_label = "other";
    MockBackend backend(script, 1);

    auto prompt =
        render_assign_prompt(PromptTemplates::builtin(), {"update call"}, "some text");
    auto response = backend.complete(request_for(prompt.rendered_text));
    CHECK(json::parse(response)["label_name"] == "other");
}

TEST_CASE("mock assign canonicalizes through merge_map") {
    MockScript script;
    script.generation_rules["the text"] = "update method call";
    script.merge_map["update method call"] = "update call";
    MockBackend backend(script, 1);

    auto prompt = render_assign_prompt(PromptTemplates::builtin(),
                                       {"update call", "get weather"}, "the text");
    auto response = backend.complete(request_for(prompt.rendered_text));
    CHECK(json::parse(response)["label_name"] == "update call");
}

TEST_CASE("mock generation proposes only labels missing from the context") {
    MockScript script;
    script.generation_rules["about cats"] = "cats";
    script.generation_rules["about dogs"] = "dogs";
    script.generation_rules["more cats"] = "cats";
    MockBackend backend(script, 4);

    auto prompt = render_generation_prompt(PromptTemplates::builtin(), {"Cats"},
                                           batch_of({"about cats", "about dogs", "more cats"}));
    auto response = backend.complete(request_for(prompt.rendered_text));
    CHECK(json::parse(response)["labels"] == json::array({"dogs"}));

    auto all_known = render_generation_prompt(PromptTemplates::builtin(), {"cats", "dogs"},
                                              batch_of({"about cats", "about dogs"}));
    auto empty = backend.complete(request_for(all_known.rendered_text));
    CHECK(json::parse(empty)["labels"] == json::array());
}

TEST_CASE("mock merge applies merge_map to fixpoint and deduplicates") {
    MockScript script;
    script.merge_map["update method call"] = "update phone call";
    script.merge_map["update phone call"] = "update call";
    MockBackend backend(script, 4);

    auto prompt = render_merge_prompt(
        PromptTemplates::builtin(),
        {"update call", "get weather", "update method call", "update phone call"});
    auto response = backend.complete(request_for(prompt.rendered_text));
    CHECK(json::parse(response)["merged_labels"] == json::array({"update call", "get weather"}));
}

TEST_CASE("merge_map cycles are rejected") {
    MockScript script;
    script.merge_map["a"] = "b";
    script.merge_map["b"] = "a";
    CHECK_THROWS_AS(script.validate(), ConfigError);
}

TEST_CASE("mock raw-response overrides bypass scripting") {
    MockScript script;
    script.generation_rules["text"] = "label";
    script.merge_raw_response = "I cannot help with that.";
    script.assign_overrides["text"] = "left field";
    MockBackend backend(script, 4);

    auto merge = render_merge_prompt(PromptTemplates::builtin(), {"label"});
    CHECK(backend.complete(request_for(merge.rendered_text)) == "I cannot help with that.");

    auto assign = render_assign_prompt(PromptTemplates::builtin(), {"label"}, "text");
    CHECK(json::parse(backend.complete(request_for(assign.rendered_text)))["label_name"] ==
          "left field");
}

TEST_CASE("mock script round-trips through a JSON file") {
    TempDir dir;
    auto path = dir.path / "script.json";
    write_file(path, R"({
      "generation_rules": {"t": "l"},
      "merge_map": {"l2": "l"},
      "default_label": "misc",
      "assign_overrides": {"t2": "x"}
    })");
    auto script = MockScript::from_json_file(path);
    CHECK(script.generation_rules.at("t") == "l");
    CHECK(script.default_label == "misc");

    write_file(path, R"({"not_a_key": 1})");
    CHECK_THROWS_AS(MockScript::from_json_file(path), ConfigError);
}

TEST_CASE("cached_complete hits on the second identical request") {
    TempDir dir;
    MockScript script;
    script.generation_rules["hello"] = "greeting";
    auto backend = std::make_shared<MockBackend>(script, 4);
    CachingClient client(backend, dir.path / "cache");

    auto prompt =
        render_assign_prompt(PromptTemplates::builtin(), {"greeting"}, "hello").rendered_text;
    auto first = client.cached_complete(request_for(prompt));
    CHECK_FALSE(first.cache_hit);
    auto second = client.cached_complete(request_for(prompt));
    CHECK(second.cache_hit);
    CHECK(second.text == first.text);
    CHECK(backend->calls() == 1);
    CHECK(client.backend_calls() == 1);
    CHECK(client.cache_hits() == 1);
}

TEST_CASE("temperature is part of the cache key") {
    auto req_a = request_for("same prompt");
    auto req_b = request_for("same prompt");
    req_b.temperature = 0.7;
    CHECK(cache_key(req_a) != cache_key(req_b));

    auto req_c = request_for("same prompt");
    req_c.model_name = "other-model";
    CHECK(cache_key(req_a) != cache_key(req_c));
    CHECK(cache_key(req_a) == cache_key(request_for("same prompt")));
}

TEST_CASE("cache survives a process restart (new client, same directory)") {
    TempDir dir;
    MockScript script;
    for (int i = 0; i < 100; ++i) {
        script.generation_rules["doc " + std::to_string(i)] = "label " + std::to_string(i % 7);
    }
    auto make_prompt = [](int i) {
        return render_assign_prompt(PromptTemplates::builtin(), {"label"},
                                    "doc " + std::to_string(i))
            .rendered_text;
    };

    {
        CachingClient client(std::make_shared<MockBackend>(script, 4), dir.path / "cache");
        for (int i = 0; i < 100; ++i) {
            CHECK_FALSE(client.cached_complete(request_for(make_prompt(i))).cache_hit);
        }
    }
    {
        CachingClient client(std::make_shared<MockBackend>(script, 4), dir.path / "cache");
        for (int i = 0; i < 100; ++i) {
            CHECK(client.cached_complete(request_for(make_prompt(i))).cache_hit);
        }
        CHECK(client.backend_calls() == 0);
        CHECK(client.cache_hits() == 100);
    }
}

TEST_CASE("corrupt cache entries are quarantined and treated as misses") {
    TempDir dir;
    MockScript script;
    script.generation_rules["hello"] = "greeting";
    auto backend = std::make_shared<MockBackend>(script, 4);
    CachingClient client(backend, dir.path / "cache");

    auto req = request_for(
        render_assign_prompt(PromptTemplates::builtin(), {"greeting"}, "hello").rendered_text);
    auto key = cache_key(req);
    write_file(dir.path / "cache" / (key + ".json"), "garbage{{{");

    auto result = client.cached_complete(req);
    CHECK_FALSE(result.cache_hit);
    CHECK(std::filesystem::exists(dir.path / "cache" / (key + ".corrupt")));
    CHECK(std::filesystem::exists(dir.path / "cache" / (key + ".json")));
}

TEST_CASE("http backend retries 429s and succeeds on the third attempt") {
    auto transport = std::make_unique<ScriptedTransport>(std::vector<HttpResponse>{
        {429, "slow down", false, ""},
        {429, "slow down", false, ""},
        ok_response("{\"labels\": []}"),
    });
    auto* raw = transport.get();
    HttpBackend backend(std::move(transport), fast_retry(3), 2, 0,
                        [](std::chrono::milliseconds) {});

    auto text = backend.complete(request_for("prompt"));
    CHECK(text == "{\"labels\": []}");
    CHECK(raw->calls == 3);
    CHECK(backend.attempts() == 3);

    auto body = json::parse(raw->last_body);
    CHECK(body["model"] == "test-model");
    CHECK(body["messages"][0]["content"] == "prompt");
}

TEST_CASE("http backend gives up after max_retries") {
    auto transport = std::make_unique<ScriptedTransport>(
        std::vector<HttpResponse>{{503, "down", false, ""}});
    auto* raw = transport.get();
    HttpBackend backend(std::move(transport), fast_retry(2), 2, 0,
                        [](std::chrono::milliseconds) {});

    try {
        backend.complete(request_for("prompt"));
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.failure() == BackendFailure::unavailable);
    }
    CHECK(raw->calls == 3);  // 1 initial + 2 retries
}

TEST_CASE("http backend classifies non-retryable failures") {
    SUBCASE("auth") {
        HttpBackend backend(std::make_unique<ScriptedTransport>(
                                std::vector<HttpResponse>{{401, "no key", false, ""}}),
                            fast_retry(3), 2, 0, [](std::chrono::milliseconds) {});
        try {
            backend.complete(request_for("prompt"));
            FAIL("expected BackendError");
        } catch (const BackendError& e) {
            CHECK(e.failure() == BackendFailure::auth);
        }
        CHECK(backend.attempts() == 1);  // not retried
    }
    SUBCASE("context too long") {
        HttpBackend backend(
            std::make_unique<ScriptedTransport>(std::vector<HttpResponse>{
                {400, R"({"error": {"code": "context_length_exceeded"}})", false, ""}}),
            fast_retry(3), 2, 0, [](std::chrono::milliseconds) {});
        try {
            backend.complete(request_for("prompt"));
            FAIL("expected BackendError");
        } catch (const BackendError& e) {
            CHECK(e.failure() == BackendFailure::context_too_long);
        }
    }
    SUBCASE("network errors are retried") {
        auto transport = std::make_unique<ScriptedTransport>(std::vector<HttpResponse>{
            {0, "", true, "connection refused"}, ok_response("ok")});
        auto* raw = transport.get();
        HttpBackend backend(std::move(transport), fast_retry(2), 2, 0,
                            [](std::chrono::milliseconds) {});
        CHECK(backend.complete(request_for("prompt")) == "ok");
        CHECK(raw->calls == 2);
    }
}

TEST_CASE("in-flight gate never exceeds its limit") {
    MockScript script;
    script.generation_rules["t"] = "l";
    MockBackend backend(script, 4, std::chrono::milliseconds(2));

    auto prompt = render_assign_prompt(PromptTemplates::builtin(), {"l"}, "t").rendered_text;
    std::vector<std::thread> threads;
    for (int i = 0; i < 16; ++i) {
        threads.emplace_back([&] { backend.complete(request_for(prompt)); });
    }
    for (auto& t : threads) {
        t.join();
    }
    CHECK(backend.calls() == 16);
    CHECK(backend.peak_in_flight() <= 4);
    CHECK(backend.peak_in_flight() >= 2);
}

TEST_CASE("rate limiter paces requests and is a no-op at zero") {
    int sleeps = 0;
    RateLimiter unlimited(0, [&](std::chrono::milliseconds) { ++sleeps; });
    for (int i = 0; i < 10; ++i) {
        unlimited.acquire();
    }
    CHECK(sleeps == 0);

    // 60000 rpm = 1 request per millisecond: the second acquire has to wait.
    RateLimiter limited(60000);
    auto start = std::chrono::steady_clock::now();
    limited.acquire();
    limited.acquire();
    auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(std::chrono::duration_cast<std::chrono::microseconds>(elapsed).count() >= 500);
}
