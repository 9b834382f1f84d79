#include <doctest.h>

#include <filesystem>

#include "llmclust/errors.hpp"
#include "llmclust/prompting.hpp"
#include "test_util.hpp"

using namespace llmclust;
using namespace llmclust::test;

namespace {

const std::filesystem::path kSourceDir = LLMCLUST_SOURCE_DIR;

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

std::string golden(const std::string& name) {
    return read_file(kSourceDir / "tests" / "golden" / name);
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + 1)) {
        ++count;
    }
    return count;
}

const std::vector<std::string> kCaseStudyLabels = {
    "update call",        "get weather",      "update method call",
    "resume music",       "get stories news", "get reminder location"};

const std::vector<std::string> kCaseStudySentences = {
    "do not play any song by lil Yachty", "show me video messages from my grandma",
    "please add a one and a half minute timer", "read national news headlines"};

}  // namespace

TEST_CASE("generation prompt matches the golden transcriptions") {
    auto templates = PromptTemplates::builtin();
    auto empty = render_generation_prompt(templates, {}, batch_of({"hi there"}));
    CHECK(empty.rendered_text == golden("generate_empty_labels.txt"));
    CHECK(empty.rendered_text.find("Labels: []") != std::string::npos);

    auto case_study =
        render_generation_prompt(templates, kCaseStudyLabels, batch_of(kCaseStudySentences));
    CHECK(case_study.rendered_text == golden("generate_mtop_case.txt"));
}

TEST_CASE("merge prompt matches the golden transcriptions") {
    auto templates = PromptTemplates::builtin();
    std::vector<std::string> labels = {"update call", "get weather", "update method call",
                                       "get reminder location", "create reminder"};
    CHECK(render_merge_prompt(templates, labels).rendered_text == golden("merge_case.txt"));
    CHECK(render_merge_prompt(templates, {"update call"}).rendered_text ==
          golden("merge_single.txt"));
}

TEST_CASE("assign prompt matches the golden transcriptions") {
    auto templates = PromptTemplates::builtin();
    std::vector<std::string> labels = {"update call", "get weather", "get reminder location",
                                       "create reminder"};
    auto bundle =
        render_assign_prompt(templates, labels, "Show me dates for music festivals in 2018.");
    CHECK(bundle.rendered_text == golden("assign_case.txt"));
    CHECK(render_assign_prompt(templates, {"a"}, "x").rendered_text ==
          golden("assign_minimal.txt"));
}

TEST_CASE("rendering is deterministic") {
    auto templates = PromptTemplates::builtin();
    auto a = render_generation_prompt(templates, kCaseStudyLabels, batch_of(kCaseStudySentences));
    auto b = render_generation_prompt(templates, kCaseStudyLabels, batch_of(kCaseStudySentences));
    CHECK(a.rendered_text == b.rendered_text);

    CHECK(render_merge_prompt(templates, kCaseStudyLabels).rendered_text ==
          render_merge_prompt(templates, kCaseStudyLabels).rendered_text);
    CHECK(render_assign_prompt(templates, kCaseStudyLabels, "x").rendered_text ==
          render_assign_prompt(templates, kCaseStudyLabels, "x").rendered_text);
}

TEST_CASE("every input sentence appears verbatim exactly once") {
    auto templates = PromptTemplates::builtin();
    auto bundle =
        render_generation_prompt(templates, kCaseStudyLabels, batch_of(kCaseStudySentences));
    for (const auto& sentence : kCaseStudySentences) {
        CHECK(count_occurrences(bundle.rendered_text, sentence) == 1);
    }
}

TEST_CASE("a 300-label merge prompt preserves order in a single prompt") {
    auto templates = PromptTemplates::builtin();
    std::vector<std::string> labels;
    for (int i = 0; i < 300; ++i) {
        labels.push_back("label number " + std::to_string(i));
    }
    auto bundle = render_merge_prompt(templates, labels);
    std::size_t previous = 0;
    for (const auto& label : labels) {
        auto pos = bundle.rendered_text.find("'" + label + "'");
        REQUIRE(pos != std::string::npos);
        CHECK(pos > previous);
        previous = pos;
    }
}

TEST_CASE("labels with quotes are escaped and round-trip") {
    auto templates = PromptTemplates::builtin();
    auto bundle = render_merge_prompt(templates, {"rock 'n' roll", "plain"});
    CHECK(bundle.rendered_text.find(R"(['rock \'n\' roll', 'plain'])") != std::string::npos);
}

TEST_CASE("template assets on disk match the compiled-in templates") {
    auto from_disk = PromptTemplates::load_dir(kSourceDir / "assets" / "prompts");
    auto builtin = PromptTemplates::builtin();
    CHECK(from_disk.generate == builtin.generate);
    CHECK(from_disk.merge == builtin.merge);
    CHECK(from_disk.assign == builtin.assign);
}

TEST_CASE("template validation rejects missing placeholders") {
    auto templates = PromptTemplates::builtin();
    templates.assign = "no placeholders here";
    CHECK_THROWS_AS(templates.validate(), ConfigError);

    TempDir dir;
    write_file(dir.path / "generate.txt", "only {given_labels}");
    write_file(dir.path / "merge.txt", "{label_list} {json_example}");
    write_file(dir.path / "assign.txt", "{label_list} {sentence} {json_example}");
    CHECK_THROWS_AS(PromptTemplates::load_dir(dir.path), ConfigError);
}

TEST_CASE("render preconditions") {
    auto templates = PromptTemplates::builtin();
    CHECK_THROWS_AS(render_generation_prompt(templates, {}, MiniBatch{}), ConfigError);
    CHECK_THROWS_AS(render_merge_prompt(templates, {}), ConfigError);
    CHECK_THROWS_AS(render_assign_prompt(templates, {}, "x"), ConfigError);
    CHECK_THROWS_AS(render_assign_prompt(templates, {"a"}, ""), ConfigError);
}

TEST_CASE("parse_labels_response extracts the expected key") {
    auto labels = parse_labels_response(
        R"({"labels": ["get info contact", "get stories news", "create reminder"]})", "labels");
    CHECK(labels ==
          std::vector<std::string>{"get info contact", "get stories news", "create reminder"});

    CHECK(parse_labels_response(R"({"label_name": "get event"})", "label_name") ==
          std::vector<std::string>{"get event"});
}

TEST_CASE("parse_labels_response strips fences and prose") {
    CHECK(parse_labels_response("```json\n{\"labels\": []}\n``` extra prose", "labels").empty());
    CHECK(parse_labels_response("Sure! Here you go: {\"labels\": [\"One Label\"]} hope it helps",
                                "labels") == std::vector<std::string>{"one label"});
    // skips brace noise that is not a JSON object
    CHECK(parse_labels_response("{not json} then {\"labels\": [\"x\"]}", "labels") ==
          std::vector<std::string>{"x"});
}

TEST_CASE("parse_labels_response normalizes and drops empties") {
    auto labels =
        parse_labels_response(R"({"labels": ["  Get Weather ", "", "GET\tWEATHER", "b"]})",
                              "labels");
    CHECK(labels == std::vector<std::string>{"get weather", "get weather", "b"});
}

TEST_CASE("parse_labels_response error classification") {
    auto cause_of = [](const std::string& text, const std::string& key) {
        try {
            parse_labels_response(text, key);
        } catch (const ResponseFormatError& e) {
            return e.cause();
        }
        throw std::logic_error("expected ResponseFormatError");
    };

    CHECK(cause_of("no json at all", "labels") == ResponseFormatError::Cause::no_json_found);
    CHECK(cause_of(R"({"other": []})", "labels") == ResponseFormatError::Cause::key_missing);
    CHECK(cause_of(R"({"labels": 7})", "labels") == ResponseFormatError::Cause::wrong_shape);
    CHECK(cause_of(R"({"labels": [1, 2]})", "labels") == ResponseFormatError::Cause::wrong_shape);
}
