#include "elicit/analytics.hpp"
#include "elicit/chain.hpp"
#include "elicit/quality.hpp"
#include "elicit/rubric.hpp"
#include "elicit/transcript.hpp"

#include "schema_check.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <random>

using namespace elicit;
using elicit::test::SchemaChecker;

namespace {

SchemaChecker load_schema(const std::string& name) {
    const std::string path =
        std::string(ELICIT_DEFAULT_DATA_DIR) + "/../schemas/" + name + ".schema.json";
    return SchemaChecker(nlohmann::json::parse(elicit::test::read_file(path)));
}

void expect_valid(const SchemaChecker& checker, const nlohmann::json& doc) {
    auto errors = checker.validate(doc);
    for (const auto& error : errors) MESSAGE(error);
    CHECK(errors.empty());
}

}  // namespace

TEST_CASE("emitted JSON conforms to the shipped schemas") {
    std::mt19937 rng(2024);
    Script script = elicit::test::random_script(rng);
    script.id = "schema-check";

    SUBCASE("structured script") {
        auto doc = nlohmann::json::parse(serialize_script(script, ScriptFormat::Structured));
        expect_valid(load_schema("script"), doc);
    }

    SUBCASE("analytics report") {
        expect_valid(load_schema("report"),
                     report_to_json(script_report({script}, script.id, {})));
    }

    SUBCASE("quality report") {
        expect_valid(load_schema("quality"),
                     quality_to_json(script.id, score_script(script)));
    }

    SUBCASE("lint findings") {
        LintPatterns patterns =
            LintPatterns::load(std::string(ELICIT_DEFAULT_DATA_DIR) + "/patterns");
        expect_valid(load_schema("findings"),
                     findings_to_json(lint_script(script, patterns)));
    }

    SUBCASE("evaluation template, blank and filled") {
        nlohmann::json blank = new_evaluation_template(script, "e1");
        SchemaChecker checker = load_schema("evaluation");
        expect_valid(checker, blank);
        nlohmann::json filled = blank;
        for (NLDimension d : kAllDimensions) filled[key_of(d)]["score"] = 4;
        for (RubricElement e : kAllElements) filled[key_of(e)]["score"] = 4;
        expect_valid(checker, filled);
    }

    SUBCASE("chain log records") {
        ChainLog log;
        CompletionRequest request;
        request.system_context = "sys";
        request.user_prompt = "user";
        CompletionResponse response;
        response.text = "hello";
        log.records.push_back({0, request, response, 7});
        SchemaChecker checker = load_schema("chainlog");
        std::istringstream lines(log.to_jsonl());
        std::string line;
        while (std::getline(lines, line)) {
            expect_valid(checker, nlohmann::json::parse(line));
        }
    }
}

TEST_CASE("schema checker rejects shape violations") {
    SchemaChecker checker = load_schema("script");
    nlohmann::json bad = {{"id", "x"},
                          {"title", ""},
                          {"domain_label", ""},
                          {"turns", nlohmann::json::array()}};
    CHECK(!checker.validate(bad).empty());  // minItems 1
    bad["turns"].push_back({{"speaker", "Moderator"}, {"text", "hi"}});
    CHECK(!checker.validate(bad).empty());  // speaker enum
}
