#include "elicit/chain.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <random>

using namespace elicit;

namespace {

// Replies from a fixed list, repeating the last one; records every request.
class SequenceBackend : public Backend {
public:
    explicit SequenceBackend(std::vector<CompletionResponse> replies)
        : replies_(std::move(replies)) {}

    CompletionResponse complete(const CompletionRequest& request) override {
        requests.push_back(request);
        if (next_ < replies_.size()) return replies_[next_++];
        return replies_.back();
    }
    std::string name() const override { return "sequence"; }

    std::vector<CompletionRequest> requests;

private:
    std::vector<CompletionResponse> replies_;
    size_t next_ = 0;
};

CompletionResponse reply(const std::string& text) {
    CompletionResponse response;
    response.text = text;
    return response;
}

CompletionResponse backend_failure(const std::string& message) {
    CompletionResponse response;
    response.finish_reason = FinishReason::BackendError;
    response.error = message;
    return response;
}

const char* kGoodOutline =
    "1. Greeting — build rapport (turns: 4)\n"
    "2. As-Is — current process (turns: 10)\n"
    "3. Closing — summarize (turns: 4)\n";

std::vector<KnowledgeDoc> tiny_knowledge() {
    return {
        {"g.txt", KnowledgeKind::Guidelines,
         "Ask clear questions about the system.\n\nFollow up on vague answers."},
        {"p.txt", KnowledgeKind::Pitfalls, "Avoid leading questions and technical jargon."},
        {"s.txt", KnowledgeKind::SampleScript, "Interviewer: Hello.\nStakeholder: Hi."},
    };
}

GenerationConfig test_config(const std::string& scenario = "meeting scheduler system") {
    GenerationConfig config;
    config.scenario = scenario;
    config.backoff_base_ms = 0;  // no sleeps in tests
    return config;
}

PromptTemplates repo_templates() {
    return load_prompt_templates(std::string(ELICIT_DEFAULT_DATA_DIR) + "/prompts");
}

}  // namespace

TEST_CASE("parse_outline: the documented grammar") {
    OutlineLimits limits;
    Outline outline = parse_outline(kGoodOutline, limits);
    REQUIRE(outline.sections.size() == 3);
    CHECK(outline.sections[0].title == "Greeting");
    CHECK(outline.sections[0].goal == "build rapport");
    CHECK(outline.sections[0].target_turns == 4);
    CHECK(outline.sections[1].target_turns == 10);
    CHECK(outline.sections[1].title == "As-Is");
    CHECK(outline.sections[2].ordinal == 2);
}

TEST_CASE("parse_outline: too few numbered lines") {
    try {
        parse_outline("1. Only — one (turns: 4)\n2. Two — two (turns: 4)\n", {});
        FAIL("expected OutlineParseFailed");
    } catch (const ChainError& e) {
        CHECK(e.code() == ChainErrorCode::OutlineParseFailed);
    }
    CHECK_THROWS_AS(parse_outline("no numbering at all", {}), ChainError);
}

TEST_CASE("parse_outline: missing turns annotation falls back to the default") {
    OutlineLimits limits;
    limits.default_target_turns = 7;
    Outline outline = parse_outline(
        "1. Greeting — hello (turns: 3)\n2. Body — middle\n3. Closing — bye (turns: 3)\n",
        limits);
    CHECK(outline.sections[1].target_turns == 7);
}

TEST_CASE("parse_outline: tolerant numbering, separators and chatter lines") {
    Outline outline = parse_outline(
        "Here is the plan you asked for:\n"
        "1) Greeting - say hello (turns: 2)\n"
        "2. Middle: the body (turns: 1)\n"
        "3. End — wrap up\n"
        "Let me know if you need changes.\n",
        {});
    REQUIRE(outline.sections.size() == 3);
    CHECK(outline.sections[0].title == "Greeting");
    CHECK(outline.sections[1].title == "Middle");
    CHECK(outline.sections[1].goal == "the body");
    CHECK(outline.sections[1].target_turns == 2);  // floor of two turns per section
    CHECK(outline.sections[2].goal == "wrap up");
}

TEST_CASE("parse_outline: rejects more sections than the cap") {
    OutlineLimits limits;
    limits.max_sections = 4;
    std::string text;
    for (int i = 1; i <= 5; ++i) {
        text += std::to_string(i) + ". Section — goal (turns: 2)\n";
    }
    CHECK_THROWS_AS(parse_outline(text, limits), ChainError);
}

TEST_CASE("render_template replaces known placeholders and keeps unknown ones") {
    std::string out = render_template("a {x} b {y} c {unset}", {{"x", "1"}, {"y", "2"}});
    CHECK(out == "a 1 b 2 c {unset}");
}

TEST_CASE("concatenate: renumbers turns across sections") {
    Outline outline;
    outline.scenario = "Meeting Scheduler System!";
    outline.sections = {{0, "A", "", 4}, {1, "B", "", 10}, {2, "C", "", 4}};
    std::vector<std::vector<Turn>> sections(3);
    std::mt19937 rng(9);
    for (int s = 0; s < 3; ++s) {
        const int count = outline.sections[static_cast<size_t>(s)].target_turns;
        for (int t = 0; t < count; ++t) {
            sections[static_cast<size_t>(s)].push_back(
                {t, t % 2 ? Speaker::Stakeholder : Speaker::Interviewer,
                 elicit::test::random_turn_text(rng)});
        }
    }
    Script script = concatenate(outline, sections);
    CHECK(script.turns.size() == 18);
    CHECK(script.id == "meeting-scheduler-system");
    for (size_t i = 0; i < script.turns.size(); ++i) {
        CHECK(script.turns[i].index == static_cast<int>(i));
    }
    // Text and speakers preserved in order.
    size_t at = 0;
    for (const auto& section : sections) {
        for (const auto& turn : section) {
            CHECK(script.turns[at].text == turn.text);
            CHECK(script.turns[at].speaker == turn.speaker);
            ++at;
        }
    }
}

TEST_CASE("concatenate: section count mismatch") {
    Outline outline;
    outline.sections = {{0, "A", "", 2}, {1, "B", "", 2}, {2, "C", "", 2}};
    try {
        concatenate(outline, {});
        FAIL("expected SectionCountMismatch");
    } catch (const ChainError& e) {
        CHECK(e.code() == ChainErrorCode::SectionCountMismatch);
    }
}

TEST_CASE("generate_outline: canned reply becomes an outline, one backend call") {
    SequenceBackend backend({reply(
        "1. Greeting — hi (turns: 2)\n2. Features — what (turns: 4)\n"
        "3. Constraints — limits (turns: 4)\n4. Timeline — when (turns: 2)\n"
        "5. Closing — bye (turns: 2)\n")});
    ChainRunner runner(test_config(), tiny_knowledge(), backend, repo_templates(), {},
                       fixed_clock());
    ChainLog log;
    Outline outline = runner.generate_outline(log);
    REQUIRE(outline.sections.size() == 5);
    CHECK(outline.sections[3].title == "Timeline");
    CHECK(outline.scenario == "meeting scheduler system");
    CHECK(log.backend_calls() == 1);
    // The outline prompt carries the scenario and retrieved guidance.
    CHECK(backend.requests[0].user_prompt.find("meeting scheduler system") != std::string::npos);
    CHECK(backend.requests[0].system_context.find("clear questions") != std::string::npos);
}

TEST_CASE("generate_outline: prose reply fails after repair retries") {
    SequenceBackend backend({reply("The interview should flow nicely from start to end.")});
    GenerationConfig config = test_config();
    config.parse_retries = 2;
    ChainRunner runner(config, tiny_knowledge(), backend, repo_templates(), {}, fixed_clock());
    ChainLog log;
    try {
        runner.generate_outline(log);
        FAIL("expected OutlineParseFailed");
    } catch (const ChainError& e) {
        CHECK(e.code() == ChainErrorCode::OutlineParseFailed);
    }
    CHECK(log.backend_calls() == 3);  // primary + two repairs
}

TEST_CASE("generate_outline: repair prompt carries the malformed reply") {
    SequenceBackend backend({reply("not an outline"), reply(kGoodOutline)});
    ChainRunner runner(test_config(), tiny_knowledge(), backend, repo_templates(), {},
                       fixed_clock());
    ChainLog log;
    Outline outline = runner.generate_outline(log);
    CHECK(outline.sections.size() == 3);
    CHECK(log.backend_calls() == 2);
    REQUIRE(backend.requests.size() == 2);
    CHECK(backend.requests[1].user_prompt.find("not an outline") != std::string::npos);
    CHECK(backend.requests[1].user_prompt.find("could not be parsed") != std::string::npos);
}

TEST_CASE("generate_section: tagged turns parse with correct speakers") {
    SequenceBackend backend(
        {reply("Interviewer: What do you need?\nStakeholder: Faster scheduling.\n")});
    ChainRunner runner(test_config(), tiny_knowledge(), backend, repo_templates(), {},
                       fixed_clock());
    ChainState state;
    state.outline = parse_outline(kGoodOutline, {});
    state.outline.scenario = "meeting scheduler system";
    ChainLog log;
    auto turns = runner.generate_section(state, state.outline.sections[1], log);
    REQUIRE(turns.size() == 2);
    CHECK(turns[0].speaker == Speaker::Interviewer);
    CHECK(turns[1].speaker == Speaker::Stakeholder);
    CHECK(turns[1].text == "Faster scheduling.");
}

TEST_CASE("generate_section: untagged prose fails after retries") {
    SequenceBackend backend({reply("Some prose without any speaker tags at all.")});
    GenerationConfig config = test_config();
    config.parse_retries = 2;
    ChainRunner runner(config, tiny_knowledge(), backend, repo_templates(), {}, fixed_clock());
    ChainState state;
    state.outline = parse_outline(kGoodOutline, {});
    ChainLog log;
    try {
        runner.generate_section(state, state.outline.sections[0], log);
        FAIL("expected SectionParseFailed");
    } catch (const ChainError& e) {
        CHECK(e.code() == ChainErrorCode::SectionParseFailed);
    }
    CHECK(log.backend_calls() == 3);
}

TEST_CASE("generate_section: one malformed reply, repaired on retry") {
    SequenceBackend backend({
        reply("Sorry, here is the dialogue you asked for, roughly."),
        reply("Interviewer: Better now?\nStakeholder: Yes, much better.\n"),
    });
    ChainRunner runner(test_config(), tiny_knowledge(), backend, repo_templates(), {},
                       fixed_clock());
    ChainState state;
    state.outline = parse_outline(kGoodOutline, {});
    ChainLog log;
    auto turns = runner.generate_section(state, state.outline.sections[1], log);
    REQUIRE(turns.size() == 2);
    CHECK(turns[0].text == "Better now?");
    CHECK(log.backend_calls() == 2);
    REQUIRE(backend.requests.size() == 2);
    // The repair prompt quotes the malformed reply.
    CHECK(backend.requests[1].user_prompt.find("roughly") != std::string::npos);
}

TEST_CASE("generate_section: empty reply reports EmptySection") {
    SequenceBackend backend({reply("   \n")});
    GenerationConfig config = test_config();
    config.parse_retries = 1;
    ChainRunner runner(config, tiny_knowledge(), backend, repo_templates(), {}, fixed_clock());
    ChainState state;
    state.outline = parse_outline(kGoodOutline, {});
    ChainLog log;
    try {
        runner.generate_section(state, state.outline.sections[0], log);
        FAIL("expected EmptySection");
    } catch (const ChainError& e) {
        CHECK(e.code() == ChainErrorCode::EmptySection);
    }
}

TEST_CASE("generate_section: prompt carries the k-turn tail and the extras") {
    GenerationConfig config = test_config();
    config.carry_over_turns = 4;
    SequenceBackend backend({reply("Interviewer: Ok?\nStakeholder: Yes.\n")});
    ChainRunner runner(config, tiny_knowledge(), backend, repo_templates(), {}, fixed_clock());

    ChainState state;
    state.outline = parse_outline(kGoodOutline, {});
    std::vector<Turn> first_section;
    for (int i = 0; i < 6; ++i) {
        first_section.push_back({i, i % 2 ? Speaker::Stakeholder : Speaker::Interviewer,
                                 "Turn number " + std::to_string(i) + " text."});
    }
    state.completed_sections.push_back(first_section);
    state.transcript_tail.assign(first_section.begin() + 2, first_section.end());

    ChainLog log;
    runner.generate_section(state, state.outline.sections[1], log);
    REQUIRE(backend.requests.size() == 1);
    const std::string& prompt = backend.requests[0].user_prompt;
    for (int i = 2; i < 6; ++i) {
        CHECK(prompt.find("Turn number " + std::to_string(i) + " text.") != std::string::npos);
    }
    CHECK(prompt.find("Turn number 0 text.") == std::string::npos);
    CHECK(prompt.find("Turn number 1 text.") == std::string::npos);

    // First/last sections ask for greeting and summary-plus-approval.
    SequenceBackend first_backend({reply("Interviewer: Hello?\nStakeholder: Hi.\n")});
    ChainRunner first_runner(config, tiny_knowledge(), first_backend, repo_templates(), {},
                             fixed_clock());
    ChainState fresh;
    fresh.outline = parse_outline(kGoodOutline, {});
    first_runner.generate_section(fresh, fresh.outline.sections[0], log);
    CHECK(first_backend.requests[0].user_prompt.find("greeting") != std::string::npos);

    SequenceBackend last_backend({reply("Interviewer: Bye?\nStakeholder: Bye.\n")});
    ChainRunner last_runner(config, tiny_knowledge(), last_backend, repo_templates(), {},
                            fixed_clock());
    last_runner.generate_section(fresh, fresh.outline.sections[2], log);
    CHECK(last_backend.requests[0].user_prompt.find("summarize") != std::string::npos);
    CHECK(last_backend.requests[0].user_prompt.find("confirm") != std::string::npos);
}

TEST_CASE("run: full chain over a scripted backend") {
    auto make_backend = [] {
        return SequenceBackend({
            reply(kGoodOutline),
            reply("Interviewer: Hello there!\nStakeholder: Hi, thanks for having me.\n"),
            reply("Interviewer: How does it work today?\nStakeholder: Manually, mostly.\n"),
            reply("Interviewer: To summarize, ok?\nStakeholder: Yes, all good.\n"),
        });
    };

    SequenceBackend backend = make_backend();
    ChainRunner runner(test_config(), tiny_knowledge(), backend, repo_templates(), {},
                       fixed_clock());
    ChainLog log;
    Script script = runner.run(log);
    CHECK(script.turns.size() == 6);
    CHECK(script.id == "meeting-scheduler-system");
    CHECK(log.backend_calls() == 4);  // outline + three sections

    // Determinism: an identical backend and config reproduce bytes.
    SequenceBackend backend2 = make_backend();
    ChainRunner runner2(test_config(), tiny_knowledge(), backend2, repo_templates(), {},
                        fixed_clock());
    ChainLog log2;
    Script script2 = runner2.run(log2);
    CHECK(serialize_script(script, ScriptFormat::Plain) ==
          serialize_script(script2, ScriptFormat::Plain));
    CHECK(log.to_jsonl() == log2.to_jsonl());

    // Sequential dependency: each section prompt contains the previous
    // section's final turn text.
    CHECK(backend.requests[2].user_prompt.find("Hi, thanks for having me.") !=
          std::string::npos);
    CHECK(backend.requests[3].user_prompt.find("Manually, mostly.") != std::string::npos);
}

TEST_CASE("run: failure on section 2 keeps the partial log") {
    SequenceBackend backend({
        reply(kGoodOutline),
        reply("Interviewer: Hello there!\nStakeholder: Hi.\n"),
        backend_failure("boom"),
    });
    GenerationConfig config = test_config();
    config.backend_attempts = 2;
    ChainRunner runner(config, tiny_knowledge(), backend, repo_templates(), {}, fixed_clock());
    ChainLog log;
    try {
        runner.run(log);
        FAIL("expected BackendError");
    } catch (const ChainError& e) {
        CHECK(e.code() == ChainErrorCode::BackendError);
    }
    // outline + section 1 + two failed attempts at section 2
    CHECK(log.backend_calls() == 4);
    CHECK(log.records[0].response.text.find("Greeting") != std::string::npos);
    CHECK(log.records[1].response.text.find("Hello there!") != std::string::npos);
    CHECK(log.records[3].response.finish_reason == FinishReason::BackendError);
}

TEST_CASE("run: six-section outline costs exactly 1 + 6 calls") {
    std::string outline;
    for (int i = 1; i <= 6; ++i) {
        outline += std::to_string(i) + ". Part — segment " + std::to_string(i) + " (turns: 2)\n";
    }
    std::vector<CompletionResponse> replies = {reply(outline)};
    for (int i = 0; i < 6; ++i) {
        replies.push_back(reply("Interviewer: Question " + std::to_string(i) +
                                "?\nStakeholder: Answer " + std::to_string(i) + ".\n"));
    }
    SequenceBackend backend(replies);
    ChainRunner runner(test_config(), tiny_knowledge(), backend, repo_templates(), {},
                       fixed_clock());
    ChainLog log;
    Script script = runner.run(log);
    CHECK(script.turns.size() == 12);
    CHECK(log.backend_calls() == 1 + 6);
}

TEST_CASE("ChainLog: one JSON object per line") {
    ChainLog log;
    CompletionRequest request;
    request.system_context = "sys";
    request.user_prompt = "user";
    log.records.push_back({0, request, reply("hello"), 1234});
    log.records.push_back({1, request, backend_failure("nope"), 1235});
    std::string jsonl = log.to_jsonl();
    std::istringstream lines(jsonl);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        nlohmann::json doc = nlohmann::json::parse(line);
        CHECK(doc["ordinal"] == count);
        CHECK(doc.contains("request"));
        CHECK(doc.contains("response"));
        CHECK(doc.contains("timestamp"));
        ++count;
    }
    CHECK(count == 2);
}

TEST_CASE("request_fingerprint: stable and content-sensitive") {
    CompletionRequest a;
    a.system_context = "sys";
    a.user_prompt = "user";
    CompletionRequest b = a;
    CHECK(request_fingerprint(a) == request_fingerprint(b));
    CHECK(request_fingerprint(a).size() == 16);
    b.user_prompt = "different";
    CHECK(request_fingerprint(a) != request_fingerprint(b));
    b = a;
    b.temperature = 0.1;
    CHECK(request_fingerprint(a) != request_fingerprint(b));
}

TEST_CASE("StubBackend: deterministic, well-formed replies") {
    StubBackend stub;
    ChainRunner runner(test_config(), tiny_knowledge(), stub, repo_templates(), {},
                       fixed_clock());
    ChainLog log;
    Script script = runner.run(log);
    CHECK(script.turns.size() >= 10);
    CHECK(log.backend_calls() == 6);  // 5 stub sections + outline

    ChainRunner runner2(test_config(), tiny_knowledge(), stub, repo_templates(), {},
                        fixed_clock());
    ChainLog log2;
    Script script2 = runner2.run(log2);
    CHECK(script == script2);
    CHECK(log.to_jsonl() == log2.to_jsonl());
}

TEST_CASE("RecordingBackend + ReplayBackend: record once, replay forever") {
    elicit::test::TempDir dir("fixtures");
    StubBackend stub;
    {
        RecordingBackend recorder(stub, dir.path());
        ChainRunner runner(test_config(), tiny_knowledge(), recorder, repo_templates(), {},
                           fixed_clock());
        ChainLog log;
        runner.run(log);
    }

    ReplayBackend replay(dir.path());
    ChainRunner runner(test_config(), tiny_knowledge(), replay, repo_templates(), {},
                       fixed_clock());
    ChainLog log;
    Script script = runner.run(log);

    StubBackend fresh;
    ChainRunner direct_runner(test_config(), tiny_knowledge(), fresh, repo_templates(), {},
                              fixed_clock());
    ChainLog direct_log;
    Script direct = direct_runner.run(direct_log);
    CHECK(script == direct);
}

TEST_CASE("ReplayBackend: missing fixture names the fingerprint") {
    elicit::test::TempDir dir("fixtures-empty");
    ReplayBackend replay(dir.path());
    CompletionRequest request;
    request.user_prompt = "anything";
    CompletionResponse response = replay.complete(request);
    CHECK(response.finish_reason == FinishReason::BackendError);
    CHECK(response.error.find(request_fingerprint(request)) != std::string::npos);
}
