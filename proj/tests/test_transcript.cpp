#include "elicit/transcript.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <random>

using namespace elicit;

TEST_CASE("parse_script plain: minimal two-turn exchange") {
    Script s = parse_script("Interviewer: Hello!\nStakeholder: Hi.", ScriptFormat::Plain);
    REQUIRE(s.turns.size() == 2);
    CHECK(s.turns[0].speaker == Speaker::Interviewer);
    CHECK(s.turns[0].text == "Hello!");
    CHECK(s.turns[0].index == 0);
    CHECK(s.turns[1].speaker == Speaker::Stakeholder);
    CHECK(s.turns[1].text == "Hi.");
    CHECK(s.turns[1].index == 1);
}

TEST_CASE("parse_script plain: continuation lines join with single spaces") {
    Script s = parse_script("Interviewer: Hello!\nHow are you?\nStakeholder: Fine.",
                            ScriptFormat::Plain);
    REQUIRE(s.turns.size() == 2);
    CHECK(s.turns[0].text == "Hello! How are you?");
}

TEST_CASE("parse_script plain: blank lines inside a turn collapse") {
    Script s = parse_script("Interviewer: One.\n\nTwo.\nStakeholder: Ok.", ScriptFormat::Plain);
    REQUIRE(s.turns.size() == 2);
    CHECK(s.turns[0].text == "One. Two.");
}

TEST_CASE("parse_script plain: tags are case-insensitive with loose spacing") {
    Script s = parse_script("  interviewer :  Anything else?\nSTAKEHOLDER: No.",
                            ScriptFormat::Plain);
    REQUIRE(s.turns.size() == 2);
    CHECK(s.turns[0].speaker == Speaker::Interviewer);
    CHECK(s.turns[0].text == "Anything else?");
    CHECK(s.turns[1].speaker == Speaker::Stakeholder);
}

TEST_CASE("parse_script plain: unknown speaker tag") {
    CHECK_THROWS_WITH_AS(parse_script("Moderator: Hi", ScriptFormat::Plain),
                         doctest::Contains("Moderator"), ParseError);
    try {
        parse_script("Moderator: Hi", ScriptFormat::Plain);
    } catch (const ParseError& e) {
        CHECK(e.code() == ParseErrorCode::UnknownSpeaker);
        CHECK(e.line() == 1);
    }
}

TEST_CASE("parse_script plain: no speaker tags at all") {
    try {
        parse_script("Just some prose without any tags.", ScriptFormat::Plain);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.code() == ParseErrorCode::NoTurnsFound);
    }
}

TEST_CASE("parse_script plain: tag with no utterance") {
    try {
        parse_script("Interviewer:\nStakeholder: Hi.", ScriptFormat::Plain);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.code() == ParseErrorCode::EmptyUtterance);
    }
    // Same at end of input.
    CHECK_THROWS_AS(parse_script("Interviewer: Hi.\nStakeholder:   ", ScriptFormat::Plain),
                    ParseError);
}

TEST_CASE("parse_script plain: untagged preamble is ignored") {
    Script s = parse_script("Transcript of the first session\n\nInterviewer: Hello.\nStakeholder: Hi.",
                            ScriptFormat::Plain);
    REQUIRE(s.turns.size() == 2);
    CHECK(s.turns[0].text == "Hello.");
}

TEST_CASE("parse_script structured: full document") {
    const char* doc = R"({
        "id": "s1", "title": "Meeting scheduler", "domain_label": "scheduling",
        "turns": [
            {"speaker": "Interviewer", "text": "Hello!"},
            {"speaker": "Stakeholder", "text": "Hi."}
        ]
    })";
    Script s = parse_script(doc, ScriptFormat::Structured);
    CHECK(s.id == "s1");
    CHECK(s.title == "Meeting scheduler");
    CHECK(s.domain_label == "scheduling");
    REQUIRE(s.turns.size() == 2);
    CHECK(s.turns[1].speaker == Speaker::Stakeholder);
}

TEST_CASE("parse_script structured: error paths") {
    try {
        parse_script(R"({"id":"x","title":"","domain_label":"","turns":[]})",
                     ScriptFormat::Structured);
        FAIL("expected NoTurnsFound");
    } catch (const ParseError& e) {
        CHECK(e.code() == ParseErrorCode::NoTurnsFound);
    }
    try {
        parse_script(R"({"turns":[{"speaker":"Moderator","text":"hi"}]})",
                     ScriptFormat::Structured);
        FAIL("expected UnknownSpeaker");
    } catch (const ParseError& e) {
        CHECK(e.code() == ParseErrorCode::UnknownSpeaker);
    }
    try {
        parse_script(R"({"turns":[{"speaker":"Interviewer","text":"  "}]})",
                     ScriptFormat::Structured);
        FAIL("expected EmptyUtterance");
    } catch (const ParseError& e) {
        CHECK(e.code() == ParseErrorCode::EmptyUtterance);
    }
    try {
        parse_script("not json at all {", ScriptFormat::Structured);
        FAIL("expected BadDocument");
    } catch (const ParseError& e) {
        CHECK(e.code() == ParseErrorCode::BadDocument);
    }
}

TEST_CASE("serialize_script plain: golden output") {
    Script s;
    s.turns = {{0, Speaker::Interviewer, "Hello!"}, {1, Speaker::Stakeholder, "Hi."}};
    CHECK(serialize_script(s, ScriptFormat::Plain) == "Interviewer: Hello!\nStakeholder: Hi.\n");
}

TEST_CASE("serialize/parse round trip on a minimal two-turn exchange") {
    Script s;
    s.turns = {{0, Speaker::Interviewer, "Hello!"}, {1, Speaker::Stakeholder, "Hi."}};
    Script back = parse_script(serialize_script(s, ScriptFormat::Plain), ScriptFormat::Plain);
    CHECK(elicit::test::same_turns(s, back));
}

TEST_CASE("round trip property over random scripts, both formats") {
    std::mt19937 rng(20240221);
    for (int i = 0; i < 200; ++i) {
        Script s = elicit::test::random_script(rng);
        Script plain_back =
            parse_script(serialize_script(s, ScriptFormat::Plain), ScriptFormat::Plain);
        CHECK(elicit::test::same_turns(s, plain_back));
        Script structured_back =
            parse_script(serialize_script(s, ScriptFormat::Structured), ScriptFormat::Structured);
        CHECK(s == structured_back);
    }
}

TEST_CASE("a 114-turn script survives the round trip") {
    std::mt19937 rng(114);
    Script s;
    s.id = "sample";
    for (int i = 0; i < 114; ++i) {
        s.turns.push_back({i, i % 2 == 0 ? Speaker::Interviewer : Speaker::Stakeholder,
                           elicit::test::random_turn_text(rng)});
    }
    Script back = parse_script(serialize_script(s, ScriptFormat::Plain), ScriptFormat::Plain);
    CHECK(back.turns.size() == 114);
    CHECK(elicit::test::same_turns(s, back));
}

TEST_CASE("validate_script rejects broken invariants") {
    Script empty;
    CHECK_THROWS_AS(validate_script(empty), ParseError);

    Script bad_index;
    bad_index.turns = {{1, Speaker::Interviewer, "Hi."}};
    CHECK_THROWS_AS(validate_script(bad_index), ParseError);

    Script newline_text;
    newline_text.turns = {{0, Speaker::Interviewer, "Hi\nthere"}};
    CHECK_THROWS_AS(validate_script(newline_text), ParseError);

    Script padded;
    padded.turns = {{0, Speaker::Interviewer, " Hi "}};
    CHECK_THROWS_AS(validate_script(padded), ParseError);
}

TEST_CASE("tokenize_words: punctuation strip and casing") {
    CHECK(tokenize_words("Hello, world!") == std::vector<std::string>{"hello", "world"});
    CHECK(tokenize_words("") == std::vector<std::string>{});
    CHECK(tokenize_words("The to-be system's scope.") ==
          std::vector<std::string>{"the", "to-be", "system's", "scope"});
    CHECK(tokenize_words("don't stop") == std::vector<std::string>{"don't", "stop"});
    CHECK(tokenize_words("...") == std::vector<std::string>{});
    CHECK(tokenize_words("a  \t b\nc") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("tokenize_words: unicode punctuation strips, letters survive") {
    // Curly quotes and em-dashes strip from token edges; the curly apostrophe
    // inside a word stays, as do non-ASCII letters.
    CHECK(tokenize_words("“hello” — world…") ==
          std::vector<std::string>{"hello", "world"});
    CHECK(tokenize_words("don’t stop") == std::vector<std::string>{"don’t", "stop"});
    CHECK(tokenize_words("café ouvert") == std::vector<std::string>{"café", "ouvert"});
    CHECK(tokenize_words("a b") == std::vector<std::string>{"a", "b"});  // NBSP splits
}

TEST_CASE("tokenize_words: no empties, no uppercase (property)") {
    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i) {
        std::string text = elicit::test::random_turn_text(rng) + " MIXED Case? (brackets)";
        for (const auto& token : tokenize_words(text)) {
            CHECK(!token.empty());
            for (char c : token) CHECK(!(c >= 'A' && c <= 'Z'));
        }
    }
}

TEST_CASE("split_sentences: terminator-plus-whitespace rule") {
    CHECK(split_sentences("Hi. How are you?") == std::vector<std::string>{"Hi.", "How are you?"});
    CHECK(split_sentences("One sentence") == std::vector<std::string>{"One sentence"});
    CHECK(split_sentences("Wait... what?") == std::vector<std::string>{"Wait...", "what?"});
    CHECK(split_sentences("") == std::vector<std::string>{});
    CHECK(split_sentences("A! B? C.") == std::vector<std::string>{"A!", "B?", "C."});
}

TEST_CASE("split_sentences preserves non-whitespace characters in order (property)") {
    auto strip_ws = [](const std::string& text) {
        std::string out;
        for (char c : text)
            if (!isspace(static_cast<unsigned char>(c))) out += c;
        return out;
    };
    std::mt19937 rng(11);
    for (int i = 0; i < 200; ++i) {
        std::string text = elicit::test::random_turn_text(rng);
        std::string joined;
        for (const auto& sentence : split_sentences(text)) {
            if (!joined.empty()) joined += ' ';
            joined += sentence;
        }
        CHECK(strip_ws(joined) == strip_ws(text));
    }
}

TEST_CASE("classify_turn: contains-? rule") {
    CHECK(classify_turn({0, Speaker::Interviewer, "What features do you need?"}) ==
          DialogueAct::Question);
    CHECK(classify_turn({0, Speaker::Stakeholder, "Thank you for your time."}) ==
          DialogueAct::NonQuestion);
    CHECK(classify_turn({0, Speaker::Interviewer, "Thanks. What else should we cover?"}) ==
          DialogueAct::Question);
}

TEST_CASE("classification is total: acts partition every speaker's turns") {
    std::mt19937 rng(23);
    for (int i = 0; i < 50; ++i) {
        Script s = elicit::test::random_script(rng);
        for (Speaker who : {Speaker::Interviewer, Speaker::Stakeholder}) {
            int total = 0, q = 0, nq = 0;
            for (const auto& turn : s.turns) {
                if (turn.speaker != who) continue;
                ++total;
                (classify_turn(turn) == DialogueAct::Question ? q : nq)++;
            }
            CHECK(q + nq == total);
        }
    }
}

TEST_CASE("normalize_transcript: alias map and header stripping") {
    std::map<std::string, Speaker> aliases = {{"ANALYST", Speaker::Interviewer},
                                              {"CLIENT", Speaker::Stakeholder}};
    std::string raw =
        "### Session one\n"
        "[OPENING]\n"
        "ANALYST: Hello there.\n"
        "CLIENT: Hi.\n"
        "----\n"
        "Analyst: Anything else?\n";
    std::string normalized = normalize_transcript(raw, aliases, /*strip_headers=*/true);
    Script s = parse_script(normalized, ScriptFormat::Plain);
    REQUIRE(s.turns.size() == 3);
    CHECK(s.turns[0].speaker == Speaker::Interviewer);
    CHECK(s.turns[1].speaker == Speaker::Stakeholder);
    CHECK(s.turns[2].speaker == Speaker::Interviewer);
    CHECK(s.turns[2].text == "Anything else?");
}
