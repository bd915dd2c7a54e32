#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace elicit {

// Interview scripts are strictly two-party: the analyst and the interviewee.
enum class Speaker { Interviewer, Stakeholder };

std::string to_string(Speaker speaker);

// Matches "interviewer"/"stakeholder" case-insensitively. Returns false for
// any other label.
bool speaker_from_label(std::string_view label, Speaker& out);

enum class DialogueAct { Question, NonQuestion };

// One uninterrupted utterance. Canonical turn text is trimmed, nonempty, and
// newline-free (multi-line raw input is joined at parse time).
struct Turn {
    int index = 0;
    Speaker speaker = Speaker::Interviewer;
    std::string text;

    bool operator==(const Turn&) const = default;
};

struct Script {
    std::string id;
    std::string title;
    std::string domain_label;
    std::vector<Turn> turns;

    bool operator==(const Script&) const = default;
};

enum class ScriptFormat { Plain, Structured };

enum class ParseErrorCode {
    NoTurnsFound,
    UnknownSpeaker,
    EmptyUtterance,
    InvalidScript,
    BadDocument,  // structured input is not a well-formed document
};

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorCode code, const std::string& message, int line = 0)
        : std::runtime_error(message), code_(code), line_(line) {}

    ParseErrorCode code() const { return code_; }
    int line() const { return line_; }  // 1-based; 0 when not tied to a line

private:
    ParseErrorCode code_;
    int line_;
};

// Throws ParseError(InvalidScript) unless: at least one turn, contiguous
// 0-based indices, and every turn text canonical (trimmed, nonempty, no '\n').
void validate_script(const Script& script);

// Plain format: turns start at lines of the form `Speaker:` where Speaker is a
// single alphabetic word; "Interviewer"/"Stakeholder" match case-insensitively
// and any other tag raises UnknownSpeaker. Lines until the next tag continue
// the current turn and are joined with single spaces (blank lines collapse).
// Untagged lines before the first tag are ignored.
// Structured format: one JSON document {id, title, domain_label,
// turns: [{speaker, text}]}.
Script parse_script(const std::string& raw, ScriptFormat format);

// Round-trips through parse_script: plain preserves speaker/text/order,
// structured additionally preserves id/title/domain_label.
std::string serialize_script(const Script& script, ScriptFormat format);

// Pre-pass for third-party transcripts: rewrites aliased speaker tags to the
// canonical roles and, when strip_headers is set, drops decorative lines
// (markdown headings, ===/--- rules, [bracketed] or ALL-CAPS header lines).
std::string normalize_transcript(const std::string& raw,
                                 const std::map<std::string, Speaker>& aliases,
                                 bool strip_headers = false);

// Lowercases, splits on whitespace, strips leading/trailing punctuation from
// each piece, drops empties. Internal apostrophes and hyphens survive, so
// "don't" and "to-be" are single tokens.
std::vector<std::string> tokenize_words(std::string_view text);

// Splits after '.', '!' or '?' when followed by whitespace or end-of-text.
// Abbreviations are not special-cased, so "e.g. this" splits after "e.g.".
std::vector<std::string> split_sentences(std::string_view text);

// Question iff the turn text contains at least one '?'.
DialogueAct classify_turn(const Turn& turn);

}  // namespace elicit
