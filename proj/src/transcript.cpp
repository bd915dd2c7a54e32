#include "elicit/transcript.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <sstream>

namespace elicit {

namespace {

// Minimal UTF-8 cursor. Invalid bytes fall back to their Latin-1 value so the
// text functions stay total on arbitrary input.
std::uint32_t decode_utf8(std::string_view text, size_t& pos) {
    unsigned char first = static_cast<unsigned char>(text[pos]);
    if (first < 0x80) {
        pos += 1;
        return first;
    }
    size_t extra = (first & 0xF8) == 0xF0 ? 3 : (first & 0xF0) == 0xE0 ? 2
                 : (first & 0xE0) == 0xC0 ? 1 : 0;
    if (extra == 0 || pos + extra >= text.size()) {
        pos += 1;
        return first;
    }
    std::uint32_t cp = first & (0x7Fu >> (extra + 1));
    for (size_t i = 1; i <= extra; ++i) {
        unsigned char b = static_cast<unsigned char>(text[pos + i]);
        if ((b & 0xC0) != 0x80) {
            pos += 1;
            return first;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    pos += extra + 1;
    return cp;
}

bool is_space_cp(std::uint32_t cp) {
    switch (cp) {
        case ' ': case '\t': case '\n': case '\r': case '\f': case '\v':
        case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200B;
    }
}

bool is_ascii_alnum(std::uint32_t cp) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

// Codepoints stripped from token edges: all ASCII punctuation plus the common
// Unicode quotes, dashes, ellipsis and guillemets. Other non-ASCII codepoints
// (accented letters, CJK) count as word characters.
bool is_strippable_cp(std::uint32_t cp) {
    if (cp < 0x80) return !is_ascii_alnum(cp);
    switch (cp) {
        case 0x2018: case 0x2019: case 0x201A: case 0x201B:
        case 0x201C: case 0x201D: case 0x201E: case 0x201F:
        case 0x2013: case 0x2014: case 0x2026: case 0x00AB: case 0x00BB:
        case 0x00A1: case 0x00BF: case 0x2039: case 0x203A:
            return true;
        default:
            return false;
    }
}

std::string trim(std::string_view text) {
    size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

struct TagLine {
    std::string label;
    std::string rest;
};

// A candidate speaker tag is a single alphabetic word (at most 24 chars)
// followed by ':', with optional surrounding whitespace.
bool match_tag(std::string_view line, TagLine& out) {
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t start = i;
    while (i < line.size() && std::isalpha(static_cast<unsigned char>(line[i]))) ++i;
    if (i == start || i - start > 24) return false;
    size_t label_end = i;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] != ':') return false;
    out.label = std::string(line.substr(start, label_end - start));
    out.rest = trim(line.substr(i + 1));
    return true;
}

std::string lowercase_ascii(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Collapses newlines (and surrounding spaces) to single spaces, then trims.
std::string canonical_turn_text(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    for (char c : raw) {
        if (c == '\n' || c == '\r') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space && c != ' ' && c != '\t') {
            out += ' ';
            pending_space = false;
        } else if (pending_space) {
            continue;
        }
        out += c;
    }
    return trim(out);
}

Script parse_plain(const std::string& raw) {
    Script script;
    bool in_turn = false;
    Speaker current = Speaker::Interviewer;
    std::vector<std::string> parts;
    int tag_line = 0;

    auto finalize = [&]() {
        std::string text;
        for (const auto& part : parts) {
            if (part.empty()) continue;
            if (!text.empty()) text += ' ';
            text += part;
        }
        if (text.empty()) {
            throw ParseError(ParseErrorCode::EmptyUtterance,
                             "speaker tag at line " + std::to_string(tag_line) +
                                 " has no utterance text",
                             tag_line);
        }
        Turn turn;
        turn.index = static_cast<int>(script.turns.size());
        turn.speaker = current;
        turn.text = std::move(text);
        script.turns.push_back(std::move(turn));
        parts.clear();
    };

    std::istringstream lines(raw);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        TagLine tag;
        if (match_tag(line, tag)) {
            Speaker speaker;
            if (!speaker_from_label(tag.label, speaker)) {
                throw ParseError(ParseErrorCode::UnknownSpeaker,
                                 "unknown speaker tag '" + tag.label + "' at line " +
                                     std::to_string(line_no),
                                 line_no);
            }
            if (in_turn) finalize();
            in_turn = true;
            current = speaker;
            tag_line = line_no;
            parts.clear();
            if (!tag.rest.empty()) parts.push_back(tag.rest);
            continue;
        }
        if (!in_turn) continue;  // untagged preamble
        std::string piece = trim(line);
        if (!piece.empty()) parts.push_back(std::move(piece));
    }
    if (in_turn) finalize();

    if (script.turns.empty()) {
        throw ParseError(ParseErrorCode::NoTurnsFound, "no speaker tags found in input");
    }
    return script;
}

Script parse_structured(const std::string& raw) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseErrorCode::BadDocument,
                         std::string("structured script is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("turns") || !doc["turns"].is_array()) {
        throw ParseError(ParseErrorCode::BadDocument,
                         "structured script must be an object with a turns array");
    }
    Script script;
    script.id = doc.value("id", "");
    script.title = doc.value("title", "");
    script.domain_label = doc.value("domain_label", "");
    for (const auto& entry : doc["turns"]) {
        if (!entry.is_object() || !entry.contains("speaker") || !entry.contains("text")) {
            throw ParseError(ParseErrorCode::BadDocument,
                             "every turn needs speaker and text fields");
        }
        Speaker speaker;
        const std::string label = entry["speaker"].get<std::string>();
        if (!speaker_from_label(label, speaker)) {
            throw ParseError(ParseErrorCode::UnknownSpeaker,
                             "unknown speaker '" + label + "' in structured script");
        }
        std::string text = canonical_turn_text(entry["text"].get<std::string>());
        if (text.empty()) {
            throw ParseError(ParseErrorCode::EmptyUtterance,
                             "turn " + std::to_string(script.turns.size()) + " has empty text");
        }
        Turn turn;
        turn.index = static_cast<int>(script.turns.size());
        turn.speaker = speaker;
        turn.text = std::move(text);
        script.turns.push_back(std::move(turn));
    }
    if (script.turns.empty()) {
        throw ParseError(ParseErrorCode::NoTurnsFound, "structured script has no turns");
    }
    return script;
}

}  // namespace

std::string to_string(Speaker speaker) {
    return speaker == Speaker::Interviewer ? "Interviewer" : "Stakeholder";
}

bool speaker_from_label(std::string_view label, Speaker& out) {
    std::string lower = lowercase_ascii(label);
    if (lower == "interviewer") {
        out = Speaker::Interviewer;
        return true;
    }
    if (lower == "stakeholder") {
        out = Speaker::Stakeholder;
        return true;
    }
    return false;
}

void validate_script(const Script& script) {
    if (script.turns.empty()) {
        throw ParseError(ParseErrorCode::InvalidScript, "script has no turns");
    }
    for (size_t i = 0; i < script.turns.size(); ++i) {
        const Turn& turn = script.turns[i];
        if (turn.index != static_cast<int>(i)) {
            throw ParseError(ParseErrorCode::InvalidScript,
                             "turn indices must be contiguous from 0; found " +
                                 std::to_string(turn.index) + " at position " +
                                 std::to_string(i));
        }
        if (turn.text.empty() || trim(turn.text) != turn.text ||
            turn.text.find('\n') != std::string::npos) {
            throw ParseError(ParseErrorCode::InvalidScript,
                             "turn " + std::to_string(i) +
                                 " text must be nonempty, trimmed and newline-free");
        }
    }
}

Script parse_script(const std::string& raw, ScriptFormat format) {
    Script script =
        format == ScriptFormat::Plain ? parse_plain(raw) : parse_structured(raw);
    validate_script(script);
    return script;
}

std::string serialize_script(const Script& script, ScriptFormat format) {
    validate_script(script);
    if (format == ScriptFormat::Plain) {
        std::ostringstream out;
        for (const Turn& turn : script.turns) {
            out << to_string(turn.speaker) << ": " << turn.text << '\n';
        }
        return out.str();
    }
    nlohmann::json doc;
    doc["id"] = script.id;
    doc["title"] = script.title;
    doc["domain_label"] = script.domain_label;
    doc["turns"] = nlohmann::json::array();
    for (const Turn& turn : script.turns) {
        doc["turns"].push_back({{"speaker", to_string(turn.speaker)}, {"text", turn.text}});
    }
    return doc.dump(2) + "\n";
}

std::string normalize_transcript(const std::string& raw,
                                 const std::map<std::string, Speaker>& aliases,
                                 bool strip_headers) {
    std::map<std::string, Speaker> lower_aliases;
    for (const auto& [label, speaker] : aliases) {
        lower_aliases[lowercase_ascii(label)] = speaker;
    }

    auto is_header = [](const std::string& line) {
        std::string t = trim(line);
        if (t.empty()) return false;
        char first = t.front();
        if (first == '#' || first == '[' || first == '=' || first == '-' || first == '*' ||
            first == '_') {
            return true;
        }
        // ALL-CAPS decorative lines (no lowercase letters anywhere).
        bool has_alpha = false;
        for (char c : t) {
            if (std::islower(static_cast<unsigned char>(c))) return false;
            if (std::isalpha(static_cast<unsigned char>(c))) has_alpha = true;
        }
        return has_alpha;
    };

    std::ostringstream out;
    std::istringstream lines(raw);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        TagLine tag;
        if (match_tag(line, tag)) {
            auto it = lower_aliases.find(lowercase_ascii(tag.label));
            if (it != lower_aliases.end()) {
                out << to_string(it->second) << ": " << tag.rest << '\n';
                continue;
            }
            Speaker canonical;
            if (speaker_from_label(tag.label, canonical)) {
                out << to_string(canonical) << ": " << tag.rest << '\n';
                continue;
            }
        }
        if (strip_headers && is_header(line)) continue;
        out << line << '\n';
    }
    return out.str();
}

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> tokens;
    size_t pos = 0;
    while (pos < text.size()) {
        // skip whitespace
        size_t probe = pos;
        std::uint32_t cp = decode_utf8(text, probe);
        if (is_space_cp(cp)) {
            pos = probe;
            continue;
        }
        // collect a whitespace-delimited piece as codepoint spans
        std::vector<std::pair<size_t, size_t>> spans;  // byte offset, length
        std::vector<std::uint32_t> cps;
        while (pos < text.size()) {
            size_t start = pos;
            cp = decode_utf8(text, pos);
            if (is_space_cp(cp)) break;
            spans.emplace_back(start, pos - start);
            cps.push_back(cp);
        }
        // strip leading/trailing strippable codepoints
        size_t begin = 0, end = cps.size();
        while (begin < end && is_strippable_cp(cps[begin])) ++begin;
        while (end > begin && is_strippable_cp(cps[end - 1])) --end;
        if (begin == end) continue;
        std::string token;
        for (size_t i = begin; i < end; ++i) {
            if (cps[i] >= 'A' && cps[i] <= 'Z') {
                token += static_cast<char>(cps[i] - 'A' + 'a');
            } else {
                token.append(text.substr(spans[i].first, spans[i].second));
            }
        }
        tokens.push_back(std::move(token));
    }
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    size_t start = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        bool at_end = i + 1 >= text.size();
        bool before_space = false;
        if (!at_end) {
            size_t probe = i + 1;
            before_space = is_space_cp(decode_utf8(text, probe));
        }
        if (at_end || before_space) {
            std::string piece = trim(text.substr(start, i + 1 - start));
            if (!piece.empty()) sentences.push_back(std::move(piece));
            start = i + 1;
        }
    }
    if (start < text.size()) {
        std::string piece = trim(text.substr(start));
        if (!piece.empty()) sentences.push_back(std::move(piece));
    }
    return sentences;
}

DialogueAct classify_turn(const Turn& turn) {
    return turn.text.find('?') != std::string::npos ? DialogueAct::Question
                                                    : DialogueAct::NonQuestion;
}

}  // namespace elicit
