#include "elicit/rubric.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace elicit {

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Case-insensitive phrase search on word boundaries.
bool contains_phrase(const std::string& lower_text, const std::string& lower_phrase) {
    size_t at = 0;
    while ((at = lower_text.find(lower_phrase, at)) != std::string::npos) {
        const bool left_ok =
            at == 0 || !std::isalnum(static_cast<unsigned char>(lower_text[at - 1]));
        const size_t end = at + lower_phrase.size();
        const bool right_ok = end >= lower_text.size() ||
                              !std::isalnum(static_cast<unsigned char>(lower_text[end]));
        if (left_ok && right_ok) return true;
        ++at;
    }
    return false;
}

bool matches_any(const std::string& text, const std::vector<std::string>& patterns) {
    const std::string lower = lowercase(text);
    for (const auto& pattern : patterns) {
        if (contains_phrase(lower, pattern)) return true;
    }
    return false;
}

std::vector<std::string> load_pattern_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("pattern file missing: " + path.string());
    }
    std::vector<std::string> patterns;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        patterns.push_back(lowercase(line));
    }
    return patterns;
}

std::string format_score(double mean) {
    std::ostringstream out;
    if (mean == std::floor(mean)) {
        out << static_cast<int>(mean);
    } else {
        out << std::fixed << std::setprecision(1) << mean;
    }
    return out.str();
}

}  // namespace

std::string to_string(NLDimension d) {
    switch (d) {
        case NLDimension::Naturalness: return "Naturalness";
        case NLDimension::Coherence: return "Coherence";
        case NLDimension::Completeness: return "Completeness";
    }
    return "";
}

std::string to_string(RubricElement e) {
    switch (e) {
        case RubricElement::Greeting: return "Greeting";
        case RubricElement::Opening: return "Opening";
        case RubricElement::AnalyzeAsIs: return "Analyze As-Is";
        case RubricElement::DesignToBe: return "Design To-Be";
        case RubricElement::Closing: return "Closing";
        case RubricElement::ActiveListening: return "Active Listening";
    }
    return "";
}

std::string to_string(MistakeTag t) {
    switch (t) {
        case MistakeTag::InfluencingStakeholder: return "influencing_stakeholder";
        case MistakeTag::UnnaturalDialogueStyle: return "unnatural_dialogue_style";
        case MistakeTag::IgnoringOtherStakeholders: return "ignoring_other_stakeholders";
        case MistakeTag::TechnicalJargon: return "technical_jargon";
        case MistakeTag::LackOfClarity: return "lack_of_clarity";
    }
    return "";
}

std::string to_string(Severity s) { return s == Severity::Warning ? "warning" : "info"; }

std::string key_of(NLDimension d) {
    switch (d) {
        case NLDimension::Naturalness: return "naturalness";
        case NLDimension::Coherence: return "coherence";
        case NLDimension::Completeness: return "completeness";
    }
    return "";
}

std::string key_of(RubricElement e) {
    switch (e) {
        case RubricElement::Greeting: return "greeting";
        case RubricElement::Opening: return "opening";
        case RubricElement::AnalyzeAsIs: return "analyze_as_is";
        case RubricElement::DesignToBe: return "design_to_be";
        case RubricElement::Closing: return "closing";
        case RubricElement::ActiveListening: return "active_listening";
    }
    return "";
}

nlohmann::json new_evaluation_template(const Script& script, const std::string& evaluator_id) {
    nlohmann::json doc;
    doc["script_id"] = script.id;
    doc["evaluator_id"] = evaluator_id;
    doc["scale"] = "scores are integers from 1 (lowest) to 5 (highest)";
    for (NLDimension d : kAllDimensions) {
        doc[key_of(d)] = {{"score", nullptr}, {"note", ""}};
    }
    for (RubricElement e : kAllElements) {
        doc[key_of(e)] = {{"score", nullptr}, {"note", ""}};
    }
    return doc;
}

EvaluationRecord validate_evaluation(const std::string& raw_json) {
    std::vector<std::string> top_keys;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(
            raw_json, [&](int depth, nlohmann::json::parse_event_t event, nlohmann::json& value) {
                if (event == nlohmann::json::parse_event_t::key && depth == 1) {
                    top_keys.push_back(value.get<std::string>());
                }
                return true;
            });
    } catch (const nlohmann::json::exception& e) {
        throw RubricError(RubricErrorCode::BadDocument,
                          std::string("evaluation is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw RubricError(RubricErrorCode::BadDocument, "evaluation must be a JSON object");
    }

    std::set<std::string> seen;
    for (const auto& key : top_keys) {
        if (!seen.insert(key).second) {
            throw RubricError(RubricErrorCode::DuplicateEntry,
                              "entry '" + key + "' appears more than once");
        }
    }

    EvaluationRecord record;
    record.script_id = doc.value("script_id", "");
    record.evaluator_id = doc.value("evaluator_id", "");

    auto read_score = [&](const std::string& key) {
        if (!doc.contains(key)) {
            throw RubricError(RubricErrorCode::MissingScore, "no entry for '" + key + "'");
        }
        const nlohmann::json& entry = doc[key];
        nlohmann::json score;
        if (entry.is_object()) {
            if (entry.contains("note") && entry["note"].is_string()) {
                record.notes[key] = entry["note"].get<std::string>();
            }
            if (!entry.contains("score") || entry["score"].is_null()) {
                throw RubricError(RubricErrorCode::MissingScore,
                                  "entry '" + key + "' has no score");
            }
            score = entry["score"];
        } else {
            score = entry;  // bare integer form is accepted
        }
        if (!score.is_number_integer()) {
            throw RubricError(RubricErrorCode::OutOfRange,
                              "entry '" + key + "' must be an integer from 1 to 5");
        }
        const int value = score.get<int>();
        if (value < 1 || value > 5) {
            throw RubricError(RubricErrorCode::OutOfRange,
                              "entry '" + key + "' is " + std::to_string(value) +
                                  "; scores range from 1 to 5");
        }
        return value;
    };

    for (NLDimension d : kAllDimensions) record.nl_scores[d] = read_score(key_of(d));
    for (RubricElement e : kAllElements) record.rubric_scores[e] = read_score(key_of(e));
    return record;
}

AggregateTables aggregate(const std::vector<EvaluationRecord>& records) {
    if (records.empty()) {
        throw RubricError(RubricErrorCode::EmptyInput, "no evaluation records to aggregate");
    }
    std::vector<std::string> scripts;
    for (const auto& record : records) {
        if (std::find(scripts.begin(), scripts.end(), record.script_id) == scripts.end()) {
            scripts.push_back(record.script_id);
        }
    }

    auto mean_for = [&](const std::string& script, auto selector) -> double {
        double sum = 0.0;
        int count = 0;
        for (const auto& record : records) {
            if (record.script_id != script) continue;
            sum += selector(record);
            ++count;
        }
        return sum / count;
    };

    const size_t label_width = 18;
    size_t column = 7;
    for (const auto& id : scripts) column = std::max(column, id.size() + 2);

    auto render = [&](auto rows, auto score_of, const char* corner) {
        std::ostringstream out;
        out << std::left << std::setw(static_cast<int>(label_width)) << corner;
        for (const auto& id : scripts) out << " | " << std::setw(static_cast<int>(column)) << id;
        out << "\n" << std::string(label_width, '-');
        for (size_t i = 0; i < scripts.size(); ++i) out << "-+-" << std::string(column, '-');
        out << "\n";
        for (auto row : rows) {
            out << std::left << std::setw(static_cast<int>(label_width)) << to_string(row);
            for (const auto& id : scripts) {
                const double mean =
                    mean_for(id, [&](const EvaluationRecord& r) { return score_of(r, row); });
                out << " | " << std::setw(static_cast<int>(column)) << format_score(mean);
            }
            out << "\n";
        }
        return out.str();
    };

    AggregateTables tables;
    tables.nl_table = render(
        kAllDimensions,
        [](const EvaluationRecord& r, NLDimension d) { return r.nl_scores.at(d); }, "Dimension");
    tables.rubric_table = render(
        kAllElements,
        [](const EvaluationRecord& r, RubricElement e) { return r.rubric_scores.at(e); },
        "Rubric");

    tables.as_json["scripts"] = scripts;
    for (NLDimension d : kAllDimensions) {
        for (const auto& id : scripts) {
            tables.as_json["nl"][key_of(d)][id] =
                mean_for(id, [&](const EvaluationRecord& r) { return r.nl_scores.at(d); });
        }
    }
    for (RubricElement e : kAllElements) {
        for (const auto& id : scripts) {
            tables.as_json["rubric"][key_of(e)][id] =
                mean_for(id, [&](const EvaluationRecord& r) { return r.rubric_scores.at(e); });
        }
    }
    return tables;
}

LintPatterns LintPatterns::load(const std::filesystem::path& dir) {
    LintPatterns patterns;
    patterns.other_stakeholders = load_pattern_file(dir / "other_stakeholders.txt");
    patterns.greeting = load_pattern_file(dir / "greeting.txt");
    patterns.closing_summary = load_pattern_file(dir / "closing_summary.txt");
    patterns.closing_approval = load_pattern_file(dir / "closing_approval.txt");
    patterns.written_register = load_pattern_file(dir / "written_register.txt");
    return patterns;
}

std::vector<LintFinding> lint_script(const Script& script, const LintPatterns& patterns) {
    std::vector<LintFinding> findings;

    std::vector<int> interviewer_turns;
    int stakeholder_turns = 0;
    int stakeholder_questions = 0;
    for (const Turn& turn : script.turns) {
        if (turn.speaker == Speaker::Interviewer) {
            interviewer_turns.push_back(turn.index);
        } else {
            ++stakeholder_turns;
            if (classify_turn(turn) == DialogueAct::Question) ++stakeholder_questions;
        }
    }

    // (a) no interviewer question about additional stakeholders
    bool asked_about_others = false;
    for (int index : interviewer_turns) {
        const Turn& turn = script.turns[static_cast<size_t>(index)];
        if (classify_turn(turn) == DialogueAct::Question &&
            matches_any(turn.text, patterns.other_stakeholders)) {
            asked_about_others = true;
            break;
        }
    }
    if (!asked_about_others) {
        findings.push_back({"OtherStakeholders", MistakeTag::IgnoringOtherStakeholders,
                            Severity::Warning, {},
                            "no interviewer question asks about other stakeholders"});
    }

    // (b) first interviewer turn lacks a greeting
    if (!interviewer_turns.empty()) {
        const Turn& first = script.turns[static_cast<size_t>(interviewer_turns.front())];
        if (!matches_any(first.text, patterns.greeting)) {
            findings.push_back({"GreetingPresent", std::nullopt, Severity::Info,
                                {first.index},
                                "first interviewer turn has no greeting"});
        }
    }

    // (c) closing window without summary or approval
    if (!interviewer_turns.empty()) {
        const auto n = interviewer_turns.size();
        const size_t window = std::max<size_t>(1, static_cast<size_t>(std::ceil(0.2 * n)));
        std::vector<int> tail(interviewer_turns.end() - static_cast<std::ptrdiff_t>(window),
                              interviewer_turns.end());
        bool closed = false;
        for (int index : tail) {
            const Turn& turn = script.turns[static_cast<size_t>(index)];
            if (matches_any(turn.text, patterns.closing_summary) ||
                matches_any(turn.text, patterns.closing_approval)) {
                closed = true;
                break;
            }
        }
        if (!closed) {
            findings.push_back({"ClosingSummary", std::nullopt, Severity::Warning, tail,
                                "final interviewer turns neither summarize nor ask for "
                                "approval"});
        }
    }

    // (d) written-register phrases anywhere in the dialogue
    std::vector<int> written;
    for (const Turn& turn : script.turns) {
        if (matches_any(turn.text, patterns.written_register)) written.push_back(turn.index);
    }
    if (!written.empty()) {
        findings.push_back({"WrittenRegister", MistakeTag::UnnaturalDialogueStyle,
                            Severity::Info, written,
                            "turns use document-structure phrasing unnatural in speech"});
    }

    // (e) stakeholder asks no questions anywhere
    if (stakeholder_questions == 0) {
        findings.push_back({"StakeholderQuestions", std::nullopt, Severity::Info, {},
                            "stakeholder turns contain no questions"});
    }

    return findings;
}

nlohmann::json findings_to_json(const std::vector<LintFinding>& findings) {
    nlohmann::json out = nlohmann::json::array();
    for (const LintFinding& finding : findings) {
        nlohmann::json entry{
            {"check", finding.check},
            {"severity", to_string(finding.severity)},
            {"turns", finding.turn_refs},
            {"message", finding.message},
        };
        if (finding.tag) entry["tag"] = to_string(*finding.tag);
        out.push_back(entry);
    }
    return out;
}

}  // namespace elicit
