#pragma once

#include "elicit/transcript.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace elicit {

// Natural-language view dimensions of the expert-judgment workflow.
enum class NLDimension { Naturalness, Coherence, Completeness };

// The six elements of the elicitation-interview rubric.
enum class RubricElement { Greeting, Opening, AnalyzeAsIs, DesignToBe, Closing, ActiveListening };

// Common interviewer mistakes the lints look for.
enum class MistakeTag {
    InfluencingStakeholder,
    UnnaturalDialogueStyle,
    IgnoringOtherStakeholders,
    TechnicalJargon,
    LackOfClarity,
};

std::string to_string(NLDimension d);
std::string to_string(RubricElement e);
std::string to_string(MistakeTag t);

// JSON key for each dimension/element (e.g. "analyze_as_is").
std::string key_of(NLDimension d);
std::string key_of(RubricElement e);

constexpr std::array<NLDimension, 3> kAllDimensions = {
    NLDimension::Naturalness, NLDimension::Coherence, NLDimension::Completeness};
constexpr std::array<RubricElement, 6> kAllElements = {
    RubricElement::Greeting,  RubricElement::Opening, RubricElement::AnalyzeAsIs,
    RubricElement::DesignToBe, RubricElement::Closing, RubricElement::ActiveListening};

enum class RubricErrorCode { MissingScore, OutOfRange, DuplicateEntry, BadDocument, EmptyInput };

class RubricError : public std::runtime_error {
public:
    RubricError(RubricErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    RubricErrorCode code() const { return code_; }

private:
    RubricErrorCode code_;
};

// One evaluator's validated scores for one script; scores are integers 1-5.
struct EvaluationRecord {
    std::string script_id;
    std::string evaluator_id;
    std::map<NLDimension, int> nl_scores;
    std::map<RubricElement, int> rubric_scores;
    std::map<std::string, std::string> notes;  // keyed by entry key, may be empty
};

// Fill-in JSON document: all nine entries with null scores and empty notes.
nlohmann::json new_evaluation_template(const Script& script,
                                       const std::string& evaluator_id = "");

// Parses and validates a filled evaluation document. Rejects duplicate keys
// in the raw JSON text (DuplicateEntry), absent or null scores (MissingScore),
// and scores outside 1-5 or non-integers (OutOfRange).
EvaluationRecord validate_evaluation(const std::string& raw_json);

struct AggregateTables {
    std::string nl_table;      // dimensions x scripts
    std::string rubric_table;  // elements x scripts
    nlohmann::json as_json;
};

// Columns in first-appearance order of script ids; multi-evaluator cells show
// the mean to one decimal.
AggregateTables aggregate(const std::vector<EvaluationRecord>& records);

enum class Severity { Info, Warning };

std::string to_string(Severity s);

struct LintFinding {
    std::string check;               // rule name, e.g. "OtherStakeholders"
    std::optional<MistakeTag> tag;   // absent for structural checks
    Severity severity = Severity::Info;
    std::vector<int> turn_refs;      // offending turn indices, may be empty
    std::string message;
};

// Keyword heuristics, loaded from editable data files (one phrase per line,
// matched case-insensitively on word boundaries).
struct LintPatterns {
    std::vector<std::string> other_stakeholders;
    std::vector<std::string> greeting;
    std::vector<std::string> closing_summary;
    std::vector<std::string> closing_approval;
    std::vector<std::string> written_register;

    static LintPatterns load(const std::filesystem::path& dir);
};

// Deterministic advisory checks; severities are never scores.
std::vector<LintFinding> lint_script(const Script& script, const LintPatterns& patterns);

nlohmann::json findings_to_json(const std::vector<LintFinding>& findings);

}  // namespace elicit
