#pragma once

#include "elicit/transcript.hpp"

#include <json.hpp>

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace elicit {

// Lexical proxies for the four reference-free criteria: grammaticality,
// non-redundancy, focus, coherence. All scores lie in [0, 1]; degenerate
// inputs (empty text, single sentence) score 1.0, since they show no
// evidence of a defect.

enum class QualityErrorCode { EmptyScript, NoScorerRegistered };

class QualityError : public std::runtime_error {
public:
    QualityError(QualityErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    QualityErrorCode code() const { return code_; }

private:
    QualityErrorCode code_;
};

struct MetricWeights {
    double grammaticality = 1.0;
    double non_redundancy = 1.0;
    double focus = 1.0;
    double coherence = 1.0;
};

struct QualityScore {
    double grammaticality = 1.0;
    double non_redundancy = 1.0;
    double focus = 1.0;
    double coherence = 1.0;
    double composite = 1.0;  // weighted mean; plain mean with default weights
};

struct AggregateStat {
    int turn_count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

struct QualityReport {
    std::vector<QualityScore> per_turn;  // index-aligned with script turns
    AggregateStat interviewer;
    AggregateStat stakeholder;
    AggregateStat all;
    double script_coherence = 1.0;  // adjacent-turn coherence over the script
};

// 1 - repeated-trigram fraction over word trigrams; under 3 words scores 1.0.
double non_redundancy(std::string_view text);

// Mean adjacent-sentence token-set cosine, mapped through min(1, s / 0.2) so
// modest lexical overlap saturates; one sentence or fewer scores 1.0.
double focus(std::string_view text);

// Same cosine mapping over an ordered list of texts (adjacent pairs).
double coherence(const std::vector<std::string>& texts);

using GrammarScorer = std::function<double(std::string_view)>;

// Heuristic default: 1.0 minus 0.1 for a multi-word turn without terminal
// punctuation, 0.2 per unbalanced bracket/quote kind, 0.1 per immediately
// repeated word; clamped to [0, 1].
double default_grammar_scorer(std::string_view text);

void register_grammar_scorer(const std::string& name, GrammarScorer scorer);
GrammarScorer get_grammar_scorer(const std::string& name);  // throws NoScorerRegistered
std::vector<std::string> grammar_scorer_names();

double grammaticality(std::string_view text, const GrammarScorer& scorer);

QualityScore score_turn(const Turn& turn, const MetricWeights& weights = {},
                        const GrammarScorer& scorer = default_grammar_scorer);

QualityReport score_script(const Script& script, const MetricWeights& weights = {},
                           const GrammarScorer& scorer = default_grammar_scorer);

// mean±std table over interviewer/stakeholder/all columns, one row per script.
std::string render_quality_table(
    const std::vector<std::pair<std::string, QualityReport>>& reports);

nlohmann::json quality_to_json(const std::string& script_id, const QualityReport& report);

}  // namespace elicit
