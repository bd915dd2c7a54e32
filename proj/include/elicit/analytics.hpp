#pragma once

#include "elicit/rational.hpp"
#include "elicit/transcript.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace elicit {

enum class AnalyticsErrorCode { EmptyInput, UnknownScript };

class AnalyticsError : public std::runtime_error {
public:
    AnalyticsError(AnalyticsErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    AnalyticsErrorCode code() const { return code_; }

private:
    AnalyticsErrorCode code_;
};

// Turn-length distribution; quartiles use linear interpolation on the sorted
// list and are exact rationals (rendered to the nearest integer in tables).
struct TurnLengthStats {
    int min_words = 0;
    int max_words = 0;
    Rational q1;
    Rational median;
    Rational q3;
};

struct ActCounts {
    int nq = 0;
    int q = 0;
};

struct SpeakerStats {
    Speaker speaker = Speaker::Interviewer;
    int turn_count = 0;
    TurnLengthStats lengths;
    ActCounts acts;
    Rational mean_length;
    int short_turns = 0;  // turns with fewer than 6 words
};

struct TermScore {
    std::string term;
    double score = 0.0;
};

// The full dialogue-characteristics bundle for one script.
struct ScriptReport {
    std::string script_id;
    int total_turns = 0;
    SpeakerStats interviewer;
    SpeakerStats stakeholder;
    std::vector<TermScore> top_terms;  // score descending, ties alphabetical
};

using StopwordSet = std::unordered_set<std::string>;

// Reads one lowercase term per line; '#' lines and blanks ignored.
StopwordSet load_stopwords(const std::string& path);

// Quantile p sits at h = (n-1)*p in the sorted list; the value interpolates
// linearly between the neighbouring order statistics.
TurnLengthStats turn_length_stats(const std::vector<int>& lengths);

ActCounts act_counts(const Script& script, Speaker speaker);

// Each script is one document: tf(t,d) = count / kept tokens in d,
// idf(t) = ln((1+N)/(1+df)) + 1, score = tf*idf. Stopwords and pure-number
// tokens (digits only, no letters) are dropped before weighting.
std::vector<TermScore> tfidf_top_terms(const std::vector<Script>& corpus,
                                       const std::string& target_id, int k,
                                       const StopwordSet& stopwords);

ScriptReport script_report(const std::vector<Script>& corpus, const std::string& target_id,
                           const StopwordSet& stopwords, int top_k = 10);

// Fixed-layout text table, one row per report, deterministic output.
std::string render_report_table(const std::vector<ScriptReport>& reports);

nlohmann::json report_to_json(const ScriptReport& report);

}  // namespace elicit
