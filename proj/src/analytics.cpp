#include "elicit/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace elicit {

namespace {

Rational quantile_sorted(const std::vector<int>& sorted, std::int64_t p_num, std::int64_t p_den) {
    const auto n = static_cast<std::int64_t>(sorted.size());
    const std::int64_t h_num = (n - 1) * p_num;  // h = (n-1)p with denominator p_den
    const std::int64_t lo = h_num / p_den;
    const std::int64_t frac_num = h_num % p_den;
    const Rational low(sorted[static_cast<size_t>(lo)]);
    if (frac_num == 0) return low;
    const Rational high(sorted[static_cast<size_t>(lo) + 1]);
    return low + Rational(frac_num, p_den) * (high - low);
}

bool is_pure_number(const std::string& token) {
    bool has_digit = false;
    for (unsigned char c : token) {
        if (c >= '0' && c <= '9') {
            has_digit = true;
        } else if (std::isalpha(c) || c >= 0x80) {
            return false;
        }
    }
    return has_digit;
}

// One script = one document: counts of kept tokens plus the kept-token total.
struct DocTerms {
    std::map<std::string, int> counts;
    int total = 0;
};

DocTerms document_terms(const Script& script, const StopwordSet& stopwords) {
    DocTerms doc;
    for (const Turn& turn : script.turns) {
        for (auto& token : tokenize_words(turn.text)) {
            if (stopwords.count(token) || is_pure_number(token)) continue;
            ++doc.counts[token];
            ++doc.total;
        }
    }
    return doc;
}

SpeakerStats speaker_stats(const Script& script, Speaker speaker) {
    SpeakerStats stats;
    stats.speaker = speaker;
    std::vector<int> lengths;
    std::int64_t word_sum = 0;
    for (const Turn& turn : script.turns) {
        if (turn.speaker != speaker) continue;
        const int words = static_cast<int>(tokenize_words(turn.text).size());
        lengths.push_back(words);
        word_sum += words;
        if (words < 6) ++stats.short_turns;
        (classify_turn(turn) == DialogueAct::Question ? stats.acts.q : stats.acts.nq)++;
    }
    stats.turn_count = static_cast<int>(lengths.size());
    if (!lengths.empty()) {
        stats.lengths = turn_length_stats(lengths);
        stats.mean_length = Rational(word_sum, stats.turn_count);
    }
    return stats;
}

std::string format_mean(const Rational& mean) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << mean.to_double();
    return out.str();
}

}  // namespace

StopwordSet load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw AnalyticsError(AnalyticsErrorCode::EmptyInput,
                             "cannot open stopword list: " + path);
    }
    StopwordSet words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        words.insert(line);
    }
    return words;
}

TurnLengthStats turn_length_stats(const std::vector<int>& lengths) {
    if (lengths.empty()) {
        throw AnalyticsError(AnalyticsErrorCode::EmptyInput,
                             "turn_length_stats needs at least one length");
    }
    std::vector<int> sorted = lengths;
    std::sort(sorted.begin(), sorted.end());
    TurnLengthStats stats;
    stats.min_words = sorted.front();
    stats.max_words = sorted.back();
    stats.q1 = quantile_sorted(sorted, 1, 4);
    stats.median = quantile_sorted(sorted, 2, 4);
    stats.q3 = quantile_sorted(sorted, 3, 4);
    return stats;
}

ActCounts act_counts(const Script& script, Speaker speaker) {
    ActCounts counts;
    for (const Turn& turn : script.turns) {
        if (turn.speaker != speaker) continue;
        (classify_turn(turn) == DialogueAct::Question ? counts.q : counts.nq)++;
    }
    return counts;
}

std::vector<TermScore> tfidf_top_terms(const std::vector<Script>& corpus,
                                       const std::string& target_id, int k,
                                       const StopwordSet& stopwords) {
    const Script* target = nullptr;
    for (const Script& script : corpus) {
        if (script.id == target_id) {
            target = &script;
            break;
        }
    }
    if (target == nullptr) {
        throw AnalyticsError(AnalyticsErrorCode::UnknownScript,
                             "script '" + target_id + "' is not in the corpus");
    }

    std::vector<DocTerms> docs;
    docs.reserve(corpus.size());
    const DocTerms* target_doc = nullptr;
    for (const Script& script : corpus) {
        docs.push_back(document_terms(script, stopwords));
        if (&script == target) target_doc = &docs.back();
    }

    std::map<std::string, int> df;
    for (const DocTerms& doc : docs) {
        for (const auto& [term, count] : doc.counts) ++df[term];
    }

    const double n_docs = static_cast<double>(docs.size());
    std::vector<TermScore> scores;
    for (const auto& [term, count] : target_doc->counts) {
        const double tf = static_cast<double>(count) / static_cast<double>(target_doc->total);
        const double idf = std::log((1.0 + n_docs) / (1.0 + df[term])) + 1.0;
        scores.push_back({term, tf * idf});
    }
    std::sort(scores.begin(), scores.end(), [](const TermScore& a, const TermScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.term < b.term;
    });
    if (static_cast<int>(scores.size()) > k) scores.resize(static_cast<size_t>(k));
    return scores;
}

ScriptReport script_report(const std::vector<Script>& corpus, const std::string& target_id,
                           const StopwordSet& stopwords, int top_k) {
    const Script* target = nullptr;
    for (const Script& script : corpus) {
        if (script.id == target_id) target = &script;
    }
    if (target == nullptr) {
        throw AnalyticsError(AnalyticsErrorCode::UnknownScript,
                             "script '" + target_id + "' is not in the corpus");
    }
    ScriptReport report;
    report.script_id = target_id;
    report.total_turns = static_cast<int>(target->turns.size());
    report.interviewer = speaker_stats(*target, Speaker::Interviewer);
    report.stakeholder = speaker_stats(*target, Speaker::Stakeholder);
    report.top_terms = tfidf_top_terms(corpus, target_id, top_k, stopwords);
    return report;
}

std::string render_report_table(const std::vector<ScriptReport>& reports) {
    if (reports.empty()) {
        throw AnalyticsError(AnalyticsErrorCode::EmptyInput, "no reports to render");
    }
    size_t id_width = 6;
    for (const ScriptReport& report : reports) {
        id_width = std::max(id_width, report.script_id.size());
    }
    std::ostringstream out;
    const std::string rule = std::string(id_width + 1, '-') +
        "+-------------+---------+-----+-----+-----+-----+-----+-------+-----\n";
    out << std::left << std::setw(static_cast<int>(id_width)) << "script" << " | "
        << std::setw(11) << "speaker"
        << " | " << std::setw(7) << "min-max" << " | " << std::setw(3) << "Q1" << " | "
        << std::setw(3) << "Mdn" << " | " << std::setw(3) << "Q3" << " | " << std::setw(3)
        << "NQ" << " | " << std::setw(3) << "Q" << " | " << std::setw(5) << "mean" << " | <6w\n"
        << rule;
    for (const ScriptReport& report : reports) {
        for (const SpeakerStats* stats : {&report.interviewer, &report.stakeholder}) {
            const std::string range = std::to_string(stats->lengths.min_words) + "-" +
                                      std::to_string(stats->lengths.max_words);
            out << std::left << std::setw(static_cast<int>(id_width))
                << (stats->speaker == Speaker::Interviewer ? report.script_id : "") << " | "
                << std::setw(11) << to_string(stats->speaker) << " | " << std::setw(7) << range
                << " | " << std::setw(3) << stats->lengths.q1.round_nearest() << " | "
                << std::setw(3) << stats->lengths.median.round_nearest() << " | " << std::setw(3)
                << stats->lengths.q3.round_nearest() << " | " << std::setw(3) << stats->acts.nq
                << " | " << std::setw(3) << stats->acts.q << " | " << std::setw(5)
                << format_mean(stats->mean_length) << " | " << stats->short_turns << "\n";
        }
        out << "  top terms: ";
        for (size_t i = 0; i < report.top_terms.size(); ++i) {
            if (i > 0) out << ", ";
            out << report.top_terms[i].term;
        }
        out << "\n" << rule;
    }
    return out.str();
}

nlohmann::json report_to_json(const ScriptReport& report) {
    auto speaker_json = [](const SpeakerStats& stats) {
        return nlohmann::json{
            {"turns", stats.turn_count},
            {"length",
             {{"min", stats.lengths.min_words},
              {"max", stats.lengths.max_words},
              {"q1", stats.lengths.q1.to_double()},
              {"median", stats.lengths.median.to_double()},
              {"q3", stats.lengths.q3.to_double()}}},
            {"acts", {{"nq", stats.acts.nq}, {"q", stats.acts.q}}},
            {"mean_length", stats.mean_length.to_double()},
            {"short_turns", stats.short_turns},
        };
    };
    nlohmann::json top_terms = nlohmann::json::array();
    for (const TermScore& term : report.top_terms) {
        top_terms.push_back({{"term", term.term}, {"score", term.score}});
    }
    return nlohmann::json{
        {"script_id", report.script_id},
        {"total_turns", report.total_turns},
        {"interviewer", speaker_json(report.interviewer)},
        {"stakeholder", speaker_json(report.stakeholder)},
        {"top_terms", top_terms},
    };
}

}  // namespace elicit
