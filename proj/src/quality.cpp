#include "elicit/quality.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace elicit {

namespace {

constexpr double kSimilaritySaturation = 0.2;

std::set<std::string> token_set(std::string_view text) {
    std::set<std::string> out;
    for (auto& token : tokenize_words(text)) out.insert(std::move(token));
    return out;
}

double set_cosine(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    size_t shared = 0;
    for (const auto& token : a) shared += b.count(token);
    return static_cast<double>(shared) /
           std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double saturated(double similarity) {
    return std::min(1.0, similarity / kSimilaritySaturation);
}

double mean_adjacent_similarity(const std::vector<std::set<std::string>>& sets) {
    if (sets.size() <= 1) return 1.0;
    double sum = 0.0;
    for (size_t i = 0; i + 1 < sets.size(); ++i) {
        sum += saturated(set_cosine(sets[i], sets[i + 1]));
    }
    return sum / static_cast<double>(sets.size() - 1);
}

std::map<std::string, GrammarScorer>& scorer_registry() {
    static std::map<std::string, GrammarScorer> registry = {
        {"default", default_grammar_scorer}};
    return registry;
}

AggregateStat aggregate(const std::vector<double>& values) {
    AggregateStat stat;
    stat.turn_count = static_cast<int>(values.size());
    if (values.empty()) return stat;
    double sum = 0.0;
    for (double v : values) sum += v;
    stat.mean = sum / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - stat.mean) * (v - stat.mean);
    stat.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return stat;
}

std::string format_cell(const AggregateStat& stat) {
    if (stat.turn_count == 0) return "n/a";
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << stat.mean << " ± " << stat.stddev;
    return out.str();
}

// setw counts bytes; pad by display width so multibyte glyphs stay aligned.
std::string pad_cell(const std::string& cell, size_t width) {
    size_t display = 0;
    for (unsigned char c : cell) {
        if ((c & 0xC0) != 0x80) ++display;
    }
    return cell + std::string(display < width ? width - display : 0, ' ');
}

}  // namespace

double non_redundancy(std::string_view text) {
    const auto tokens = tokenize_words(text);
    if (tokens.size() < 3) return 1.0;
    std::map<std::string, int> trigrams;
    for (size_t i = 0; i + 2 < tokens.size(); ++i) {
        ++trigrams[tokens[i] + '\x1f' + tokens[i + 1] + '\x1f' + tokens[i + 2]];
    }
    const auto total = static_cast<double>(tokens.size() - 2);
    double repeats = 0.0;
    for (const auto& [key, count] : trigrams) repeats += count - 1;
    return 1.0 - repeats / std::max(1.0, total);
}

double focus(std::string_view text) {
    const auto sentences = split_sentences(text);
    if (sentences.size() <= 1) return 1.0;
    std::vector<std::set<std::string>> sets;
    sets.reserve(sentences.size());
    for (const auto& sentence : sentences) sets.push_back(token_set(sentence));
    return mean_adjacent_similarity(sets);
}

double coherence(const std::vector<std::string>& texts) {
    if (texts.size() <= 1) return 1.0;
    std::vector<std::set<std::string>> sets;
    sets.reserve(texts.size());
    for (const auto& text : texts) sets.push_back(token_set(text));
    return mean_adjacent_similarity(sets);
}

double default_grammar_scorer(std::string_view text) {
    const auto tokens = tokenize_words(text);
    double penalty = 0.0;

    if (tokens.size() >= 2) {
        // Terminal punctuation check, ignoring trailing closers.
        std::string_view tail = text;
        while (!tail.empty() &&
               (std::isspace(static_cast<unsigned char>(tail.back())) ||
                tail.back() == ')' || tail.back() == ']' || tail.back() == '}' ||
                tail.back() == '"' || tail.back() == '\'')) {
            tail.remove_suffix(1);
        }
        const bool ellipsis = tail.size() >= 3 && tail.substr(tail.size() - 3) == "…";
        const bool terminated =
            !tail.empty() && (tail.back() == '.' || tail.back() == '!' || tail.back() == '?');
        if (!terminated && !ellipsis) penalty += 0.1;
    }

    const std::pair<char, char> brackets[] = {{'(', ')'}, {'[', ']'}, {'{', '}'}};
    for (const auto& [open, close] : brackets) {
        const auto opens = std::count(text.begin(), text.end(), open);
        const auto closes = std::count(text.begin(), text.end(), close);
        if (opens != closes) penalty += 0.2;
    }
    if (std::count(text.begin(), text.end(), '"') % 2 != 0) penalty += 0.2;

    for (size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i] == tokens[i - 1]) penalty += 0.1;
    }

    return std::clamp(1.0 - penalty, 0.0, 1.0);
}

void register_grammar_scorer(const std::string& name, GrammarScorer scorer) {
    scorer_registry()[name] = std::move(scorer);
}

GrammarScorer get_grammar_scorer(const std::string& name) {
    const auto& registry = scorer_registry();
    auto it = registry.find(name);
    if (it == registry.end()) {
        throw QualityError(QualityErrorCode::NoScorerRegistered,
                           "no grammaticality scorer named '" + name + "'");
    }
    return it->second;
}

std::vector<std::string> grammar_scorer_names() {
    std::vector<std::string> names;
    for (const auto& [name, scorer] : scorer_registry()) names.push_back(name);
    return names;
}

double grammaticality(std::string_view text, const GrammarScorer& scorer) {
    if (!scorer) {
        throw QualityError(QualityErrorCode::NoScorerRegistered,
                           "grammaticality called without a scorer");
    }
    return std::clamp(scorer(text), 0.0, 1.0);
}

QualityScore score_turn(const Turn& turn, const MetricWeights& weights,
                        const GrammarScorer& scorer) {
    QualityScore score;
    score.grammaticality = grammaticality(turn.text, scorer);
    score.non_redundancy = non_redundancy(turn.text);
    score.focus = focus(turn.text);
    score.coherence = coherence(split_sentences(turn.text));

    const double weight_sum =
        weights.grammaticality + weights.non_redundancy + weights.focus + weights.coherence;
    if (weight_sum <= 0.0) {
        throw std::invalid_argument("score_turn: metric weights must sum to a positive value");
    }
    score.composite = (weights.grammaticality * score.grammaticality +
                       weights.non_redundancy * score.non_redundancy +
                       weights.focus * score.focus + weights.coherence * score.coherence) /
                      weight_sum;
    return score;
}

QualityReport score_script(const Script& script, const MetricWeights& weights,
                           const GrammarScorer& scorer) {
    if (script.turns.empty()) {
        throw QualityError(QualityErrorCode::EmptyScript, "cannot score an empty script");
    }
    QualityReport report;
    std::vector<double> interviewer, stakeholder, all;
    std::vector<std::string> turn_texts;
    for (const Turn& turn : script.turns) {
        QualityScore score = score_turn(turn, weights, scorer);
        all.push_back(score.composite);
        (turn.speaker == Speaker::Interviewer ? interviewer : stakeholder)
            .push_back(score.composite);
        report.per_turn.push_back(score);
        turn_texts.push_back(turn.text);
    }
    report.interviewer = aggregate(interviewer);
    report.stakeholder = aggregate(stakeholder);
    report.all = aggregate(all);
    report.script_coherence = coherence(turn_texts);
    return report;
}

std::string render_quality_table(
    const std::vector<std::pair<std::string, QualityReport>>& reports) {
    size_t id_width = 6;
    for (const auto& [id, report] : reports) id_width = std::max(id_width, id.size());
    std::ostringstream out;
    out << pad_cell("script", id_width) << " | " << pad_cell("interviewer", 14) << " | "
        << pad_cell("stakeholder", 14) << " | all\n"
        << std::string(id_width + 1, '-') << "+-" << std::string(15, '-') << "+-"
        << std::string(15, '-') << "+------------\n";
    for (const auto& [id, report] : reports) {
        out << pad_cell(id, id_width) << " | " << pad_cell(format_cell(report.interviewer), 14)
            << " | " << pad_cell(format_cell(report.stakeholder), 14) << " | "
            << format_cell(report.all) << "\n";
    }
    out << "(mean ± population std of per-turn composite scores)\n";
    return out.str();
}

nlohmann::json quality_to_json(const std::string& script_id, const QualityReport& report) {
    auto stat_json = [](const AggregateStat& stat) {
        return nlohmann::json{
            {"turn_count", stat.turn_count}, {"mean", stat.mean}, {"stddev", stat.stddev}};
    };
    nlohmann::json per_turn = nlohmann::json::array();
    for (const QualityScore& score : report.per_turn) {
        per_turn.push_back({{"grammaticality", score.grammaticality},
                            {"non_redundancy", score.non_redundancy},
                            {"focus", score.focus},
                            {"coherence", score.coherence},
                            {"composite", score.composite}});
    }
    return nlohmann::json{
        {"script_id", script_id},
        {"per_turn", per_turn},
        {"interviewer", stat_json(report.interviewer)},
        {"stakeholder", stat_json(report.stakeholder)},
        {"all", stat_json(report.all)},
        {"script_coherence", report.script_coherence},
    };
}

}  // namespace elicit
