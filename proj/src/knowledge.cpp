#include "elicit/knowledge.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace elicit {

namespace {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

// Maximal runs of non-blank lines; paragraph text keeps internal newlines.
std::vector<std::string> split_paragraphs(const std::string& text) {
    std::vector<std::string> paragraphs;
    std::string current;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) {
            if (!current.empty()) {
                paragraphs.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        if (!current.empty()) current += '\n';
        current += line;
    }
    if (!current.empty()) paragraphs.push_back(std::move(current));
    return paragraphs;
}

struct TermVector {
    std::map<std::string, double> weights;
    double norm = 0.0;
};

std::map<std::string, double> relative_tf(const std::string& text,
                                          const StopwordSet& stopwords) {
    std::map<std::string, double> counts;
    double total = 0.0;
    for (auto& token : tokenize_words(text)) {
        if (stopwords.count(token)) continue;
        bool numeric = true, has_digit = false;
        for (unsigned char c : token) {
            if (c >= '0' && c <= '9') has_digit = true;
            else if (std::isalpha(c) || c >= 0x80) numeric = false;
        }
        if (numeric && has_digit) continue;
        counts[token] += 1.0;
        total += 1.0;
    }
    for (auto& [term, value] : counts) value /= total;
    return counts;
}

}  // namespace

std::string to_string(KnowledgeKind kind) {
    switch (kind) {
        case KnowledgeKind::Guidelines: return "guidelines";
        case KnowledgeKind::Pitfalls: return "pitfalls";
        case KnowledgeKind::SampleScript: return "sample_script";
    }
    return "unknown";
}

int estimate_tokens(std::string_view text, double tokens_per_word) {
    const auto words = tokenize_words(text).size();
    if (words == 0) return 0;
    return static_cast<int>(std::ceil(static_cast<double>(words) * tokens_per_word));
}

std::vector<KnowledgeDoc> load_knowledge(const std::filesystem::path& directory) {
    const auto manifest_path = directory / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw KnowledgeError(KnowledgeErrorCode::MissingManifest,
                             "no manifest.json in " + directory.string());
    }
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw KnowledgeError(KnowledgeErrorCode::BadManifest,
                             std::string("manifest.json is not valid JSON: ") + e.what());
    }

    const std::pair<const char*, KnowledgeKind> entries[] = {
        {"guidelines", KnowledgeKind::Guidelines},
        {"pitfalls", KnowledgeKind::Pitfalls},
        {"sample_script", KnowledgeKind::SampleScript},
    };
    std::vector<KnowledgeDoc> docs;
    for (const auto& [key, kind] : entries) {
        if (!manifest.contains(key) || !manifest[key].is_string()) {
            throw KnowledgeError(KnowledgeErrorCode::BadManifest,
                                 std::string("manifest.json needs a string entry '") + key + "'");
        }
        std::filesystem::path file = manifest[key].get<std::string>();
        if (file.is_relative()) file = directory / file;
        if (!std::filesystem::exists(file)) {
            throw KnowledgeError(KnowledgeErrorCode::MissingFile,
                                 "knowledge file missing: " + file.string());
        }
        std::string text = read_text_file(file);
        if (std::all_of(text.begin(), text.end(),
                        [](unsigned char c) { return std::isspace(c); })) {
            throw KnowledgeError(KnowledgeErrorCode::EmptyFile,
                                 "knowledge file is empty: " + file.string());
        }
        docs.push_back({manifest[key].get<std::string>(), kind, std::move(text)});
    }
    return docs;
}

std::vector<Chunk> chunk_doc(const KnowledgeDoc& doc, int target_tokens,
                             double tokens_per_word) {
    if (target_tokens < 32) {
        throw std::invalid_argument("chunk_doc: target_tokens must be at least 32");
    }
    std::vector<Chunk> chunks;
    std::string current;
    auto flush = [&]() {
        if (current.empty()) return;
        Chunk chunk;
        chunk.doc_id = doc.id;
        chunk.ordinal = static_cast<int>(chunks.size());
        chunk.token_estimate = std::max(1, estimate_tokens(current, tokens_per_word));
        chunk.text = std::move(current);
        chunks.push_back(std::move(chunk));
        current.clear();
    };
    for (auto& paragraph : split_paragraphs(doc.text)) {
        if (current.empty()) {
            current = paragraph;
            continue;
        }
        std::string merged = current + "\n\n" + paragraph;
        if (estimate_tokens(merged, tokens_per_word) > target_tokens) {
            flush();
            current = paragraph;
        } else {
            current = std::move(merged);
        }
    }
    flush();
    return chunks;
}

std::vector<ScoredChunk> retrieve(const std::string& query, const std::vector<Chunk>& chunks,
                                  int k, const StopwordSet& stopwords) {
    if (k < 1) throw std::invalid_argument("retrieve: k must be at least 1");
    if (chunks.empty()) return {};

    std::vector<std::map<std::string, double>> chunk_tfs;
    chunk_tfs.reserve(chunks.size());
    std::map<std::string, int> df;
    for (const Chunk& chunk : chunks) {
        chunk_tfs.push_back(relative_tf(chunk.text, stopwords));
        for (const auto& [term, weight] : chunk_tfs.back()) ++df[term];
    }
    const double n = static_cast<double>(chunks.size());
    auto idf = [&](const std::string& term) {
        auto it = df.find(term);
        const int count = it == df.end() ? 0 : it->second;
        return std::log((1.0 + n) / (1.0 + count)) + 1.0;
    };
    auto to_vector = [&](std::map<std::string, double> tf) {
        TermVector vec;
        for (auto& [term, weight] : tf) {
            const double value = weight * idf(term);
            vec.norm += value * value;
            vec.weights.emplace(term, value);
        }
        vec.norm = std::sqrt(vec.norm);
        return vec;
    };

    const TermVector query_vec = to_vector(relative_tf(query, stopwords));
    std::vector<ScoredChunk> ranked;
    ranked.reserve(chunks.size());
    for (size_t i = 0; i < chunks.size(); ++i) {
        const TermVector chunk_vec = to_vector(chunk_tfs[i]);
        double score = 0.0;
        if (query_vec.norm > 0.0 && chunk_vec.norm > 0.0) {
            double dot = 0.0;
            for (const auto& [term, weight] : query_vec.weights) {
                auto it = chunk_vec.weights.find(term);
                if (it != chunk_vec.weights.end()) dot += weight * it->second;
            }
            score = std::clamp(dot / (query_vec.norm * chunk_vec.norm), 0.0, 1.0);
        }
        ranked.push_back({chunks[i], score});
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.chunk.doc_id != b.chunk.doc_id) return a.chunk.doc_id < b.chunk.doc_id;
        return a.chunk.ordinal < b.chunk.ordinal;
    });
    if (static_cast<int>(ranked.size()) > k) ranked.resize(static_cast<size_t>(k));
    return ranked;
}

ContextBundle assemble_context(const std::string& instructions,
                               const std::vector<ScoredChunk>& ranked, int budget,
                               double tokens_per_word) {
    ContextBundle bundle;
    bundle.system_instructions = instructions;
    bundle.budget = budget;
    bundle.used = estimate_tokens(instructions, tokens_per_word);
    if (bundle.used > budget) {
        throw KnowledgeError(KnowledgeErrorCode::BudgetTooSmall,
                             "instructions alone need " + std::to_string(bundle.used) +
                                 " tokens but the budget is " + std::to_string(budget));
    }
    for (const ScoredChunk& scored : ranked) {
        if (bundle.used + scored.chunk.token_estimate > budget) break;
        bundle.used += scored.chunk.token_estimate;
        bundle.chunks.push_back(scored.chunk);
    }
    return bundle;
}

std::string render_context(const ContextBundle& bundle) {
    std::ostringstream out;
    out << bundle.system_instructions;
    if (!bundle.chunks.empty()) {
        out << "\n\nRelevant guidance:\n";
        for (const Chunk& chunk : bundle.chunks) {
            out << "\n" << chunk.text << "\n";
        }
    }
    return out.str();
}

}  // namespace elicit
