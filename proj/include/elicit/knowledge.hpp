#pragma once

#include "elicit/analytics.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace elicit {

// The three knowledge sources the generator is grounded in.
enum class KnowledgeKind { Guidelines, Pitfalls, SampleScript };

std::string to_string(KnowledgeKind kind);

struct KnowledgeDoc {
    std::string id;
    KnowledgeKind kind = KnowledgeKind::Guidelines;
    std::string text;
};

struct Chunk {
    std::string doc_id;
    int ordinal = 0;
    std::string text;
    int token_estimate = 0;
};

struct ScoredChunk {
    Chunk chunk;
    double score = 0.0;
};

// The context injected alongside every prompt: instructions plus as many
// retrieved chunks as the token budget allows.
struct ContextBundle {
    std::string system_instructions;
    std::vector<Chunk> chunks;  // retrieval-score descending
    int budget = 0;
    int used = 0;
};

enum class KnowledgeErrorCode {
    MissingManifest,
    BadManifest,
    MissingFile,
    EmptyFile,
    BudgetTooSmall,
};

class KnowledgeError : public std::runtime_error {
public:
    KnowledgeError(KnowledgeErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    KnowledgeErrorCode code() const { return code_; }

private:
    KnowledgeErrorCode code_;
};

// Word-count heuristic, not a real tokenizer: ceil(words * tokens_per_word),
// never below 1 for nonempty text.
int estimate_tokens(std::string_view text, double tokens_per_word = 4.0 / 3.0);

// Loads the directory's manifest.json ({guidelines, pitfalls, sample_script},
// paths relative to the manifest) and reads one UTF-8 doc per entry.
std::vector<KnowledgeDoc> load_knowledge(const std::filesystem::path& directory);

// Splits on blank-line paragraph boundaries, merging adjacent paragraphs while
// the estimate stays within target_tokens. A single oversize paragraph becomes
// its own chunk. Joining chunk texts with "\n\n" restores the document
// (modulo original paragraph separators). target_tokens must be >= 32.
std::vector<Chunk> chunk_doc(const KnowledgeDoc& doc, int target_tokens,
                             double tokens_per_word = 4.0 / 3.0);

// Ranks chunks by cosine similarity between TF-IDF vectors of query and chunk
// (chunk set as corpus, analytics tokenization/weighting). Top k, ties broken
// by (doc_id, ordinal). Scores lie in [0, 1].
std::vector<ScoredChunk> retrieve(const std::string& query, const std::vector<Chunk>& chunks,
                                  int k, const StopwordSet& stopwords);

// Greedily takes ranked chunks while the running estimate fits the budget;
// inclusion is a prefix of the ranking, chunks are never truncated.
ContextBundle assemble_context(const std::string& instructions,
                               const std::vector<ScoredChunk>& ranked, int budget,
                               double tokens_per_word = 4.0 / 3.0);

// The system-message text a backend request carries.
std::string render_context(const ContextBundle& bundle);

}  // namespace elicit
