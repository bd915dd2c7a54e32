#pragma once

#include "elicit/backend.hpp"
#include "elicit/knowledge.hpp"
#include "elicit/transcript.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace elicit {

struct OutlineSection {
    int ordinal = 0;
    std::string title;
    std::string goal;
    int target_turns = 2;
};

struct Outline {
    std::string scenario;
    std::vector<OutlineSection> sections;
};

struct OutlineLimits {
    int min_sections = 3;
    int max_sections = 12;
    int default_target_turns = 6;  // applied when a line has no (turns: T)
};

struct GenerationConfig {
    std::string scenario;
    double temperature = 0.7;
    int max_output_tokens = 1024;
    int carry_over_turns = 6;  // trailing turns echoed into the next prompt
    int context_budget = 2000;
    int retrieval_k = 4;
    int chunk_target_tokens = 160;
    int parse_retries = 2;      // repair attempts per malformed reply
    int backend_attempts = 3;   // call cap per prompt on backend errors
    int backoff_base_ms = 250;  // doubled per backend-error retry
    double tokens_per_word = 4.0 / 3.0;
    OutlineLimits outline;
};

// Running state of one chain: what has been generated and the tail that the
// next section prompt must continue from.
struct ChainState {
    Outline outline;
    std::vector<std::vector<Turn>> completed_sections;
    std::vector<Turn> transcript_tail;
};

struct LogRecord {
    int ordinal = 0;
    CompletionRequest request;
    CompletionResponse response;
    std::int64_t timestamp_ms = 0;
};

// Audit trail of every backend exchange, including retries.
struct ChainLog {
    std::vector<LogRecord> records;

    int backend_calls() const { return static_cast<int>(records.size()); }
    std::string to_jsonl() const;
};

enum class ChainErrorCode {
    BackendError,
    OutlineParseFailed,
    SectionParseFailed,
    EmptySection,
    SectionCountMismatch,
    MissingTemplate,
};

class ChainError : public std::runtime_error {
public:
    ChainError(ChainErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    ChainErrorCode code() const { return code_; }

private:
    ChainErrorCode code_;
};

// Prompt wording lives in data files so experiments stay diffable.
struct PromptTemplates {
    std::string system;
    std::string outline;
    std::string outline_repair;
    std::string section;
    std::string section_repair;
    std::string section_first_extra;
    std::string section_last_extra;
};

PromptTemplates load_prompt_templates(const std::filesystem::path& dir);

// Replaces {name} placeholders; unknown placeholders are left in place.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars);

// Accepts numbered lines `N. Title — goal (turns: T)`; '-'/'–'/':' also
// separate title and goal, and a missing turns annotation falls back to
// limits.default_target_turns. Throws OutlineParseFailed when fewer than
// min_sections (or more than max_sections) lines parse.
Outline parse_outline(const std::string& text, const OutlineLimits& limits);

Script concatenate(const Outline& outline, const std::vector<std::vector<Turn>>& sections);

// Lowercase-hyphen identifier derived from a scenario description.
std::string scenario_slug(const std::string& scenario);

using ChainClock = std::function<std::int64_t()>;

ChainClock system_clock_ms();
ChainClock fixed_clock(std::int64_t value = 0);

// Drives the outline prompt and one prompt per section against a backend,
// carrying the transcript tail forward, and concatenates the sections into a
// single script. Every exchange lands in the ChainLog the caller passes in,
// so a failed chain still leaves a usable partial log.
class ChainRunner {
public:
    ChainRunner(GenerationConfig config, const std::vector<KnowledgeDoc>& knowledge,
                Backend& backend, PromptTemplates templates, StopwordSet stopwords,
                ChainClock clock = system_clock_ms());

    Outline generate_outline(ChainLog& log);
    std::vector<Turn> generate_section(const ChainState& state, const OutlineSection& section,
                                       ChainLog& log);
    Script run(ChainLog& log);

    // Outline of the most recent run(), for reporting.
    const Outline& last_outline() const { return last_outline_; }

private:
    CompletionResponse call_backend(const CompletionRequest& request, ChainLog& log);
    std::string context_for(const std::string& query) const;

    GenerationConfig config_;
    Backend& backend_;
    PromptTemplates templates_;
    StopwordSet stopwords_;
    ChainClock clock_;
    std::vector<Chunk> chunks_;
    Outline last_outline_;
};

}  // namespace elicit
