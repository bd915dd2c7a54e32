#include "elicit/chain.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

namespace elicit {

namespace {

std::string read_template(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ChainError(ChainErrorCode::MissingTemplate,
                         "prompt template missing: " + path.string());
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string trim_copy(std::string_view text) {
    size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

// `N. Title — goal (turns: T)` with '-', '–', '—' or ':' between title and
// goal. Returns false for lines that are not numbered at all.
bool parse_outline_line(const std::string& line, int default_turns, OutlineSection& out) {
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t digits = i;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])))
        ++digits;
    if (digits == i) return false;
    if (digits >= line.size() || (line[digits] != '.' && line[digits] != ')')) return false;
    std::string body = trim_copy(line.substr(digits + 1));
    if (body.empty()) return false;

    // Pull the optional (turns: T) annotation off the end.
    int target = default_turns;
    static const std::string marker = "(turns:";
    std::string lowered = body;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    size_t turns_at = lowered.rfind(marker);
    if (turns_at != std::string::npos) {
        size_t value_at = turns_at + marker.size();
        size_t close = body.find(')', value_at);
        if (close != std::string::npos) {
            try {
                target = std::stoi(trim_copy(body.substr(value_at, close - value_at)));
            } catch (const std::exception&) {
                target = default_turns;
            }
            body = trim_copy(body.substr(0, turns_at));
        }
    }

    // Split title from goal at the first separator.
    std::string title = body;
    std::string goal;
    static const std::string separators[] = {"—", "–", " - ", ": "};
    size_t best = std::string::npos;
    size_t sep_len = 0;
    for (const auto& sep : separators) {
        size_t at = body.find(sep);
        if (at != std::string::npos && at < best) {
            best = at;
            sep_len = sep.size();
        }
    }
    if (best != std::string::npos) {
        title = trim_copy(body.substr(0, best));
        goal = trim_copy(body.substr(best + sep_len));
    }
    if (title.empty()) return false;

    out.title = title;
    out.goal = goal;
    out.target_turns = std::max(2, target);
    return true;
}

}  // namespace

PromptTemplates load_prompt_templates(const std::filesystem::path& dir) {
    PromptTemplates templates;
    templates.system = read_template(dir / "system.txt");
    templates.outline = read_template(dir / "outline.txt");
    templates.outline_repair = read_template(dir / "outline_repair.txt");
    templates.section = read_template(dir / "section.txt");
    templates.section_repair = read_template(dir / "section_repair.txt");
    templates.section_first_extra = read_template(dir / "section_first_extra.txt");
    templates.section_last_extra = read_template(dir / "section_last_extra.txt");
    return templates;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    size_t pos = 0;
    while (pos < tmpl.size()) {
        size_t open = tmpl.find('{', pos);
        if (open == std::string::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        size_t close = tmpl.find('}', open);
        if (close == std::string::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        std::string name(tmpl.substr(open + 1, close - open - 1));
        auto it = vars.find(name);
        if (it != vars.end()) {
            out.append(it->second);
        } else {
            out.append(tmpl.substr(open, close - open + 1));  // leave unknown in place
        }
        pos = close + 1;
    }
    return out;
}

Outline parse_outline(const std::string& text, const OutlineLimits& limits) {
    Outline outline;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        OutlineSection section;
        if (!parse_outline_line(line, limits.default_target_turns, section)) continue;
        section.ordinal = static_cast<int>(outline.sections.size());
        outline.sections.push_back(std::move(section));
    }
    const int n = static_cast<int>(outline.sections.size());
    if (n < limits.min_sections) {
        throw ChainError(ChainErrorCode::OutlineParseFailed,
                         "outline has " + std::to_string(n) + " sections; at least " +
                             std::to_string(limits.min_sections) + " required");
    }
    if (n > limits.max_sections) {
        throw ChainError(ChainErrorCode::OutlineParseFailed,
                         "outline has " + std::to_string(n) + " sections; at most " +
                             std::to_string(limits.max_sections) + " allowed");
    }
    return outline;
}

Script concatenate(const Outline& outline, const std::vector<std::vector<Turn>>& sections) {
    if (sections.size() != outline.sections.size()) {
        throw ChainError(ChainErrorCode::SectionCountMismatch,
                         "outline has " + std::to_string(outline.sections.size()) +
                             " sections but " + std::to_string(sections.size()) +
                             " turn lists were supplied");
    }
    Script script;
    script.id = scenario_slug(outline.scenario);
    script.title = "Interview script: " + outline.scenario;
    script.domain_label = outline.scenario;
    for (const auto& section : sections) {
        for (const Turn& turn : section) {
            Turn copy = turn;
            copy.index = static_cast<int>(script.turns.size());
            script.turns.push_back(std::move(copy));
        }
    }
    return script;
}

std::string scenario_slug(const std::string& scenario) {
    std::string slug;
    bool pending_dash = false;
    for (unsigned char c : scenario) {
        if (std::isalnum(c)) {
            if (pending_dash && !slug.empty()) slug += '-';
            slug += static_cast<char>(std::tolower(c));
            pending_dash = false;
        } else {
            pending_dash = true;
        }
    }
    return slug.empty() ? "script" : slug;
}

ChainClock system_clock_ms() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

ChainClock fixed_clock(std::int64_t value) {
    return [value] { return value; };
}

std::string ChainLog::to_jsonl() const {
    std::ostringstream out;
    for (const LogRecord& record : records) {
        nlohmann::json line{
            {"ordinal", record.ordinal},
            {"request", request_to_json(record.request)},
            {"response", response_to_json(record.response)},
            {"timestamp", record.timestamp_ms},
        };
        out << line.dump() << "\n";
    }
    return out.str();
}

// --- ChainRunner -------------------------------------------------------------

ChainRunner::ChainRunner(GenerationConfig config, const std::vector<KnowledgeDoc>& knowledge,
                         Backend& backend, PromptTemplates templates, StopwordSet stopwords,
                         ChainClock clock)
    : config_(std::move(config)),
      backend_(backend),
      templates_(std::move(templates)),
      stopwords_(std::move(stopwords)),
      clock_(std::move(clock)) {
    for (const KnowledgeDoc& doc : knowledge) {
        auto doc_chunks = chunk_doc(doc, config_.chunk_target_tokens, config_.tokens_per_word);
        chunks_.insert(chunks_.end(), doc_chunks.begin(), doc_chunks.end());
    }
}

std::string ChainRunner::context_for(const std::string& query) const {
    auto ranked = retrieve(query, chunks_, config_.retrieval_k, stopwords_);
    ContextBundle bundle = assemble_context(templates_.system, ranked, config_.context_budget,
                                            config_.tokens_per_word);
    return render_context(bundle);
}

CompletionResponse ChainRunner::call_backend(const CompletionRequest& request, ChainLog& log) {
    CompletionResponse response;
    for (int attempt = 0; attempt < std::max(1, config_.backend_attempts); ++attempt) {
        if (attempt > 0 && config_.backoff_base_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_base_ms << (attempt - 1)));
        }
        response = backend_.complete(request);
        log.records.push_back(
            {static_cast<int>(log.records.size()), request, response, clock_()});
        if (response.finish_reason != FinishReason::BackendError) return response;
    }
    throw ChainError(ChainErrorCode::BackendError,
                     "backend failed after " + std::to_string(config_.backend_attempts) +
                         " attempts: " + response.error);
}

Outline ChainRunner::generate_outline(ChainLog& log) {
    const std::string context = context_for(
        config_.scenario + " interview structure sections greeting closing questions");
    const std::map<std::string, std::string> vars = {
        {"scenario", config_.scenario},
        {"min_sections", std::to_string(config_.outline.min_sections)},
        {"max_sections", std::to_string(config_.outline.max_sections)},
    };

    CompletionRequest request;
    request.system_context = context;
    request.user_prompt = render_template(templates_.outline, vars);
    request.temperature = config_.temperature;
    request.max_tokens = config_.max_output_tokens;

    std::string last_error;
    for (int attempt = 0; attempt <= config_.parse_retries; ++attempt) {
        CompletionResponse response = call_backend(request, log);
        try {
            Outline outline = parse_outline(response.text, config_.outline);
            outline.scenario = config_.scenario;
            return outline;
        } catch (const ChainError& e) {
            last_error = e.what();
            auto repair_vars = vars;
            repair_vars["previous"] = response.text;
            request.user_prompt = render_template(templates_.outline_repair, repair_vars);
        }
    }
    throw ChainError(ChainErrorCode::OutlineParseFailed,
                     "outline still malformed after " + std::to_string(config_.parse_retries) +
                         " repair attempts: " + last_error);
}

std::vector<Turn> ChainRunner::generate_section(const ChainState& state,
                                                const OutlineSection& section, ChainLog& log) {
    const int section_count = static_cast<int>(state.outline.sections.size());
    const bool first = section.ordinal == 0;
    const bool last = section.ordinal == section_count - 1;

    std::string tail_block = "This is the start of the interview.";
    if (!state.transcript_tail.empty()) {
        std::ostringstream tail;
        tail << "The interview so far (most recent turns):\n";
        for (const Turn& turn : state.transcript_tail) {
            tail << to_string(turn.speaker) << ": " << turn.text << "\n";
        }
        tail << "Continue naturally from this point.";
        tail_block = tail.str();
    }

    std::string extra;
    if (first) extra = trim_copy(templates_.section_first_extra);
    if (last) extra = trim_copy(templates_.section_last_extra);

    const std::map<std::string, std::string> vars = {
        {"scenario", config_.scenario},
        {"section_number", std::to_string(section.ordinal + 1)},
        {"section_count", std::to_string(section_count)},
        {"section_title", section.title},
        {"section_goal", section.goal.empty() ? section.title : section.goal},
        {"target_turns", std::to_string(section.target_turns)},
        {"extra", extra},
        {"tail_block", tail_block},
    };

    CompletionRequest request;
    request.system_context =
        context_for(section.title + " " + section.goal + " " + config_.scenario);
    request.user_prompt = render_template(templates_.section, vars);
    request.temperature = config_.temperature;
    request.max_tokens = config_.max_output_tokens;

    std::string last_error;
    bool last_reply_empty = false;
    for (int attempt = 0; attempt <= config_.parse_retries; ++attempt) {
        CompletionResponse response = call_backend(request, log);
        last_reply_empty = trim_copy(response.text).empty();
        try {
            if (last_reply_empty) {
                throw ChainError(ChainErrorCode::EmptySection, "backend returned no text");
            }
            Script parsed = parse_script(response.text, ScriptFormat::Plain);
            return parsed.turns;
        } catch (const std::exception& e) {
            last_error = e.what();
            auto repair_vars = vars;
            repair_vars["previous"] = response.text;
            request.user_prompt = render_template(templates_.section_repair, repair_vars);
        }
    }
    throw ChainError(last_reply_empty ? ChainErrorCode::EmptySection
                                      : ChainErrorCode::SectionParseFailed,
                     "section '" + section.title + "' still malformed after " +
                         std::to_string(config_.parse_retries) +
                         " repair attempts: " + last_error);
}

Script ChainRunner::run(ChainLog& log) {
    ChainState state;
    state.outline = generate_outline(log);
    last_outline_ = state.outline;
    for (const OutlineSection& section : state.outline.sections) {
        std::vector<Turn> turns = generate_section(state, section, log);
        state.completed_sections.push_back(turns);
        // Rebuild the tail as the suffix of everything generated so far.
        std::vector<Turn> all;
        for (const auto& done : state.completed_sections) {
            all.insert(all.end(), done.begin(), done.end());
        }
        const size_t k = static_cast<size_t>(std::max(0, config_.carry_over_turns));
        const size_t from = all.size() > k ? all.size() - k : 0;
        state.transcript_tail.assign(all.begin() + static_cast<std::ptrdiff_t>(from), all.end());
    }
    return concatenate(state.outline, state.completed_sections);
}

}  // namespace elicit
