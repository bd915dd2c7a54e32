// elicit: generate and evaluate requirements-elicitation interview scripts.
//
// Commands: generate, outline, analyze, score, lint, rubric init|check|report,
// fetch. Exit status: 0 success, 1 validation/parse error, 2 backend/network
// error, 3 configuration error.

#include "elicit/analytics.hpp"
#include "elicit/chain.hpp"
#include "elicit/config.hpp"
#include "elicit/knowledge.hpp"
#include "elicit/quality.hpp"
#include "elicit/rubric.hpp"
#include "elicit/transcript.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
#include <openssl/evp.h>
#endif

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace elicit;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;       // validation / parse errors
constexpr int kBackendFail = 2;   // backend / network errors
constexpr int kConfigFail = 3;    // configuration errors

struct CliFlags {
    std::optional<std::string> endpoint, model, backend, knowledge_dir, output_dir, data_dir,
        fixtures_dir, scorer;
    std::optional<double> temperature;
    std::optional<int> max_tokens, carry_over, context_budget, retrieval_k;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

AppConfig resolve_config(const std::string& config_path, const CliFlags& flags) {
    std::string path = config_path;
    if (path.empty() && fs::exists("elicit.json")) path = "elicit.json";
    AppConfig config = load_config_file(path);
    apply_process_env(config);
    if (flags.endpoint) config.endpoint = *flags.endpoint;
    if (flags.model) config.model = *flags.model;
    if (flags.backend) config.backend = *flags.backend;
    if (flags.knowledge_dir) config.knowledge_dir = *flags.knowledge_dir;
    if (flags.output_dir) config.output_dir = *flags.output_dir;
    if (flags.data_dir) config.data_dir = *flags.data_dir;
    if (flags.fixtures_dir) config.fixtures_dir = *flags.fixtures_dir;
    if (flags.scorer) config.scorer = *flags.scorer;
    if (flags.temperature) config.temperature = *flags.temperature;
    if (flags.max_tokens) config.max_output_tokens = *flags.max_tokens;
    if (flags.carry_over) config.carry_over_turns = *flags.carry_over;
    if (flags.context_budget) config.context_budget = *flags.context_budget;
    if (flags.retrieval_k) config.retrieval_k = *flags.retrieval_k;
    config.validate();
    return config;
}

// Structured when the first non-space byte is '{', plain otherwise. Parse
// errors are rethrown with the file (and line, when known) in the message.
Script load_script_file(const fs::path& path,
                        const std::map<std::string, Speaker>& aliases, bool strip_headers) {
    std::string text = read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    Script script;
    try {
        if (first != std::string::npos && text[first] == '{') {
            script = parse_script(text, ScriptFormat::Structured);
        } else {
            if (!aliases.empty() || strip_headers) {
                text = normalize_transcript(text, aliases, strip_headers);
            }
            script = parse_script(text, ScriptFormat::Plain);
        }
    } catch (const ParseError& e) {
        std::string where = path.string();
        if (e.line() > 0) where += ":" + std::to_string(e.line());
        throw ParseError(e.code(), where + ": " + e.what(), e.line());
    }
    if (script.id.empty()) script.id = path.stem().string();
    return script;
}

std::map<std::string, Speaker> parse_alias_flags(const std::vector<std::string>& entries) {
    std::map<std::string, Speaker> aliases;
    for (const auto& entry : entries) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("alias must look like LABEL=Interviewer|Stakeholder: " + entry);
        }
        Speaker speaker;
        if (!speaker_from_label(entry.substr(eq + 1), speaker)) {
            throw ConfigError("alias target must be Interviewer or Stakeholder: " + entry);
        }
        aliases[entry.substr(0, eq)] = speaker;
    }
    return aliases;
}

struct ChainSetup {
    std::vector<KnowledgeDoc> docs;
    StopwordSet stopwords;
    PromptTemplates templates;
    GenerationConfig gen;
    std::unique_ptr<Backend> base;
    std::unique_ptr<Backend> recorder;
    Backend* backend = nullptr;
    ChainClock clock;
};

// Shared wiring for generate/outline. Throws ConfigError on setup problems.
ChainSetup make_chain_setup(const AppConfig& config, const std::string& scenario,
                            const std::string& record_dir) {
    ChainSetup setup;
    const fs::path data_dir = config.data_dir.empty() ? default_data_dir() : config.data_dir;
    const fs::path knowledge_dir = config.knowledge_dir.empty()
                                       ? data_dir / "knowledge_example"
                                       : fs::path(config.knowledge_dir);
    if (!fs::exists(knowledge_dir)) {
        throw ConfigError("knowledge directory does not exist: " + knowledge_dir.string());
    }
    setup.docs = load_knowledge(knowledge_dir);
    setup.stopwords = load_stopwords((data_dir / "stopwords_en.txt").string());
    setup.templates = load_prompt_templates(data_dir / "prompts");

    setup.gen.scenario = scenario;
    setup.gen.temperature = config.temperature;
    setup.gen.max_output_tokens = config.max_output_tokens;
    setup.gen.carry_over_turns = config.carry_over_turns;
    setup.gen.context_budget = config.context_budget;
    setup.gen.retrieval_k = config.retrieval_k;
    setup.gen.chunk_target_tokens = config.chunk_target_tokens;

    if (config.backend == "http") {
        const char* key = std::getenv(config.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("credential not set: export " + config.api_key_env +
                              " or pick --backend mock|stub");
        }
        HttpBackendOptions options;
        options.endpoint = config.endpoint;
        options.model = config.model;
        options.api_key = key;
        setup.base = std::make_unique<HttpBackend>(options);
        setup.clock = system_clock_ms();
    } else if (config.backend == "mock") {
        const fs::path fixtures = config.fixtures_dir.empty()
                                      ? data_dir / "fixtures" / "demo"
                                      : fs::path(config.fixtures_dir);
        setup.base = std::make_unique<ReplayBackend>(fixtures);
        setup.clock = fixed_clock(0);
    } else {
        setup.base = std::make_unique<StubBackend>();
        setup.clock = fixed_clock(0);
    }
    setup.backend = setup.base.get();
    if (!record_dir.empty()) {
        setup.recorder = std::make_unique<RecordingBackend>(*setup.base, record_dir);
        setup.backend = setup.recorder.get();
    }
    return setup;
}

int cmd_generate(const AppConfig& config, const std::string& scenario,
                 const std::string& record_dir, bool force) {
    ChainSetup setup = make_chain_setup(config, scenario, record_dir);

    const std::string id = scenario_slug(scenario);
    const fs::path out_dir = config.output_dir;
    const fs::path plain_path = out_dir / (id + ".txt");
    const fs::path json_path = out_dir / (id + ".json");
    const fs::path log_path = out_dir / (id + ".chainlog.jsonl");
    for (const fs::path& path : {plain_path, json_path, log_path}) {
        if (!force && fs::exists(path)) {
            std::cerr << "error: " << path.string() << " exists; pass --force to overwrite\n";
            return kInvalid;
        }
    }

    ChainRunner runner(setup.gen, setup.docs, *setup.backend, setup.templates,
                       setup.stopwords, setup.clock);
    ChainLog log;
    Script script;
    try {
        script = runner.run(log);
    } catch (const ChainError& e) {
        write_file(log_path, log.to_jsonl());  // partial log for the post-mortem
        std::cerr << "error: " << e.what() << "\n"
                  << "partial log: " << log_path.string() << "\n";
        return e.code() == ChainErrorCode::BackendError ? kBackendFail : kInvalid;
    }

    write_file(plain_path, serialize_script(script, ScriptFormat::Plain));
    write_file(json_path, serialize_script(script, ScriptFormat::Structured));
    write_file(log_path, log.to_jsonl());

    std::cout << "script id:     " << script.id << "\n"
              << "sections:      " << runner.last_outline().sections.size() << "\n"
              << "turns:         " << script.turns.size() << "\n"
              << "backend calls: " << log.backend_calls() << "\n"
              << "plain:         " << plain_path.string() << "\n"
              << "structured:    " << json_path.string() << "\n"
              << "chain log:     " << log_path.string() << "\n";
    return kOk;
}

int cmd_outline(const AppConfig& config, const std::string& scenario,
                const std::string& record_dir) {
    ChainSetup setup = make_chain_setup(config, scenario, record_dir);
    ChainRunner runner(setup.gen, setup.docs, *setup.backend, setup.templates,
                       setup.stopwords, setup.clock);
    ChainLog log;
    Outline outline = runner.generate_outline(log);
    for (const OutlineSection& section : outline.sections) {
        std::cout << section.ordinal + 1 << ". " << section.title;
        if (!section.goal.empty()) std::cout << " — " << section.goal;
        std::cout << " (turns: " << section.target_turns << ")\n";
    }
    return kOk;
}

int cmd_analyze(const AppConfig& config, const std::vector<std::string>& files, int top_k,
                const std::string& json_path, const std::map<std::string, Speaker>& aliases,
                bool strip_headers) {
    const fs::path data_dir = config.data_dir.empty() ? default_data_dir() : config.data_dir;
    const StopwordSet stopwords = load_stopwords((data_dir / "stopwords_en.txt").string());

    std::vector<Script> corpus;
    for (const auto& file : files) {
        Script script = load_script_file(file, aliases, strip_headers);
        for (const Script& existing : corpus) {
            if (existing.id == script.id) {
                throw ParseError(ParseErrorCode::InvalidScript,
                                 "duplicate script id '" + script.id + "' from " + file);
            }
        }
        corpus.push_back(std::move(script));
    }

    std::vector<ScriptReport> reports;
    nlohmann::json exported = nlohmann::json::array();
    for (const Script& script : corpus) {
        reports.push_back(script_report(corpus, script.id, stopwords, top_k));
        exported.push_back(report_to_json(reports.back()));
    }
    std::cout << render_report_table(reports);
    const fs::path target = json_path.empty()
                                ? fs::path(config.output_dir) / "analysis.json"
                                : fs::path(json_path);
    write_file(target, exported.dump(2) + "\n");
    std::cout << "json report: " << target.string() << "\n";
    return kOk;
}

int cmd_score(const AppConfig& config, const std::vector<std::string>& files,
              const std::string& json_path) {
    const GrammarScorer scorer = get_grammar_scorer(config.scorer);
    std::vector<std::pair<std::string, QualityReport>> reports;
    nlohmann::json exported = nlohmann::json::array();
    for (const auto& file : files) {
        Script script = load_script_file(file, {}, false);
        QualityReport report = score_script(script, config.weights, scorer);
        exported.push_back(quality_to_json(script.id, report));
        reports.emplace_back(script.id, std::move(report));
    }
    std::cout << render_quality_table(reports);
    const fs::path target = json_path.empty()
                                ? fs::path(config.output_dir) / "quality.json"
                                : fs::path(json_path);
    write_file(target, exported.dump(2) + "\n");
    std::cout << "json report: " << target.string() << "\n";
    return kOk;
}

int cmd_lint(const AppConfig& config, const std::vector<std::string>& files,
             const std::string& json_path) {
    const fs::path data_dir = config.data_dir.empty() ? default_data_dir() : config.data_dir;
    const LintPatterns patterns = LintPatterns::load(data_dir / "patterns");
    nlohmann::json exported = nlohmann::json::object();
    for (const auto& file : files) {
        Script script = load_script_file(file, {}, false);
        auto findings = lint_script(script, patterns);
        if (files.size() > 1) std::cout << script.id << ":\n";
        if (findings.empty()) std::cout << "no findings\n";
        for (const auto& finding : findings) {
            std::cout << to_string(finding.severity) << " " << finding.check;
            if (finding.tag) std::cout << " [" << to_string(*finding.tag) << "]";
            std::cout << ": " << finding.message;
            if (!finding.turn_refs.empty()) {
                std::cout << " (turns:";
                for (int index : finding.turn_refs) std::cout << " " << index;
                std::cout << ")";
            }
            std::cout << "\n";
        }
        exported[script.id] = findings_to_json(findings);
    }
    if (!json_path.empty()) {
        write_file(json_path, exported.dump(2) + "\n");
        std::cout << "json report: " << json_path << "\n";
    }
    return kOk;
}

const char* rubric_error_name(RubricErrorCode code) {
    switch (code) {
        case RubricErrorCode::MissingScore: return "MissingScore";
        case RubricErrorCode::OutOfRange: return "OutOfRange";
        case RubricErrorCode::DuplicateEntry: return "DuplicateEntry";
        case RubricErrorCode::BadDocument: return "BadDocument";
        case RubricErrorCode::EmptyInput: return "EmptyInput";
    }
    return "RubricError";
}

int cmd_rubric_init(const AppConfig& config, const std::string& file,
                    const std::string& evaluator, const std::string& out_path, bool force) {
    Script script = load_script_file(file, {}, false);
    // One record file per (script, evaluator) keeps multi-evaluator merges trivial.
    const std::string stem =
        evaluator.empty() ? script.id : script.id + "." + evaluator;
    fs::path target = out_path.empty()
                          ? fs::path(config.output_dir) / (stem + ".eval.json")
                          : fs::path(out_path);
    if (!force && fs::exists(target)) {
        std::cerr << "error: " << target.string() << " exists; pass --force to overwrite\n";
        return kInvalid;
    }
    write_file(target, new_evaluation_template(script, evaluator).dump(2) + "\n");
    std::cout << "template: " << target.string() << "\n";
    return kOk;
}

int cmd_rubric_check(const std::vector<std::string>& files) {
    int status = kOk;
    for (const auto& file : files) {
        try {
            EvaluationRecord record = validate_evaluation(read_file(file));
            std::cout << file << ": ok (script " << record.script_id << ", evaluator "
                      << (record.evaluator_id.empty() ? "?" : record.evaluator_id) << ")\n";
        } catch (const RubricError& e) {
            std::cout << file << ": " << rubric_error_name(e.code()) << ": " << e.what()
                      << "\n";
            status = kInvalid;
        }
    }
    return status;
}

int cmd_rubric_report(const AppConfig& config, const std::vector<std::string>& files,
                      const std::string& json_path) {
    std::vector<EvaluationRecord> records;
    for (const auto& file : files) {
        records.push_back(validate_evaluation(read_file(file)));
    }
    AggregateTables tables = aggregate(records);
    std::cout << "Natural-language dimensions (1-5):\n"
              << tables.nl_table << "\nInterview rubric (1-5):\n"
              << tables.rubric_table;
    const fs::path target = json_path.empty()
                                ? fs::path(config.output_dir) / "rubric_report.json"
                                : fs::path(json_path);
    write_file(target, tables.as_json.dump(2) + "\n");
    std::cout << "json report: " << target.string() << "\n";
    return kOk;
}

#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
    std::ostringstream out;
    for (unsigned int i = 0; i < length; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
}
#endif

int cmd_fetch(const std::string& url, const std::string& out_path,
              const std::string& expected_sha256) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        std::cerr << "error: not a URL: " << url << "\n";
        return kInvalid;
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string base = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    client.set_follow_location(true);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(120, 0);
    auto res = client.Get(path);
    if (!res) {
        std::cerr << "error: download failed: " << httplib::to_string(res.error()) << "\n";
        return kBackendFail;
    }
    if (res->status != 200) {
        std::cerr << "error: HTTP " << res->status << " fetching " << url << "\n";
        return kBackendFail;
    }

    if (!expected_sha256.empty()) {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
        const std::string actual = sha256_hex(res->body);
        std::string expected = expected_sha256;
        std::transform(expected.begin(), expected.end(), expected.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (actual != expected) {
            std::cerr << "error: checksum mismatch\n  expected " << expected << "\n  actual   "
                      << actual << "\nfile discarded\n";
            return kInvalid;
        }
#else
        std::cerr << "error: built without OpenSSL; --sha256 unavailable\n";
        return kConfigFail;
#endif
    }
    write_file(out_path, res->body);
    std::cout << "saved " << out_path << " (" << res->body.size() << " bytes)\n";
    return kOk;
}

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const ConfigError*>(&error)) return kConfigFail;
    if (dynamic_cast<const KnowledgeError*>(&error)) return kConfigFail;  // setup problems
    if (auto* chain = dynamic_cast<const ChainError*>(&error)) {
        return chain->code() == ChainErrorCode::BackendError ? kBackendFail : kInvalid;
    }
    if (auto* quality = dynamic_cast<const QualityError*>(&error)) {
        return quality->code() == QualityErrorCode::NoScorerRegistered ? kConfigFail
                                                                       : kInvalid;
    }
    return kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate and evaluate requirements-elicitation interview scripts"};
    app.require_subcommand(1);

    std::string config_path;
    CliFlags flags;
    app.add_option("--config", config_path, "JSON config file (default: ./elicit.json)");
    app.add_option("--endpoint", flags.endpoint, "chat-completion endpoint URL");
    app.add_option("--model", flags.model, "model name");
    app.add_option("--backend", flags.backend, "http | mock | stub");
    app.add_option("--knowledge-dir", flags.knowledge_dir, "knowledge directory");
    app.add_option("--output-dir", flags.output_dir, "output directory");
    app.add_option("--data-dir", flags.data_dir, "data directory (prompts, patterns, stopwords)");
    app.add_option("--fixtures", flags.fixtures_dir, "fixture directory for the mock backend");
    app.add_option("--scorer", flags.scorer, "grammaticality scorer name");
    app.add_option("--temperature", flags.temperature, "sampling temperature");
    app.add_option("--max-tokens", flags.max_tokens, "max output tokens per call");
    app.add_option("--carry-over", flags.carry_over, "turns echoed into the next prompt");
    app.add_option("--context-budget", flags.context_budget, "token budget per prompt context");
    app.add_option("--retrieval-k", flags.retrieval_k, "chunks retrieved per prompt");

    // generate
    auto* generate = app.add_subcommand("generate", "run the full prompt chain");
    generate->fallthrough();
    std::string scenario, record_dir;
    bool force = false;
    generate->add_option("--scenario", scenario, "scenario description")->required();
    generate->add_option("--record", record_dir, "record fixtures into this directory");
    generate->add_flag("--force", force, "overwrite existing outputs");

    // outline
    auto* outline = app.add_subcommand("outline", "generate only the section outline");
    outline->fallthrough();
    std::string outline_scenario, outline_record;
    outline->add_option("--scenario", outline_scenario, "scenario description")->required();
    outline->add_option("--record", outline_record, "record fixtures into this directory");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "dialogue-characteristics report");
    analyze->fallthrough();
    std::vector<std::string> analyze_files, alias_entries;
    std::string analyze_json;
    int top_k = 10;
    bool strip_headers = false;
    analyze->add_option("files", analyze_files, "script files (plain or structured)")
        ->required();
    analyze->add_option("-k,--top-terms", top_k, "number of TF-IDF terms");
    analyze->add_option("--json", analyze_json, "also write the report as JSON");
    analyze->add_option("--alias", alias_entries, "speaker alias, e.g. ANALYST=Interviewer");
    analyze->add_flag("--strip-headers", strip_headers, "drop decorative header lines");

    // score
    auto* score = app.add_subcommand("score", "reference-free quality scores");
    score->fallthrough();
    std::vector<std::string> score_files;
    std::string score_json;
    score->add_option("files", score_files, "script files")->required();
    score->add_option("--json", score_json, "also write the report as JSON");

    // lint
    auto* lint = app.add_subcommand("lint", "mistake-pattern checks");
    lint->fallthrough();
    std::vector<std::string> lint_files;
    std::string lint_json;
    lint->add_option("files", lint_files, "script files")->required();
    lint->add_option("--json", lint_json, "also write findings as JSON");

    // rubric
    auto* rubric = app.add_subcommand("rubric", "expert-evaluation workflow");
    rubric->require_subcommand(1);
    rubric->fallthrough();
    auto* rubric_init = rubric->add_subcommand("init", "write a blank evaluation template");
    rubric_init->fallthrough();
    std::string init_file, init_evaluator, init_out;
    bool init_force = false;
    rubric_init->add_option("script", init_file, "script file")->required();
    rubric_init->add_option("--evaluator", init_evaluator, "evaluator id");
    rubric_init->add_option("-o,--out", init_out, "template path");
    rubric_init->add_flag("--force", init_force, "overwrite an existing template");
    auto* rubric_check = rubric->add_subcommand("check", "validate filled evaluations");
    std::vector<std::string> check_files;
    rubric_check->add_option("files", check_files, "evaluation files")->required();
    auto* rubric_report = rubric->add_subcommand("report", "aggregate evaluations");
    rubric_report->fallthrough();
    std::vector<std::string> report_files;
    std::string report_json;
    rubric_report->add_option("files", report_files, "evaluation files")->required();
    rubric_report->add_option("--json", report_json, "also write tables as JSON");

    // fetch
    auto* fetch = app.add_subcommand("fetch", "download a published archive");
    std::string fetch_url, fetch_out, fetch_sha;
    fetch->add_option("url", fetch_url, "source URL")->required();
    fetch->add_option("-o,--out", fetch_out, "destination file")->required();
    fetch->add_option("--sha256", fetch_sha, "expected SHA-256 of the download");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*generate) {
            return cmd_generate(resolve_config(config_path, flags), scenario, record_dir,
                                force);
        }
        if (*outline) {
            return cmd_outline(resolve_config(config_path, flags), outline_scenario,
                               outline_record);
        }
        if (*analyze) {
            return cmd_analyze(resolve_config(config_path, flags), analyze_files, top_k,
                               analyze_json, parse_alias_flags(alias_entries), strip_headers);
        }
        if (*score) {
            return cmd_score(resolve_config(config_path, flags), score_files, score_json);
        }
        if (*lint) {
            return cmd_lint(resolve_config(config_path, flags), lint_files, lint_json);
        }
        if (*rubric_init) {
            return cmd_rubric_init(resolve_config(config_path, flags), init_file,
                                   init_evaluator, init_out, init_force);
        }
        if (*rubric_check) return cmd_rubric_check(check_files);
        if (*rubric_report) {
            return cmd_rubric_report(resolve_config(config_path, flags), report_files,
                                     report_json);
        }
        if (*fetch) return cmd_fetch(fetch_url, fetch_out, fetch_sha);
    } catch (const ParseError& e) {
        if (e.line() > 0) {
            std::cerr << "error (line " << e.line() << "): " << e.what() << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kOk;
}
