#pragma once

#include "elicit/quality.hpp"

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>

namespace elicit {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Everything the CLI needs to wire the modules together. Values merge with
// precedence flags > environment > config file > defaults.
struct AppConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4";
    std::string api_key_env = "ELICIT_API_KEY";
    std::string backend = "http";  // http | mock | stub
    double temperature = 0.7;
    int max_output_tokens = 1024;
    int carry_over_turns = 6;
    int context_budget = 2000;
    int retrieval_k = 4;
    int chunk_target_tokens = 160;
    std::string knowledge_dir;
    std::string output_dir = ".";
    std::string data_dir;  // defaults to the repo data directory
    std::string fixtures_dir;
    std::string scorer = "default";
    MetricWeights weights;

    void validate() const;  // throws ConfigError on nonpositive numerics
};

std::string default_data_dir();

// Applies a config-file JSON object over defaults. Unknown keys are errors so
// typos fail loudly.
void apply_config_json(AppConfig& config, const nlohmann::json& doc);

// Recognized variables: ELICIT_ENDPOINT, ELICIT_MODEL, ELICIT_BACKEND,
// ELICIT_DATA_DIR, ELICIT_KNOWLEDGE_DIR, ELICIT_OUTPUT_DIR, ELICIT_FIXTURES_DIR.
void apply_env(AppConfig& config, const std::map<std::string, std::string>& env);
void apply_process_env(AppConfig& config);

// Loads path if given, otherwise ./elicit.json when present.
AppConfig load_config_file(const std::string& path);

}  // namespace elicit
