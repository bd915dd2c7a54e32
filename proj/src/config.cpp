#include "elicit/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace elicit {

std::string default_data_dir() { return ELICIT_DEFAULT_DATA_DIR; }

void AppConfig::validate() const {
    auto positive = [](const char* name, auto value) {
        if (value <= 0) {
            throw ConfigError(std::string(name) + " must be positive, got " +
                              std::to_string(value));
        }
    };
    positive("max_output_tokens", max_output_tokens);
    positive("context_budget", context_budget);
    positive("retrieval_k", retrieval_k);
    if (chunk_target_tokens < 32) {
        throw ConfigError("chunk_target_tokens must be at least 32");
    }
    if (carry_over_turns < 0) {
        throw ConfigError("carry_over_turns must not be negative");
    }
    if (temperature < 0.0) {
        throw ConfigError("temperature must not be negative");
    }
    if (backend != "http" && backend != "mock" && backend != "stub") {
        throw ConfigError("backend must be one of: http, mock, stub");
    }
    const double weight_sum =
        weights.grammaticality + weights.non_redundancy + weights.focus + weights.coherence;
    if (weight_sum <= 0.0) {
        throw ConfigError("metric weights must sum to a positive value");
    }
}

void apply_config_json(AppConfig& config, const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config file must hold a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "endpoint") config.endpoint = value.get<std::string>();
            else if (key == "model") config.model = value.get<std::string>();
            else if (key == "api_key_env") config.api_key_env = value.get<std::string>();
            else if (key == "backend") config.backend = value.get<std::string>();
            else if (key == "temperature") config.temperature = value.get<double>();
            else if (key == "max_output_tokens") config.max_output_tokens = value.get<int>();
            else if (key == "carry_over_turns") config.carry_over_turns = value.get<int>();
            else if (key == "context_budget") config.context_budget = value.get<int>();
            else if (key == "retrieval_k") config.retrieval_k = value.get<int>();
            else if (key == "chunk_target_tokens")
                config.chunk_target_tokens = value.get<int>();
            else if (key == "knowledge_dir") config.knowledge_dir = value.get<std::string>();
            else if (key == "output_dir") config.output_dir = value.get<std::string>();
            else if (key == "data_dir") config.data_dir = value.get<std::string>();
            else if (key == "fixtures_dir") config.fixtures_dir = value.get<std::string>();
            else if (key == "scorer") config.scorer = value.get<std::string>();
            else if (key == "weights") {
                config.weights.grammaticality = value.value("grammaticality", 1.0);
                config.weights.non_redundancy = value.value("non_redundancy", 1.0);
                config.weights.focus = value.value("focus", 1.0);
                config.weights.coherence = value.value("coherence", 1.0);
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config key '" + key + "' has the wrong type: " + e.what());
        }
    }
}

void apply_env(AppConfig& config, const std::map<std::string, std::string>& env) {
    auto pick = [&](const char* name, std::string& target) {
        auto it = env.find(name);
        if (it != env.end() && !it->second.empty()) target = it->second;
    };
    pick("ELICIT_ENDPOINT", config.endpoint);
    pick("ELICIT_MODEL", config.model);
    pick("ELICIT_BACKEND", config.backend);
    pick("ELICIT_DATA_DIR", config.data_dir);
    pick("ELICIT_KNOWLEDGE_DIR", config.knowledge_dir);
    pick("ELICIT_OUTPUT_DIR", config.output_dir);
    pick("ELICIT_FIXTURES_DIR", config.fixtures_dir);
}

void apply_process_env(AppConfig& config) {
    std::map<std::string, std::string> env;
    for (const char* name : {"ELICIT_ENDPOINT", "ELICIT_MODEL", "ELICIT_BACKEND",
                             "ELICIT_DATA_DIR", "ELICIT_KNOWLEDGE_DIR", "ELICIT_OUTPUT_DIR",
                             "ELICIT_FIXTURES_DIR"}) {
        if (const char* value = std::getenv(name)) env[name] = value;
    }
    apply_env(config, env);
}

AppConfig load_config_file(const std::string& path) {
    AppConfig config;
    config.data_dir = default_data_dir();
    if (path.empty()) return config;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    apply_config_json(config, doc);
    return config;
}

}  // namespace elicit
