#include "elicit/backend.hpp"

#include <httplib.h>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

namespace elicit {

namespace {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

FinishReason finish_reason_from_string(const std::string& value) {
    if (value == "length_capped") return FinishReason::LengthCapped;
    if (value == "backend_error") return FinishReason::BackendError;
    return FinishReason::Complete;
}

}  // namespace

std::string to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::Complete: return "complete";
        case FinishReason::LengthCapped: return "length_capped";
        case FinishReason::BackendError: return "backend_error";
    }
    return "complete";
}

nlohmann::json request_to_json(const CompletionRequest& request) {
    return nlohmann::json{
        {"system", request.system_context},
        {"user", request.user_prompt},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
}

nlohmann::json response_to_json(const CompletionResponse& response) {
    return nlohmann::json{
        {"text", response.text},
        {"finish_reason", to_string(response.finish_reason)},
        {"error", response.error},
    };
}

CompletionResponse response_from_json(const nlohmann::json& doc) {
    CompletionResponse response;
    response.text = doc.value("text", "");
    response.finish_reason = finish_reason_from_string(doc.value("finish_reason", "complete"));
    response.error = doc.value("error", "");
    return response;
}

std::string request_fingerprint(const CompletionRequest& request) {
    const std::string canonical = request_to_json(request).dump();
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical);
    return out.str();
}

// --- HttpBackend -----------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    CompletionResponse response;

    const auto scheme_end = options_.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        response.finish_reason = FinishReason::BackendError;
        response.error = "endpoint is not a URL: " + options_.endpoint;
        return response;
    }
    const auto path_start = options_.endpoint.find('/', scheme_end + 3);
    const std::string base = options_.endpoint.substr(0, path_start);
    const std::string path =
        path_start == std::string::npos ? "/" : options_.endpoint.substr(path_start);

    nlohmann::json body;
    body["model"] = options_.model;
    body["messages"] = nlohmann::json::array();
    if (!request.system_context.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", request.system_context}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", request.user_prompt}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;

    httplib::Client client(base);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    client.set_follow_location(true);
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
    }

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        response.finish_reason = FinishReason::BackendError;
        response.error = "transport failure: " + httplib::to_string(res.error());
        return response;
    }
    if (res->status < 200 || res->status >= 300) {
        response.finish_reason = FinishReason::BackendError;
        response.error = "HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200);
        return response;
    }
    try {
        nlohmann::json doc = nlohmann::json::parse(res->body);
        const auto& choice = doc.at("choices").at(0);
        response.text = choice.at("message").at("content").get<std::string>();
        const std::string finish = choice.value("finish_reason", "stop");
        response.finish_reason =
            finish == "length" ? FinishReason::LengthCapped : FinishReason::Complete;
    } catch (const nlohmann::json::exception& e) {
        response.finish_reason = FinishReason::BackendError;
        response.error = std::string("malformed completion payload: ") + e.what();
    }
    return response;
}

// --- ReplayBackend ---------------------------------------------------------

ReplayBackend::ReplayBackend(std::filesystem::path fixture_dir)
    : fixture_dir_(std::move(fixture_dir)) {}

CompletionResponse ReplayBackend::complete(const CompletionRequest& request) {
    const std::string fingerprint = request_fingerprint(request);
    const auto path = fixture_dir_ / (fingerprint + ".json");
    if (!std::filesystem::exists(path)) {
        CompletionResponse response;
        response.finish_reason = FinishReason::BackendError;
        response.error = "no fixture " + fingerprint + ".json in " + fixture_dir_.string() +
                         " (record it with --record)";
        return response;
    }
    try {
        nlohmann::json doc = nlohmann::json::parse(read_text_file(path));
        return response_from_json(doc.at("response"));
    } catch (const nlohmann::json::exception& e) {
        CompletionResponse response;
        response.finish_reason = FinishReason::BackendError;
        response.error = "fixture " + fingerprint + ".json is malformed: " + e.what();
        return response;
    }
}

// --- RecordingBackend ------------------------------------------------------

RecordingBackend::RecordingBackend(Backend& inner, std::filesystem::path fixture_dir)
    : inner_(inner), fixture_dir_(std::move(fixture_dir)) {
    std::filesystem::create_directories(fixture_dir_);
}

CompletionResponse RecordingBackend::complete(const CompletionRequest& request) {
    CompletionResponse response = inner_.complete(request);
    nlohmann::json fixture;
    fixture["request"] = request_to_json(request);
    fixture["response"] = response_to_json(response);
    const auto path = fixture_dir_ / (request_fingerprint(request) + ".json");
    std::ofstream out(path, std::ios::binary);
    out << fixture.dump(2) << "\n";
    return response;
}

// --- StubBackend -----------------------------------------------------------

namespace {

std::string stub_outline(const std::string& scenario) {
    std::ostringstream out;
    out << "1. Greeting — welcome the stakeholder and build rapport (turns: 4)\n"
        << "2. Role and Context — understand who the stakeholder is and how they work with "
        << scenario << " today (turns: 4)\n"
        << "3. Current Process — walk through the as-is process and its pain points (turns: 6)\n"
        << "4. Desired Features — explore what the to-be " << scenario
        << " must do (turns: 6)\n"
        << "5. Closing — summarize the discussion and confirm next steps (turns: 4)\n";
    return out.str();
}

std::string capture(const std::string& text, const std::regex& pattern) {
    std::smatch match;
    if (std::regex_search(text, match, pattern)) return match[1].str();
    return "";
}

std::string stub_interviewer_line(const std::string& topic, const std::string& scenario,
                                  int turn, bool first_section, bool last_section,
                                  bool ask_stakeholders, int total_turns) {
    if (first_section && turn == 0) {
        return "Hello, thank you for taking the time to talk with me today. I'm the analyst "
               "working on the " + scenario + ", and I'd like to understand your needs. "
               "How are you today?";
    }
    if (last_section && turn + 2 >= total_turns) {
        return "To summarize, we discussed your current way of working, the main features you "
               "need from the " + scenario + ", and the constraints we have to respect. Does "
               "that sound accurate, and is there anything to add?";
    }
    if (ask_stakeholders && turn == 2) {
        return "Besides you, are there other stakeholders we should involve? Anyone else whose "
               "work would change with the " + scenario + "?";
    }
    switch (turn % 3) {
        case 0:
            return "Could you tell me more about " + topic + "? What matters most to you there?";
        case 1:
            return "That's helpful context. How does this part of " + topic +
                   " work for you today?";
        default:
            return "I see. If the " + scenario + " handled that for you, what would a good "
                   "outcome look like?";
    }
}

std::string stub_stakeholder_line(const std::string& topic, const std::string& scenario,
                                  int turn, bool last_section, int total_turns) {
    if (last_section && turn + 1 >= total_turns) {
        return "Yes, that covers it well. Nothing to add from my side, and thank you for "
               "walking through it so carefully.";
    }
    switch (turn % 3) {
        case 1:
            return "Sure. For " + topic + ", the main thing is that it fits how we already "
                   "work; today we handle most of it manually and it takes real effort.";
        case 2:
            return "Honestly, the current process is slow. A good " + scenario +
                   " would save us time every single week, especially around " + topic + ".";
        default:
            return "That would help a lot. As long as it stays simple to use, my team would "
                   "pick it up quickly.";
    }
}

}  // namespace

CompletionResponse StubBackend::complete(const CompletionRequest& request) {
    CompletionResponse response;
    const std::string& prompt = request.user_prompt;
    const std::string scenario = capture(prompt, std::regex(R"(Scenario:\s*([^\n]+))"));

    if (prompt.find("numbered list of interview sections") != std::string::npos) {
        response.text = stub_outline(scenario.empty() ? "the system" : scenario);
        return response;
    }

    const std::string section_no = capture(prompt, std::regex(R"(Section\s+(\d+)\s+of)"));
    const std::string section_count = capture(prompt, std::regex(R"(Section\s+\d+\s+of\s+(\d+))"));
    const std::string title =
        capture(prompt, std::regex(R"(Section\s+\d+\s+of\s+\d+:\s*([^\n]+))"));
    const std::string turns_text = capture(prompt, std::regex(R"(Write about\s+(\d+)\s+dialogue)"));

    const int number = section_no.empty() ? 1 : std::stoi(section_no);
    const int count = section_count.empty() ? 1 : std::stoi(section_count);
    const int turns = std::max(2, turns_text.empty() ? 4 : std::stoi(turns_text));
    const bool first_section = number == 1;
    const bool last_section = number == count;
    const bool ask_stakeholders = count > 2 && number == count - 1;
    const std::string topic = title.empty() ? "your work" : title;
    const std::string subject = scenario.empty() ? "new system" : scenario;

    std::ostringstream out;
    for (int t = 0; t < turns; ++t) {
        if (t % 2 == 0) {
            out << "Interviewer: "
                << stub_interviewer_line(topic, subject, t, first_section, last_section,
                                         ask_stakeholders, turns)
                << "\n";
        } else {
            out << "Stakeholder: "
                << stub_stakeholder_line(topic, subject, t, last_section, turns) << "\n";
        }
    }
    response.text = out.str();
    return response;
}

}  // namespace elicit
