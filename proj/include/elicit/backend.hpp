#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace elicit {

enum class FinishReason { Complete, LengthCapped, BackendError };

std::string to_string(FinishReason reason);

struct CompletionRequest {
    std::string system_context;
    std::string user_prompt;
    double temperature = 0.7;
    int max_tokens = 1024;
};

struct CompletionResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::Complete;
    std::string error;  // set when finish_reason == BackendError
};

// Transport-independent view of a request; also the replay-fixture key input.
nlohmann::json request_to_json(const CompletionRequest& request);
nlohmann::json response_to_json(const CompletionResponse& response);
CompletionResponse response_from_json(const nlohmann::json& doc);

// Stable FNV-1a 64-bit hash of the canonical request JSON, as 16 hex digits.
// Fixture files are named <fingerprint>.json.
std::string request_fingerprint(const CompletionRequest& request);

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct HttpBackendOptions {
    std::string endpoint;  // full URL of a chat-completion-compatible endpoint
    std::string model;
    std::string api_key;
    int timeout_seconds = 60;
};

// POSTs {model, messages:[{role, content}], temperature, max_tokens} with a
// bearer token. Transport and non-2xx failures come back as BackendError
// responses, never exceptions.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions options);
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return "http"; }

private:
    HttpBackendOptions options_;
};

// Replays recorded fixtures from a directory, keyed by request fingerprint.
// A missing fixture is a BackendError naming the fingerprint, so new requests
// can be recorded and dropped in.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(std::filesystem::path fixture_dir);
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return "mock"; }

private:
    std::filesystem::path fixture_dir_;
};

// Wraps another backend and writes a {request, response} fixture per call.
class RecordingBackend : public Backend {
public:
    RecordingBackend(Backend& inner, std::filesystem::path fixture_dir);
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return inner_.name() + "+record"; }

private:
    Backend& inner_;
    std::filesystem::path fixture_dir_;
};

// Deterministic synthetic generator: replies to outline prompts with a fixed
// five-section plan and to section prompts with alternating tagged turns
// derived from the prompt text. Pure function of the request; exists so the
// whole pipeline (and fixture recording) runs offline.
class StubBackend : public Backend {
public:
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return "stub"; }
};

}  // namespace elicit
