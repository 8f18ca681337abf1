#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace qaap::llm {

enum class TemplateId { parse, extract, gen_background, choose_answer };

std::string_view to_string(TemplateId id);
std::optional<TemplateId> template_id_from_string(std::string_view text);

struct CompletionParams {
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string model_name = "gpt-3.5-turbo";
};

struct CompletionRequest {
    TemplateId template_id = TemplateId::parse;
    std::string filled_prompt;
    CompletionParams params;
};

/// Hex SHA-256 over the canonical JSON encoding of
/// [template_id, filled_prompt, temperature, max_tokens, model_name].
std::string request_digest(const CompletionRequest& request);

struct TraceRecord {
    std::string request_digest;
    std::string template_id;
    std::string completion;
    std::string timestamp;
    std::string model_name;
};

void to_json(nlohmann::json& j, const TraceRecord& r);
void from_json(const nlohmann::json& j, TraceRecord& r);

/// Append-only JSON-lines store of TraceRecords, one per line. The first
/// record seen for a digest wins; appending a digest that is already present
/// is a no-op.
class TraceStore {
public:
    static constexpr std::string_view kFileName = "traces.jsonl";

    /// Loads `<dir>/traces.jsonl` if present. Writes go to the same file.
    explicit TraceStore(std::filesystem::path dir);

    std::optional<std::string> lookup(const std::string& digest) const;
    void append(const TraceRecord& record);
    std::size_t size() const;
    const std::filesystem::path& file() const { return file_; }

private:
    std::filesystem::path file_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> completions_;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// Safe for concurrent callers.
    virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Answers from recorded traces only; unknown digests raise ReplayMiss.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(std::shared_ptr<const TraceStore> store) : store_(std::move(store)) {}
    std::string complete(const CompletionRequest& request) override;

private:
    std::shared_ptr<const TraceStore> store_;
};

/// FIFO queue of canned responses per template id.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() = default;
    void push(TemplateId id, std::string response);
    std::string complete(const CompletionRequest& request) override;
    std::size_t remaining(TemplateId id) const;

private:
    mutable std::mutex mutex_;
    std::map<TemplateId, std::deque<std::string>> queues_;
};

/// Passes requests through to `inner` and stores each completion.
class RecordingBackend : public Backend {
public:
    using Clock = std::function<std::string()>;
    RecordingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<TraceStore> store, Clock clock = {});
    std::string complete(const CompletionRequest& request) override;

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<TraceStore> store_;
    Clock clock_;
};

/// Token bucket holding up to `requests_per_minute` tokens, refilled
/// continuously. acquire() waits up to `max_wait` for a token.
class RateLimiter {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;
    using Sleep = std::function<void(std::chrono::steady_clock::duration)>;

    RateLimiter(double requests_per_minute, std::chrono::steady_clock::duration max_wait, Clock clock = {},
                Sleep sleep = {});

    bool try_acquire();
    /// Throws QuotaExceeded when no token becomes available within max_wait.
    void acquire();

private:
    void refill(std::chrono::steady_clock::time_point now);

    double capacity_;
    double tokens_;
    double per_second_;
    std::chrono::steady_clock::duration max_wait_;
    Clock clock_;
    Sleep sleep_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct LiveConfig {
    std::string api_base;  // e.g. https://api.openai.com/v1
    std::string api_key;
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{60};
    double requests_per_minute = 60.0;
    std::chrono::seconds max_rate_wait{120};

    /// Reads QAAP_API_BASE / QAAP_API_KEY; missing base defaults to the
    /// OpenAI endpoint.
    static LiveConfig from_environment();
};

/// OpenAI-compatible chat-completions client.
class LiveBackend : public Backend {
public:
    using Sleep = std::function<void(std::chrono::milliseconds)>;
    explicit LiveBackend(LiveConfig config, Sleep sleep = {});
    std::string complete(const CompletionRequest& request) override;

    /// Request body sent to `<base>/chat/completions`.
    static nlohmann::json request_body(const CompletionRequest& request);
    /// Pulls choices[0].message.content out of a response body.
    static std::string parse_response(const std::string& body);

private:
    LiveConfig config_;
    Sleep sleep_;
    RateLimiter limiter_;
};

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

struct PromptTemplate {
    TemplateId id;
    std::string version;
    std::string body;
};

/// Templates use `{{slot}}` placeholders. Every placeholder in a template is
/// a required slot.
class PromptLibrary {
public:
    /// Templates compiled in from the repository's prompts/ directory.
    static const PromptLibrary& builtin();
    /// Loads `<dir>/<id>.txt` for every template id.
    static PromptLibrary from_directory(const std::filesystem::path& dir);
    /// Parses the on-disk form: a `version: N` line, a `---` line, the body.
    static PromptTemplate parse_file(TemplateId id, std::string_view contents);

    const PromptTemplate& get(TemplateId id) const;
    std::string render(TemplateId id, const std::map<std::string, std::string>& slots) const;
    std::vector<std::string> slots(TemplateId id) const;
    /// {"parse": "1", ...}
    nlohmann::json versions() const;

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

std::string render_prompt(TemplateId id, const std::map<std::string, std::string>& slots);

/// "1. first\n2. second\n..." as used by the choose_answer template.
std::string numbered_list(const std::vector<std::string>& entries);

}  // namespace qaap::llm
