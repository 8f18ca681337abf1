#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "qaap/llm.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "qaap/digest.hpp"
#include "qaap/error.hpp"
#include "qaap/http_url.hpp"
#include "qaap_builtin_prompts.hpp"

namespace qaap::llm {

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::parse: return "parse";
        case TemplateId::extract: return "extract";
        case TemplateId::gen_background: return "gen_background";
        case TemplateId::choose_answer: return "choose_answer";
    }
    return "parse";
}

std::optional<TemplateId> template_id_from_string(std::string_view text) {
    for (auto id : {TemplateId::parse, TemplateId::extract, TemplateId::gen_background, TemplateId::choose_answer})
        if (to_string(id) == text) return id;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Digest
// ---------------------------------------------------------------------------

namespace {

std::string utc_now_iso() {
    const auto now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string request_digest(const CompletionRequest& request) {
    const nlohmann::json canonical = nlohmann::json::array({to_string(request.template_id), request.filled_prompt,
                                                            request.params.temperature, request.params.max_tokens,
                                                            request.params.model_name});
    // ensure_ascii keeps the encoded bytes identical whatever the platform's
    // handling of non-ASCII input.
    return sha256_hex(canonical.dump(-1, ' ', true));
}

void to_json(nlohmann::json& j, const TraceRecord& r) {
    j = {{"request_digest", r.request_digest},
         {"template_id", r.template_id},
         {"completion", r.completion},
         {"metadata", {{"timestamp", r.timestamp}, {"model_name", r.model_name}}}};
}

void from_json(const nlohmann::json& j, TraceRecord& r) {
    r.request_digest = j.at("request_digest").get<std::string>();
    r.template_id = j.value("template_id", std::string{});
    r.completion = j.at("completion").get<std::string>();
    const auto meta = j.value("metadata", nlohmann::json::object());
    r.timestamp = meta.value("timestamp", std::string{});
    r.model_name = meta.value("model_name", std::string{});
}

// ---------------------------------------------------------------------------
// TraceStore
// ---------------------------------------------------------------------------

TraceStore::TraceStore(std::filesystem::path dir) : file_(std::move(dir) / std::string(kFileName)) {
    std::ifstream in(file_);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        TraceRecord record;
        try {
            record = nlohmann::json::parse(line).get<TraceRecord>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(file_.string() + ":" + std::to_string(line_no) + ": bad trace record: " + e.what());
        }
        completions_.emplace(record.request_digest, record.completion);
    }
}

std::optional<std::string> TraceStore::lookup(const std::string& digest) const {
    std::lock_guard lock(mutex_);
    auto it = completions_.find(digest);
    if (it == completions_.end()) return std::nullopt;
    return it->second;
}

void TraceStore::append(const TraceRecord& record) {
    std::lock_guard lock(mutex_);
    if (completions_.count(record.request_digest)) return;
    std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app | std::ios::binary);
    if (!out) throw ConfigError("cannot write trace file " + file_.string());
    out << nlohmann::json(record).dump() << '\n';
    completions_.emplace(record.request_digest, record.completion);
}

std::size_t TraceStore::size() const {
    std::lock_guard lock(mutex_);
    return completions_.size();
}

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

std::string ReplayBackend::complete(const CompletionRequest& request) {
    const auto digest = request_digest(request);
    if (auto hit = store_->lookup(digest)) return *hit;
    throw ReplayMiss(digest);
}

void ScriptedBackend::push(TemplateId id, std::string response) {
    std::lock_guard lock(mutex_);
    queues_[id].push_back(std::move(response));
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
    std::lock_guard lock(mutex_);
    auto& queue = queues_[request.template_id];
    if (queue.empty())
        throw Error("scripted backend has no response queued for template " +
                    std::string(to_string(request.template_id)));
    auto response = std::move(queue.front());
    queue.pop_front();
    return response;
}

std::size_t ScriptedBackend::remaining(TemplateId id) const {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(id);
    return it == queues_.end() ? 0 : it->second.size();
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<TraceStore> store, Clock clock)
    : inner_(std::move(inner)), store_(std::move(store)), clock_(clock ? std::move(clock) : Clock(utc_now_iso)) {}

std::string RecordingBackend::complete(const CompletionRequest& request) {
    auto completion = inner_->complete(request);
    store_->append(TraceRecord{request_digest(request), std::string(to_string(request.template_id)), completion,
                               clock_(), request.params.model_name});
    return completion;
}

// ---------------------------------------------------------------------------
// RateLimiter
// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute, std::chrono::steady_clock::duration max_wait, Clock clock,
                         Sleep sleep)
    : capacity_(std::max(1.0, requests_per_minute)),
      tokens_(capacity_),
      per_second_(requests_per_minute / 60.0),
      max_wait_(max_wait),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })),
      sleep_(sleep ? std::move(sleep) : Sleep([](auto d) { std::this_thread::sleep_for(d); })),
      last_(clock_()) {
    if (requests_per_minute <= 0) throw ConfigError("requests_per_minute must be positive");
}

void RateLimiter::refill(std::chrono::steady_clock::time_point now) {
    const std::chrono::duration<double> elapsed = now - last_;
    if (elapsed.count() > 0) {
        tokens_ = std::min(capacity_, tokens_ + elapsed.count() * per_second_);
        last_ = now;
    }
}

bool RateLimiter::try_acquire() {
    std::lock_guard lock(mutex_);
    refill(clock_());
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
}

void RateLimiter::acquire() {
    const auto deadline = clock_() + max_wait_;
    while (true) {
        std::chrono::duration<double> wait{};
        {
            std::lock_guard lock(mutex_);
            const auto now = clock_();
            refill(now);
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - tokens_) / per_second_);
            if (now + std::chrono::duration_cast<std::chrono::steady_clock::duration>(wait) > deadline)
                throw QuotaExceeded();
        }
        sleep_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(wait));
    }
}

// ---------------------------------------------------------------------------
// LiveBackend
// ---------------------------------------------------------------------------

LiveConfig LiveConfig::from_environment() {
    LiveConfig config;
    const char* base = std::getenv("QAAP_API_BASE");
    const char* key = std::getenv("QAAP_API_KEY");
    config.api_base = base && *base ? base : "https://api.openai.com/v1";
    config.api_key = key ? key : "";
    return config;
}

LiveBackend::LiveBackend(LiveConfig config, Sleep sleep)
    : config_(std::move(config)),
      sleep_(sleep ? std::move(sleep) : Sleep([](auto d) { std::this_thread::sleep_for(d); })),
      limiter_(config_.requests_per_minute, config_.max_rate_wait) {
    if (config_.api_key.empty()) throw ConfigError("live backend needs an API key (set QAAP_API_KEY)");
    if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
}

nlohmann::json LiveBackend::request_body(const CompletionRequest& request) {
    return {{"model", request.params.model_name},
            {"temperature", request.params.temperature},
            {"max_tokens", request.params.max_tokens},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.filled_prompt}}})}};
}

std::string LiveBackend::parse_response(const std::string& body) {
    try {
        const auto j = nlohmann::json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(200, 1, std::string("unreadable completion body: ") + e.what());
    }
}

std::string LiveBackend::complete(const CompletionRequest& request) {
    const auto url = http::split_url(config_.api_base);
    const auto path = url.path + "/chat/completions";
    const auto body = request_body(request).dump();

    auto backoff = config_.initial_backoff;
    int status = 0;
    std::string detail;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        limiter_.acquire();
        httplib::Client client(url.origin);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_bearer_token_auth(config_.api_key);
        auto res = client.Post(path, body, "application/json");
        if (res) {
            status = res->status;
            if (status == 200) return parse_response(res->body);
            detail = res->body.substr(0, 300);
            const bool retryable = status == 429 || status >= 500;
            if (!retryable) throw TransportError(status, attempt, detail);
        } else {
            status = 0;
            detail = httplib::to_string(res.error());
        }
        if (attempt < config_.max_attempts) {
            sleep_(backoff);
            backoff *= 2;
        }
    }
    throw TransportError(status, config_.max_attempts, detail);
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

PromptTemplate PromptLibrary::parse_file(TemplateId id, std::string_view contents) {
    PromptTemplate t{id, "", ""};
    const auto first_nl = contents.find('\n');
    const auto header = contents.substr(0, first_nl);
    constexpr std::string_view kVersion = "version:";
    if (header.substr(0, kVersion.size()) != kVersion)
        throw ConfigError("template " + std::string(to_string(id)) + " lacks a version line");
    t.version = std::string(header.substr(kVersion.size()));
    t.version.erase(0, t.version.find_first_not_of(' '));
    constexpr std::string_view kSep = "\n---\n";
    const auto sep = contents.find(kSep);
    if (sep == std::string_view::npos) throw ConfigError("template " + std::string(to_string(id)) + " lacks '---'");
    t.body = std::string(contents.substr(sep + kSep.size()));
    return t;
}

const PromptLibrary& PromptLibrary::builtin() {
    static const PromptLibrary library = [] {
        PromptLibrary lib;
        for (const auto& [name, contents] : builtin_prompts::kFiles) {
            const auto id = template_id_from_string(name);
            lib.templates_.emplace(*id, parse_file(*id, contents));
        }
        return lib;
    }();
    return library;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (auto id : {TemplateId::parse, TemplateId::extract, TemplateId::gen_background, TemplateId::choose_answer}) {
        const auto path = dir / (std::string(to_string(id)) + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("missing template file " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        lib.templates_.emplace(id, parse_file(id, ss.str()));
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateId id) const { return templates_.at(id); }

std::vector<std::string> PromptLibrary::slots(TemplateId id) const {
    std::vector<std::string> names;
    const auto& body = get(id).body;
    std::size_t pos = 0;
    while ((pos = body.find("{{", pos)) != std::string::npos) {
        const auto close = body.find("}}", pos + 2);
        if (close == std::string::npos) break;
        auto name = body.substr(pos + 2, close - pos - 2);
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
        pos = close + 2;
    }
    return names;
}

std::string PromptLibrary::render(TemplateId id, const std::map<std::string, std::string>& slots) const {
    const auto& body = get(id).body;
    std::string out;
    out.reserve(body.size() + 256);
    std::size_t pos = 0;
    while (true) {
        const auto open = body.find("{{", pos);
        if (open == std::string::npos) break;
        const auto close = body.find("}}", open + 2);
        if (close == std::string::npos) break;
        const auto name = body.substr(open + 2, close - open - 2);
        auto it = slots.find(name);
        if (it == slots.end()) throw MissingSlot(name);
        out.append(body, pos, open - pos);
        out += it->second;
        pos = close + 2;
    }
    out.append(body, pos, std::string::npos);
    return out;
}

nlohmann::json PromptLibrary::versions() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, t] : templates_) j[std::string(to_string(id))] = t.version;
    return j;
}

std::string render_prompt(TemplateId id, const std::map<std::string, std::string>& slots) {
    return PromptLibrary::builtin().render(id, slots);
}

std::string numbered_list(const std::vector<std::string>& entries) {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) out += std::to_string(i + 1) + ". " + entries[i] + "\n";
    return out;
}

}  // namespace qaap::llm
