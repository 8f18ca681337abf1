#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qaap/llm.hpp"
#include "qaap/pipeline.hpp"

namespace qaap::cli {

using Environment = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the real process environment.
Environment process_environment();

/// Effective run settings. Layers, lowest first: defaults, config file,
/// QAAP_* environment variables, command-line flags.
struct Settings {
    std::string backend = "live";  // live | replay | scripted
    std::optional<std::filesystem::path> trace_dir;
    bool record = false;
    std::optional<std::string> record_timestamp;  // fixed metadata timestamp for recorded traces
    std::optional<std::filesystem::path> script;
    std::optional<std::filesystem::path> corpus;
    bool online = false;
    std::string wiki_endpoint = "https://en.wikipedia.org/w/api.php";
    std::string api_base = "https://api.openai.com/v1";
    std::optional<std::string> api_key;  // environment only, never echoed
    double requests_per_minute = 60.0;
    int parallel = 1;
    PipelineConfig pipeline;
};

nlohmann::json settings_to_json(const Settings& settings);

/// Applies a JSON config object. Unknown keys are rejected.
void apply_config(Settings& settings, const nlohmann::json& config);
void apply_environment(Settings& settings, const Environment& env);

/// Script file: JSON array of per-question objects whose keys are template
/// ids (parse, gen_background, extract, choose_answer) mapping to a string
/// or a list of strings. Responses are queued in file order.
std::shared_ptr<llm::ScriptedBackend> load_script(const std::filesystem::path& path);

/// Entry point; `args` excludes the program name. Returns the exit code:
/// 0 success (ask: matched or low_confidence), 2 unanswerable, 1 error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Environment& env = process_environment());

}  // namespace qaap::cli
