#include "qaap/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qaap/error.hpp"
#include "qaap/eval.hpp"
#include "qaap/retrieval.hpp"

namespace qaap::cli {

namespace fs = std::filesystem;

Environment process_environment() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

namespace {

std::string read_file(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(std::string("cannot read ") + what + " " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& path, const char* what) {
    try {
        return nlohmann::json::parse(read_file(path, what));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << contents;
}

std::string pretty(const nlohmann::json& j) { return j.dump(2) + "\n"; }

temporal::CivilDate parse_date_setting(const std::string& text, const char* origin) {
    auto d = temporal::CivilDate::parse_iso(text);
    if (!d) throw ConfigError(std::string(origin) + ": reference date must be YYYY-MM-DD, got '" + text + "'");
    return *d;
}

PipelineMode parse_mode_setting(const std::string& text) {
    auto m = pipeline_mode_from_string(text);
    if (!m) throw ConfigError("unknown mode '" + text + "' (expected full or without-check-match)");
    return *m;
}

int parse_int_setting(const std::string& text, const char* name) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string(name) + " must be an integer, got '" + text + "'");
}

std::string format_partial(const temporal::PartialDate& p) {
    char buf[32];
    if (p.day)
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", p.year, *p.month, *p.day);
    else if (p.month)
        std::snprintf(buf, sizeof buf, "%04d-%02u", p.year, *p.month);
    else
        std::snprintf(buf, sizeof buf, "%04d", p.year);
    return buf;
}

std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", score);
    return buf;
}

std::string interval_line(const std::optional<temporal::TimeInterval>& interval) {
    if (!interval) return "(no interval)";
    const auto days = interval->length_days();
    return temporal::format_interval(*interval) + " (" + std::to_string(days) + (days == 1 ? " day)" : " days)");
}

// Trace files are named after question ids; keep them filesystem-safe.
std::string file_stem(const std::string& id) {
    std::string out;
    for (const char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out.empty() ? "_" : out;
}

// ---------------------------------------------------------------------------
// Flags shared by ask and eval
// ---------------------------------------------------------------------------

struct RunFlags {
    std::optional<std::string> config;
    std::optional<std::string> backend;
    std::optional<std::string> trace_dir;
    bool record = false;
    std::optional<std::string> record_timestamp;
    std::optional<std::string> script;
    std::optional<std::string> corpus;
    bool online = false;
    std::optional<std::string> wiki_endpoint;
    std::optional<std::string> mode;
    bool no_time_check = false;
    bool no_corroborate = false;
    bool no_internal = false;
    bool no_external = false;
    std::optional<std::string> reference_date;
    std::optional<int> segment_budget;
    std::optional<int> parallel;
    std::optional<std::string> model;
    std::optional<double> min_score;
    std::optional<std::string> prompts;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
    app->add_option("--config", f.config, "JSON config file");
    app->add_option("--backend", f.backend, "live, replay or scripted")
        ->check(CLI::IsMember({"live", "replay", "scripted"}));
    app->add_option("--trace-dir", f.trace_dir, "Directory holding traces.jsonl");
    app->add_flag("--record", f.record, "Store every completion in --trace-dir");
    app->add_option("--record-timestamp", f.record_timestamp, "Fixed timestamp written into recorded traces");
    app->add_option("--script", f.script, "Scripted completions (JSON) for --backend scripted");
    auto* corpus = app->add_option("--corpus", f.corpus, "Offline corpus directory");
    auto* online = app->add_flag("--online", f.online, "Search the MediaWiki API");
    corpus->excludes(online);
    app->add_option("--wiki-endpoint", f.wiki_endpoint, "MediaWiki api.php URL");
    app->add_option("--mode", f.mode, "full or without-check-match");
    app->add_flag("--no-time-check", f.no_time_check, "Skip the time-in-context check");
    app->add_flag("--no-corroborate", f.no_corroborate, "Skip corroborating internal items against external ones");
    app->add_flag("--no-internal", f.no_internal, "Do not generate a background document");
    app->add_flag("--no-external", f.no_external, "Do not retrieve documents");
    app->add_option("--reference-date", f.reference_date, "YYYY-MM-DD used for open-ended and current times");
    app->add_option("--segment-budget", f.segment_budget, "Approximate tokens per segment");
    app->add_option("--parallel", f.parallel, "Questions answered concurrently");
    app->add_option("--model", f.model, "Model name sent to the backend");
    app->add_option("--min-score", f.min_score, "Scores at or below this are low_confidence");
    app->add_option("--prompts", f.prompts, "Directory of prompt templates overriding the built-in ones");
}

Settings resolve_settings(const RunFlags& f, const Environment& env) {
    Settings s;
    std::optional<std::string> config_path = f.config;
    if (!config_path) config_path = env("QAAP_CONFIG");
    if (config_path) apply_config(s, read_json(*config_path, "config file"));
    apply_environment(s, env);

    if (f.backend) s.backend = *f.backend;
    if (f.trace_dir) s.trace_dir = *f.trace_dir;
    if (f.record) s.record = true;
    if (f.record_timestamp) s.record_timestamp = *f.record_timestamp;
    if (f.script) s.script = *f.script;
    if (f.corpus) {
        s.corpus = *f.corpus;
        s.online = false;
    }
    if (f.online) {
        s.online = true;
        s.corpus.reset();
    }
    if (f.wiki_endpoint) s.wiki_endpoint = *f.wiki_endpoint;
    if (f.mode) s.pipeline.mode = parse_mode_setting(*f.mode);
    if (f.no_time_check) s.pipeline.check.check_time_in_context = false;
    if (f.no_corroborate) s.pipeline.check.check_internal_against_external = false;
    if (f.no_internal) s.pipeline.use_internal_knowledge = false;
    if (f.no_external) s.pipeline.use_external_knowledge = false;
    if (f.reference_date) s.pipeline.reference_date = parse_date_setting(*f.reference_date, "--reference-date");
    if (f.segment_budget) s.pipeline.segment_budget = *f.segment_budget;
    if (f.parallel) s.parallel = *f.parallel;
    if (f.model) s.pipeline.completion.model_name = *f.model;
    if (f.min_score) s.pipeline.min_score = *f.min_score;

    s.pipeline.validate();
    if (s.parallel < 1) throw ConfigError("--parallel must be at least 1");
    return s;
}

struct Assembly {
    std::unique_ptr<llm::PromptLibrary> custom_prompts;
    std::shared_ptr<llm::Backend> backend;
    std::shared_ptr<retrieval::Searcher> searcher;
    std::unique_ptr<Pipeline> pipeline;

    const llm::PromptLibrary& prompts() const {
        return custom_prompts ? *custom_prompts : llm::PromptLibrary::builtin();
    }
};

Assembly assemble(const Settings& s, const std::optional<std::string>& prompts_dir) {
    Assembly a;
    if (prompts_dir) a.custom_prompts = std::make_unique<llm::PromptLibrary>(llm::PromptLibrary::from_directory(*prompts_dir));

    if (s.backend == "live") {
        if (!s.api_key || s.api_key->empty())
            throw ConfigError("--backend live needs an API key in QAAP_API_KEY");
        llm::LiveConfig live;
        live.api_base = s.api_base;
        live.api_key = *s.api_key;
        live.requests_per_minute = s.requests_per_minute;
        a.backend = std::make_shared<llm::LiveBackend>(live);
    } else if (s.backend == "replay") {
        if (!s.trace_dir) throw ConfigError("--backend replay needs --trace-dir");
        if (s.record) throw ConfigError("--record cannot be combined with --backend replay");
        a.backend = std::make_shared<llm::ReplayBackend>(std::make_shared<const llm::TraceStore>(*s.trace_dir));
    } else if (s.backend == "scripted") {
        if (!s.script) throw ConfigError("--backend scripted needs --script");
        if (s.parallel != 1) throw ConfigError("--backend scripted requires --parallel 1");
        a.backend = load_script(*s.script);
    } else {
        throw ConfigError("unknown backend '" + s.backend + "'");
    }

    if (s.record) {
        if (!s.trace_dir) throw ConfigError("--record needs --trace-dir");
        llm::RecordingBackend::Clock clock;
        if (s.record_timestamp) clock = [ts = *s.record_timestamp] { return ts; };
        a.backend = std::make_shared<llm::RecordingBackend>(a.backend, std::make_shared<llm::TraceStore>(*s.trace_dir),
                                                            clock);
    }

    if (s.corpus) {
        a.searcher = std::make_shared<retrieval::OfflineCorpus>(*s.corpus);
    } else if (s.online) {
        retrieval::MediaWikiConfig wiki;
        wiki.endpoint = s.wiki_endpoint;
        a.searcher = std::make_shared<retrieval::MediaWikiSearcher>(wiki);
    }
    a.pipeline = std::make_unique<Pipeline>(a.backend, a.searcher, a.prompts());
    return a;
}

nlohmann::json manifest(const Settings& s, const Assembly& a) {
    return {{"config", settings_to_json(s)},
            {"templates", a.prompts().versions()},
            {"corpus", a.searcher ? nlohmann::json(a.searcher->fingerprint()) : nlohmann::json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_ask(const std::string& question, const std::vector<std::string>& context, const std::optional<std::string>& emit,
            const RunFlags& flags, const Environment& env, std::ostream& out) {
    const auto settings = resolve_settings(flags, env);
    auto assembly = assemble(settings, flags.prompts);
    QuestionInput input{"ask", question, std::nullopt};
    if (!context.empty()) input.provided_context = context;

    const auto result = assembly.pipeline->answer_question(input, settings.pipeline);
    if (emit) write_file(*emit, pretty(result.trace));

    const auto& answer = result.answer;
    out << "answer: " << answer.value << "\n";
    out << "score: " << format_score(answer.score) << "\n";
    out << "confidence: " << to_string(answer.confidence) << "\n";
    return answer.confidence == Confidence::unanswerable ? 2 : 0;
}

int cmd_eval(const std::string& dataset_path, const std::string& out_dir, std::optional<int> limit,
             const RunFlags& flags, const Environment& env, std::ostream& out, std::ostream& err) {
    auto dataset = eval::load_dataset(dataset_path);
    if (limit) {
        if (*limit < 0) throw ConfigError("--limit must be non-negative");
        if (static_cast<std::size_t>(*limit) < dataset.size()) dataset.resize(static_cast<std::size_t>(*limit));
    }
    const auto settings = resolve_settings(flags, env);
    auto assembly = assemble(settings, flags.prompts);

    std::vector<QuestionInput> inputs;
    for (const auto& ex : dataset) inputs.push_back({ex.id, ex.question, ex.provided_context});
    const auto entries = answer_batch(*assembly.pipeline, inputs, settings.pipeline, settings.parallel);

    const fs::path dir(out_dir);
    fs::create_directories(dir / "traces");
    std::vector<eval::Prediction> predictions;
    std::string predictions_jsonl;
    for (const auto& entry : entries) {
        eval::Prediction p{entry.id, "", std::nullopt};
        nlohmann::json row = {{"id", entry.id}};
        if (entry.result) {
            p.text = entry.result->answer.value;
            row["prediction"] = p.text;
            row["confidence"] = to_string(entry.result->answer.confidence);
            write_file(dir / "traces" / (file_stem(entry.id) + ".json"), pretty(entry.result->trace));
        } else {
            p.error = entry.error;
            row["prediction"] = "";
            row["error"] = entry.error;
            err << entry.error << "\n";
        }
        predictions_jsonl += row.dump() + "\n";
        predictions.push_back(std::move(p));
    }

    const auto report = eval::evaluate(predictions, dataset);
    auto m = manifest(settings, assembly);
    m["dataset"] = {{"path", dataset_path}, {"examples", dataset.size()}};
    write_file(dir / "predictions.jsonl", predictions_jsonl);
    write_file(dir / "report.json", pretty(report.to_json()));
    write_file(dir / "report.txt", report.to_table());
    write_file(dir / "manifest.json", pretty(m));

    char summary[96];
    std::snprintf(summary, sizeof summary, "EM %.1f F1 %.1f (n=%zu)", report.overall.em, report.overall.f1,
                  report.overall.count);
    out << summary << "\n";
    return 0;
}

int cmd_time(const std::string& expression, const std::optional<std::string>& reference, std::ostream& out) {
    const auto ref = reference ? parse_date_setting(*reference, "--reference-date") : temporal::today_utc();
    const auto c = temporal::parse_temporal(expression);
    out << "kind: " << temporal::to_string(c.kind) << "\n";
    if (c.lower) out << (c.kind == temporal::ConstraintKind::between ? "lower: " : "bound: ") << format_partial(*c.lower) << "\n";
    if (c.upper) out << "upper: " << format_partial(*c.upper) << "\n";
    out << interval_line(temporal::ground(c, ref)) << "\n";
    return 0;
}

int cmd_match(const std::string& query_path, const std::string& items_path, const std::optional<std::string>& reference,
              double min_score, std::ostream& out) {
    const auto ref = reference ? parse_date_setting(*reference, "--reference-date") : temporal::today_utc();
    ParsedQuery query;
    std::vector<ExtractedItem> items;
    try {
        query = read_json(query_path, "query file").get<ParsedQuery>();
        const auto raw_items = read_json(items_path, "items file");
        if (!raw_items.is_array()) throw ConfigError(items_path + ": expected a JSON array of items");
        for (std::size_t i = 0; i < raw_items.size(); ++i) {
            auto item = raw_items[i].get<ExtractedItem>();
            if (!raw_items[i].contains("ordinal")) item.ordinal = static_cast<int>(i);
            if (!raw_items[i].contains("time") && !item.time_raw.empty())
                item.time = temporal::ground(temporal::parse_temporal(item.time_raw), ref);
            items.push_back(std::move(item));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed match input: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("malformed match input: ") + e.what());
    }

    const auto query_interval = temporal::ground(query.time, ref);
    std::vector<ScoredCandidate> candidates;
    for (const auto& item : items) candidates.push_back({item, match_score(item, query_interval)});
    const auto ranked = rank_candidates(candidates);
    const auto answer = select_answer(candidates, query, min_score);

    out << "query time: " << interval_line(query_interval) << "\n";
    char line[512];
    std::snprintf(line, sizeof line, "  %4s  %-8s  %-8s  %-12s  %3s  %3s  %s\n", "rank", "score", "source", "document",
                  "seg", "ord", "answer | time");
    out << line;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& c = ranked[i];
        const auto time = c.item.time ? temporal::format_interval(*c.item.time) : std::string("-");
        std::snprintf(line, sizeof line, "%s %4zu  %-8s  %-8s  %-12s  %3d  %3d  %s | %s\n",
                      i == 0 && answer.confidence != Confidence::unanswerable ? "*" : " ", i + 1,
                      format_score(c.score).c_str(), std::string(to_string(c.item.source)).c_str(),
                      c.item.document_id.c_str(), c.item.segment_index, c.item.ordinal,
                      c.item.answer_field(query.answer_key).c_str(), time.c_str());
        out << line;
    }
    out << "answer: " << answer.value << " (" << to_string(answer.confidence) << ")\n";
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

nlohmann::json settings_to_json(const Settings& s) {
    auto opt_path = [](const std::optional<fs::path>& p) { return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr); };
    return {{"backend", s.backend},
            {"trace_dir", opt_path(s.trace_dir)},
            {"record", s.record},
            {"script", opt_path(s.script)},
            {"corpus", opt_path(s.corpus)},
            {"online", s.online},
            {"wiki_endpoint", s.wiki_endpoint},
            {"api_base", s.api_base},
            {"requests_per_minute", s.requests_per_minute},
            {"parallel", s.parallel},
            {"pipeline", s.pipeline}};
}

void apply_config(Settings& s, const nlohmann::json& c) {
    if (!c.is_object()) throw ConfigError("config file must hold a JSON object");
    try {
        for (const auto& [key, value] : c.items()) {
            if (key == "backend") s.backend = value.get<std::string>();
            else if (key == "trace_dir") s.trace_dir = value.get<std::string>();
            else if (key == "script") s.script = value.get<std::string>();
            else if (key == "corpus") s.corpus = value.get<std::string>();
            else if (key == "online") s.online = value.get<bool>();
            else if (key == "wiki_endpoint") s.wiki_endpoint = value.get<std::string>();
            else if (key == "api_base") s.api_base = value.get<std::string>();
            else if (key == "requests_per_minute") s.requests_per_minute = value.get<double>();
            else if (key == "parallel") s.parallel = value.get<int>();
            else if (key == "mode") s.pipeline.mode = parse_mode_setting(value.get<std::string>());
            else if (key == "time_check") s.pipeline.check.check_time_in_context = value.get<bool>();
            else if (key == "corroborate") s.pipeline.check.check_internal_against_external = value.get<bool>();
            else if (key == "internal") s.pipeline.use_internal_knowledge = value.get<bool>();
            else if (key == "external") s.pipeline.use_external_knowledge = value.get<bool>();
            else if (key == "reference_date") s.pipeline.reference_date = parse_date_setting(value.get<std::string>(), "config");
            else if (key == "segment_budget") s.pipeline.segment_budget = value.get<int>();
            else if (key == "model") s.pipeline.completion.model_name = value.get<std::string>();
            else if (key == "temperature") s.pipeline.completion.temperature = value.get<double>();
            else if (key == "max_tokens") s.pipeline.completion.max_tokens = value.get<int>();
            else if (key == "min_score") s.pipeline.min_score = value.get<double>();
            else throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config file: ") + e.what());
    }
}

void apply_environment(Settings& s, const Environment& env) {
    if (auto v = env("QAAP_BACKEND")) s.backend = *v;
    if (auto v = env("QAAP_TRACE_DIR")) s.trace_dir = *v;
    if (auto v = env("QAAP_CORPUS")) s.corpus = *v;
    if (auto v = env("QAAP_WIKI_ENDPOINT")) s.wiki_endpoint = *v;
    if (auto v = env("QAAP_API_BASE")) s.api_base = *v;
    if (auto v = env("QAAP_API_KEY")) s.api_key = *v;
    if (auto v = env("QAAP_MODE")) s.pipeline.mode = parse_mode_setting(*v);
    if (auto v = env("QAAP_REFERENCE_DATE")) s.pipeline.reference_date = parse_date_setting(*v, "QAAP_REFERENCE_DATE");
    if (auto v = env("QAAP_SEGMENT_BUDGET")) s.pipeline.segment_budget = parse_int_setting(*v, "QAAP_SEGMENT_BUDGET");
    if (auto v = env("QAAP_PARALLEL")) s.parallel = parse_int_setting(*v, "QAAP_PARALLEL");
    if (auto v = env("QAAP_MODEL")) s.pipeline.completion.model_name = *v;
}

std::shared_ptr<llm::ScriptedBackend> load_script(const fs::path& path) {
    const auto doc = read_json(path, "script");
    if (!doc.is_array()) throw ConfigError(path.string() + ": script must be a JSON array");
    auto backend = std::make_shared<llm::ScriptedBackend>();
    for (const auto& entry : doc) {
        if (!entry.is_object()) throw ConfigError(path.string() + ": script entries must be objects");
        for (const auto& [key, value] : entry.items()) {
            if (key == "id" || key == "note") continue;
            const auto id = llm::template_id_from_string(key);
            if (!id) throw ConfigError(path.string() + ": unknown template id '" + key + "'");
            if (value.is_string()) {
                backend->push(*id, value.get<std::string>());
            } else if (value.is_array()) {
                for (const auto& v : value) {
                    if (!v.is_string()) throw ConfigError(path.string() + ": responses must be strings");
                    backend->push(*id, v.get<std::string>());
                }
            } else {
                throw ConfigError(path.string() + ": responses must be strings");
            }
        }
    }
    return backend;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Environment& env) {
    CLI::App app{"Temporal question answering with structured queries and deterministic answer selection", "qaap"};
    app.require_subcommand(1);

    RunFlags ask_flags, eval_flags;
    std::string question;
    std::vector<std::string> context;
    std::optional<std::string> emit_trace;
    auto* ask = app.add_subcommand("ask", "Answer one question");
    ask->add_option("question", question, "Question text")->required();
    ask->add_option("--context", context, "Paragraph used instead of retrieval (repeatable)");
    ask->add_option("--emit-trace", emit_trace, "Write the run trace as JSON");
    add_run_flags(ask, ask_flags);

    std::string dataset;
    std::string out_dir = "qaap-run";
    std::optional<int> limit;
    auto* ev = app.add_subcommand("eval", "Answer a dataset and score it");
    ev->add_option("dataset", dataset, "Canonical JSON-lines dataset")->required();
    ev->add_option("--out", out_dir, "Output directory")->capture_default_str();
    ev->add_option("--limit", limit, "Only the first N examples");
    add_run_flags(ev, eval_flags);

    std::string expression;
    std::optional<std::string> time_ref;
    auto* tm = app.add_subcommand("time", "Parse and ground a time expression");
    tm->add_option("expression", expression, "Time expression")->required();
    tm->add_option("--reference-date,--reference", time_ref, "YYYY-MM-DD");

    std::string query_file, items_file;
    std::optional<std::string> match_ref;
    double min_score = 0.0;
    auto* mt = app.add_subcommand("match", "Score and rank extracted items against a query");
    mt->add_option("query", query_file, "ParsedQuery JSON file")->required();
    mt->add_option("items", items_file, "JSON array of extracted items")->required();
    mt->add_option("--reference-date,--reference", match_ref, "YYYY-MM-DD");
    mt->add_option("--min-score", min_score, "Scores at or below this are low_confidence");

    std::vector<const char*> argv{"qaap"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*ask) return cmd_ask(question, context, emit_trace, ask_flags, env, out);
        if (*ev) return cmd_eval(dataset, out_dir, limit, eval_flags, env, out, err);
        if (*tm) return cmd_time(expression, time_ref, out);
        if (*mt) return cmd_match(query_file, items_file, match_ref, min_score, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace qaap::cli
