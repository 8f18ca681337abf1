#include "qaap/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include "qaap/error.hpp"
#include "qaap/text.hpp"

namespace qaap {

std::string_view to_string(PipelineMode mode) {
    return mode == PipelineMode::full ? "full" : "without_check_match";
}

std::optional<PipelineMode> pipeline_mode_from_string(std::string_view text) {
    if (text == "full") return PipelineMode::full;
    if (text == "without_check_match" || text == "without-check-match") return PipelineMode::without_check_match;
    return std::nullopt;
}

void PipelineConfig::validate() const {
    if (!use_internal_knowledge && !use_external_knowledge)
        throw ConfigError("at least one knowledge source (internal or external) must be enabled");
    if (segment_budget < retrieval::kMinSegmentBudget)
        throw ConfigError("segment budget must be at least " + std::to_string(retrieval::kMinSegmentBudget));
    if (min_score < 0.0 || min_score > 1.0) throw ConfigError("min_score must lie in [0, 1]");
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = {{"use_internal_knowledge", c.use_internal_knowledge},
         {"use_external_knowledge", c.use_external_knowledge},
         {"mode", to_string(c.mode)},
         {"check_time_in_context", c.check.check_time_in_context},
         {"check_internal_against_external", c.check.check_internal_against_external},
         {"segment_budget", c.segment_budget},
         {"reference_date", c.reference_date.iso()},
         {"min_score", c.min_score},
         {"temperature", c.completion.temperature},
         {"max_tokens", c.completion.max_tokens},
         {"model_name", c.completion.model_name}};
}

void to_json(nlohmann::json& j, const RunTrace& t) {
    auto extractions = nlohmann::json::array();
    for (const auto& e : t.extractions) {
        auto diags = nlohmann::json::array();
        for (const auto& d : e.diagnostics) diags.push_back({{"line", d.line}, {"reason", d.reason}});
        extractions.push_back({{"document_id", e.document_id},
                               {"segment_id", e.segment_id},
                               {"digest", e.digest},
                               {"completion", e.completion},
                               {"item_ordinals", e.item_ordinals},
                               {"diagnostics", std::move(diags)}});
    }
    auto completions = nlohmann::json::array();
    for (const auto& c : t.completions)
        completions.push_back({{"template_id", c.template_id}, {"digest", c.digest}, {"completion", c.completion}});

    j = {{"question_id", t.question_id},
         {"question", t.question},
         {"mode", t.mode},
         {"parsed_query", t.parsed_query ? nlohmann::json(*t.parsed_query) : nlohmann::json(nullptr)},
         {"query_interval", temporal::optional_interval_to_json(t.query_interval)},
         {"retrieval_log", t.retrieval_log},
         {"documents", t.documents},
         {"extractions", std::move(extractions)},
         {"items", t.items},
         {"check_reports", t.check_reports},
         {"scored_candidates", t.scored_candidates},
         {"chosen_index", t.chosen_index ? nlohmann::json(*t.chosen_index) : nlohmann::json(nullptr)},
         {"answer", t.answer ? nlohmann::json(*t.answer) : nlohmann::json(nullptr)},
         {"completions", std::move(completions)}};
}

std::string describe_candidate(const ExtractedItem& item) {
    literal::Mapping m{{"subject", literal::LiteralValue{item.subject}},
                       {"relation", literal::LiteralValue{item.relation}},
                       {"object", literal::LiteralValue{item.object}},
                       {"time", literal::LiteralValue{item.time_raw}}};
    return literal::render_literal(literal::LiteralValue{std::move(m)});
}

std::optional<int> parse_choice(std::string_view completion) {
    std::size_t i = 0;
    while (i < completion.size() && !std::isdigit(static_cast<unsigned char>(completion[i]))) ++i;
    if (i == completion.size()) return std::nullopt;
    int value = 0;
    while (i < completion.size() && std::isdigit(static_cast<unsigned char>(completion[i]))) {
        if (value > 100000) return std::nullopt;
        value = value * 10 + (completion[i] - '0');
        ++i;
    }
    return value;
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(std::shared_ptr<llm::Backend> backend, std::shared_ptr<retrieval::Searcher> searcher,
                   const llm::PromptLibrary& prompts)
    : backend_(std::move(backend)), searcher_(std::move(searcher)), prompts_(prompts) {
    if (!backend_) throw ConfigError("pipeline needs a completion backend");
}

namespace {

// Per-question state; lives on the calling thread only.
class Run {
public:
    Run(llm::Backend& backend, retrieval::Searcher* searcher, const llm::PromptLibrary& prompts,
        const PipelineConfig& config, const QuestionInput& input)
        : backend_(backend), searcher_(searcher), prompts_(prompts), config_(config), input_(input) {
        trace_.question_id = input.id;
        trace_.question = input.question;
        trace_.mode = std::string(to_string(config.mode));
    }

    QuestionResult execute() {
        const auto query = parse_query();
        trace_.parsed_query = query;
        trace_.query_interval = temporal::ground(query.time, config_.reference_date);

        acquire_documents(query);
        if (trace_.documents.empty()) throw NoContext();
        extract_all(query);

        Answer answer = config_.mode == PipelineMode::full ? check_and_match(query) : model_choice(query);
        trace_.answer = answer;
        return QuestionResult{std::move(answer), std::move(trace_)};
    }

private:
    struct Completion {
        std::string digest;
        std::string text;
    };

    Completion complete(llm::TemplateId id, std::string prompt) {
        llm::CompletionRequest request{id, std::move(prompt), config_.completion};
        Completion c{llm::request_digest(request), backend_.complete(request)};
        trace_.completions.push_back({std::string(llm::to_string(id)), c.digest, c.text});
        return c;
    }

    ParsedQuery parse_query() {
        const auto prompt = prompts_.render(llm::TemplateId::parse, {{"question", input_.question}});
        std::string first_error;
        for (int attempt = 0; attempt < 2; ++attempt) {
            const auto completion =
                complete(llm::TemplateId::parse, attempt == 0 ? prompt : prompt + std::string(kReformatInstruction));
            try {
                auto query = literal::to_query(literal::parse_script(completion.text));
                query.validate();
                return query;
            } catch (const MalformedLiteral& e) {
                if (first_error.empty()) first_error = e.what();
            } catch (const MissingQuery& e) {
                if (first_error.empty()) first_error = e.what();
            } catch (const AmbiguousAnswerKey& e) {
                if (first_error.empty()) first_error = e.what();
            } catch (const std::invalid_argument& e) {
                if (first_error.empty()) first_error = e.what();
            }
        }
        throw ParseFailure("query unparseable after reformat retry: " + first_error);
    }

    void add_document(Document doc) {
        doc.segments = retrieval::segment(doc, config_.segment_budget);
        trace_.documents.push_back(std::move(doc));
    }

    void acquire_documents(const ParsedQuery& query) {
        if (config_.use_internal_knowledge) {
            const auto background =
                complete(llm::TemplateId::gen_background,
                         prompts_.render(llm::TemplateId::gen_background, {{"question", input_.question}}));
            auto doc = retrieval::make_document("background", "background: " + input_.question,
                                                KnowledgeSource::internal, background.text);
            if (doc.body.empty())
                trace_.retrieval_log.push_back("background document is empty");
            else
                add_document(std::move(doc));
        }
        if (!config_.use_external_knowledge) return;

        if (input_.provided_context) {
            add_document(retrieval::make_document("context", "provided context", KnowledgeSource::external,
                                                  text::join(*input_.provided_context, "\n\n")));
            return;
        }
        if (!searcher_) throw ConfigError("external knowledge is enabled but no search backend is configured");

        const auto& key = query.answer_key == AnswerKey::subject ? query.object : query.subject;
        if (normalize_field(key).empty()) {
            trace_.retrieval_log.push_back("no entity to search for");
            return;
        }
        if (auto doc = search_once(key)) {
            add_document(std::move(*doc));
        }
    }

    // One search plus at most one retry with the top similar title.
    std::optional<Document> search_once(const std::string& entity) {
        std::string current = entity;
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                auto result = searcher_->search(current);
                if (auto* doc = std::get_if<Document>(&result)) {
                    trace_.retrieval_log.push_back("search '" + current + "' -> page '" + doc->title + "'");
                    return std::move(*doc);
                }
                const auto& similar = std::get<retrieval::SimilarTitles>(result).titles;
                trace_.retrieval_log.push_back("search '" + current + "' -> similar [" + text::join(similar, "; ") +
                                               "]");
                current = similar.front();
            } catch (const NotFound& e) {
                trace_.retrieval_log.push_back(e.what());
                return std::nullopt;
            }
        }
        return std::nullopt;
    }

    void extract_all(const ParsedQuery& query) {
        const auto query_code = literal::render_query(query);
        for (const auto& doc : trace_.documents) {
            for (const auto& seg : doc.segments) {
                const auto completion = complete(
                    llm::TemplateId::extract,
                    prompts_.render(llm::TemplateId::extract,
                                    {{"question", input_.question}, {"query", query_code}, {"segment", seg.text}}));
                auto parsed = literal::parse_script_lenient(completion.text);
                literal::ItemContext ctx{doc.id,     seg.id, seg.index, doc.source, static_cast<int>(trace_.items.size()),
                                         config_.reference_date};
                auto items = literal::to_items(parsed.script, ctx);

                SegmentExtraction extraction{doc.id, seg.id, completion.digest, completion.text, {}, parsed.diagnostics};
                extraction.diagnostics.insert(extraction.diagnostics.end(), items.diagnostics.begin(),
                                              items.diagnostics.end());
                for (auto& item : items.items) {
                    extraction.item_ordinals.push_back(item.ordinal);
                    trace_.items.push_back(std::move(item));
                }
                trace_.extractions.push_back(std::move(extraction));
            }
        }
    }

    const std::string& segment_text(const ExtractedItem& item) const {
        for (const auto& doc : trace_.documents)
            if (const auto* seg = doc.find_segment(item.segment_id)) return seg->text;
        throw Error("item references unknown segment " + item.segment_id);
    }

    Answer check_and_match(const ParsedQuery& query) {
        std::vector<ExtractedItem> passed_internal, passed_external;
        for (const auto& item : trace_.items) {
            auto report = check_item(item, query, segment_text(item), config_.check);
            if (report.passed()) (item.source == KnowledgeSource::internal ? passed_internal : passed_external).push_back(item);
            trace_.check_reports.push_back(std::move(report));
        }

        std::vector<ExtractedItem> kept_internal = passed_internal;
        if (config_.use_internal_knowledge && config_.use_external_knowledge &&
            config_.check.check_internal_against_external) {
            kept_internal = corroborate(passed_internal, passed_external);
            for (const auto& item : passed_internal) {
                const bool kept = std::any_of(kept_internal.begin(), kept_internal.end(),
                                              [&](const auto& k) { return k.ordinal == item.ordinal; });
                if (kept) continue;
                for (auto& report : trace_.check_reports)
                    if (report.item_ordinal == item.ordinal)
                        report.failures.push_back({CheckFailureKind::uncorroborated_internal, ""});
            }
        }

        std::vector<ScoredCandidate> candidates;
        for (const auto* group : {&passed_external, &kept_internal})
            for (const auto& item : *group) candidates.push_back({item, match_score(item, trace_.query_interval)});
        std::sort(candidates.begin(), candidates.end(),
                  [](const auto& a, const auto& b) { return a.item.ordinal < b.item.ordinal; });

        trace_.scored_candidates = rank_candidates(candidates);
        return select_answer(candidates, query, config_.min_score);
    }

    Answer model_choice(const ParsedQuery& query) {
        for (const auto& item : trace_.items)
            trace_.scored_candidates.push_back({item, match_score(item, trace_.query_interval)});
        Answer answer;
        if (trace_.items.empty()) return answer;

        std::vector<std::string> lines;
        for (const auto& item : trace_.items) lines.push_back(describe_candidate(item));
        const auto completion =
            complete(llm::TemplateId::choose_answer,
                     prompts_.render(llm::TemplateId::choose_answer, {{"question", input_.question},
                                                                      {"query", literal::render_query(query)},
                                                                      {"candidates", llm::numbered_list(lines)}}));
        const auto choice = parse_choice(completion.text);
        if (!choice || *choice < 1 || *choice > static_cast<int>(trace_.items.size())) return answer;
        trace_.chosen_index = *choice;

        const auto& chosen = trace_.scored_candidates[static_cast<std::size_t>(*choice - 1)];
        answer.value = chosen.item.answer_field(query.answer_key);
        answer.score = chosen.score;
        answer.supporting_item = chosen.item;
        answer.confidence = chosen.score > config_.min_score ? Confidence::matched : Confidence::low_confidence;
        return answer;
    }

    llm::Backend& backend_;
    retrieval::Searcher* searcher_;
    const llm::PromptLibrary& prompts_;
    const PipelineConfig& config_;
    const QuestionInput& input_;
    RunTrace trace_;
};

}  // namespace

QuestionResult Pipeline::answer_question(const QuestionInput& input, const PipelineConfig& config) const {
    config.validate();
    Run run(*backend_, searcher_.get(), prompts_, config, input);
    return run.execute();
}

std::vector<BatchEntry> answer_batch(const Pipeline& pipeline, const std::vector<QuestionInput>& questions,
                                     const PipelineConfig& config, int parallelism) {
    if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
    std::vector<BatchEntry> entries(questions.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        while (true) {
            const auto i = next.fetch_add(1);
            if (i >= questions.size()) return;
            auto& entry = entries[i];
            entry.id = questions[i].id;
            try {
                entry.result = pipeline.answer_question(questions[i], config);
            } catch (const std::exception& e) {
                entry.error = QuestionError(questions[i].id, e.what()).what();
            }
        }
    };

    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(parallelism), questions.size());
    if (threads <= 1) {
        worker();
        return entries;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return entries;
}

}  // namespace qaap
