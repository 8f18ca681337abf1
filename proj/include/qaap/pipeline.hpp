#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qaap/check_match.hpp"
#include "qaap/literal.hpp"
#include "qaap/llm.hpp"
#include "qaap/model.hpp"
#include "qaap/retrieval.hpp"

namespace qaap {

enum class PipelineMode { full, without_check_match };

std::string_view to_string(PipelineMode mode);
std::optional<PipelineMode> pipeline_mode_from_string(std::string_view text);

struct PipelineConfig {
    bool use_internal_knowledge = true;
    bool use_external_knowledge = true;
    PipelineMode mode = PipelineMode::full;
    CheckConfig check;
    int segment_budget = retrieval::kDefaultSegmentBudget;
    temporal::CivilDate reference_date = temporal::today_utc();
    double min_score = 0.0;
    llm::CompletionParams completion;

    /// Throws ConfigError on violated invariants.
    void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& config);

struct QuestionInput {
    std::string id;
    std::string question;
    /// When present and external knowledge is on, these paragraphs stand in
    /// for the search result.
    std::optional<std::vector<std::string>> provided_context;
};

struct CompletionLog {
    std::string template_id;
    std::string digest;
    std::string completion;
};

struct SegmentExtraction {
    std::string document_id;
    std::string segment_id;
    std::string digest;
    std::string completion;
    std::vector<int> item_ordinals;
    std::vector<literal::Diagnostic> diagnostics;
};

struct RunTrace {
    std::string question_id;
    std::string question;
    std::string mode;
    std::optional<ParsedQuery> parsed_query;
    std::optional<temporal::TimeInterval> query_interval;
    std::vector<std::string> retrieval_log;
    std::vector<Document> documents;
    std::vector<SegmentExtraction> extractions;
    std::vector<ExtractedItem> items;
    std::vector<CheckReport> check_reports;
    std::vector<ScoredCandidate> scored_candidates;  // full: ranked best-first; otherwise list order
    std::optional<int> chosen_index;                 // without_check_match only, 1-based
    std::optional<Answer> answer;
    std::vector<CompletionLog> completions;
};

void to_json(nlohmann::json& j, const RunTrace& trace);

struct QuestionResult {
    Answer answer;
    RunTrace trace;
};

/// Appended to the parse prompt when the first completion is unreadable.
inline constexpr std::string_view kReformatInstruction =
    "\n\nYour previous reply could not be read. Respond with only the code block defining `query` and `answer_key`.";

/// One question end to end: Parse, fetch background and/or retrieved documents,
/// Extract per segment, then Check and Match (or let the model choose in
/// without_check_match mode). Strictly sequential per question; the
/// backend and searcher may be shared across threads.
class Pipeline {
public:
    Pipeline(std::shared_ptr<llm::Backend> backend, std::shared_ptr<retrieval::Searcher> searcher,
             const llm::PromptLibrary& prompts = llm::PromptLibrary::builtin());

    QuestionResult answer_question(const QuestionInput& input, const PipelineConfig& config) const;

private:
    std::shared_ptr<llm::Backend> backend_;
    std::shared_ptr<retrieval::Searcher> searcher_;
    const llm::PromptLibrary& prompts_;
};

struct BatchEntry {
    std::string id;
    std::optional<QuestionResult> result;
    std::string error;  // set when result is empty
};

/// Results come back in input order; a failing question yields an error
/// entry and never aborts the batch.
std::vector<BatchEntry> answer_batch(const Pipeline& pipeline, const std::vector<QuestionInput>& questions,
                                     const PipelineConfig& config, int parallelism);

/// Candidate lines shown to the model in without_check_match mode.
std::string describe_candidate(const ExtractedItem& item);

/// First integer in the completion, if any.
std::optional<int> parse_choice(std::string_view completion);

}  // namespace qaap
