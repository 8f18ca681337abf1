#include <gtest/gtest.h>

#include <map>

#include "qaap/cli.hpp"
#include "qaap/error.hpp"
#include "qaap/eval.hpp"
#include "qaap/pipeline.hpp"
#include "support/temp_dir.hpp"

using namespace qaap;
using llm::TemplateId;

namespace {

const std::filesystem::path kE2e = QAAP_FIXTURE_DIR "/e2e";

// Title -> body lookup with no fuzzy matching.
class MapSearcher : public retrieval::Searcher {
public:
    explicit MapSearcher(std::map<std::string, std::string> pages) : pages_(std::move(pages)) {}
    retrieval::SearchResult search(const std::string& entity) override {
        ++calls;
        const auto it = pages_.find(entity);
        if (it == pages_.end()) throw NotFound(entity);
        return retrieval::make_document("wiki:" + retrieval::title_slug(it->first), it->first,
                                        KnowledgeSource::external, it->second);
    }
    std::string fingerprint() const override { return "map"; }
    int calls = 0;

private:
    std::map<std::string, std::string> pages_;
};

const std::string kParse =
    "```python\nquery = {'subject': 'Marta Velasquez', 'relation': 'hold position', 'object': 'ANSWER', 'time': 'in "
    "1996'}\nanswer_key = 'object'\n```";

std::string extract(const std::vector<std::pair<std::string, std::string>>& facts) {
    std::string out = "information = []\n";
    for (const auto& [object, time] : facts)
        out += "information.append({'subject': 'Marta Velasquez', 'relation': 'hold position', 'object': '" + object +
               "', 'time': '" + time + "'})\n";
    return out;
}

PipelineConfig config(PipelineMode mode = PipelineMode::full) {
    PipelineConfig c;
    c.mode = mode;
    c.reference_date = {2023, 1, 1};
    return c;
}

std::shared_ptr<MapSearcher> marta_page() {
    return std::make_shared<MapSearcher>(std::map<std::string, std::string>{
        {"Marta Velasquez", "Marta Velasquez was Mayor of Port Ellis from 1994 to 1998. She chaired the council in 2001."}});
}

std::vector<QuestionInput> fixture_questions() {
    std::vector<QuestionInput> out;
    for (const auto& e : eval::load_dataset(kE2e / "dataset.jsonl")) out.push_back({e.id, e.question, e.provided_context});
    return out;
}

std::vector<nlohmann::json> traces_of(const std::vector<BatchEntry>& entries) {
    std::vector<nlohmann::json> out;
    for (const auto& e : entries) out.push_back(e.result ? nlohmann::json(e.result->trace) : nlohmann::json(e.error));
    return out;
}

}  // namespace

TEST(Pipeline, SingleExternalCandidateMatches) {
    auto backend = std::make_shared<llm::ScriptedBackend>();
    backend->push(TemplateId::parse, kParse);
    backend->push(TemplateId::gen_background, "");
    backend->push(TemplateId::extract, extract({{"Mayor of Port Ellis", "from 1994 to 1998"}}));
    Pipeline p(backend, marta_page());
    const auto r = p.answer_question({"q", "Which position did Marta Velasquez hold in 1996?", std::nullopt}, config());
    EXPECT_EQ(r.answer.value, "Mayor of Port Ellis");
    EXPECT_EQ(r.answer.confidence, Confidence::matched);
    EXPECT_NEAR(r.answer.score, 366.0 / 1826.0, 1e-12);
    EXPECT_EQ(r.trace.retrieval_log.front(), "background document is empty");
    EXPECT_EQ(backend->remaining(TemplateId::extract), 0u);
}

TEST(Pipeline, WithoutCheckMatchTakesModelChoice) {
    auto backend = std::make_shared<llm::ScriptedBackend>();
    backend->push(TemplateId::parse, kParse);
    backend->push(TemplateId::gen_background, "");
    backend->push(TemplateId::extract, extract({{"Mayor of Port Ellis", "from 1994 to 1998"}, {"Council chair", "2001"}}));
    backend->push(TemplateId::choose_answer, "2");
    Pipeline p(backend, marta_page());
    const auto r = p.answer_question({"q", "Which position did Marta Velasquez hold in 1996?", std::nullopt},
                                     config(PipelineMode::without_check_match));
    EXPECT_EQ(r.answer.value, "Council chair");
    EXPECT_EQ(r.trace.chosen_index, 2);
    EXPECT_EQ(r.trace.mode, "without_check_match");
    EXPECT_TRUE(r.trace.check_reports.empty());
}

TEST(Pipeline, UncorroboratedInternalItemIsUnanswerable) {
    auto backend = std::make_shared<llm::ScriptedBackend>();
    backend->push(TemplateId::parse, kParse);
    backend->push(TemplateId::gen_background, "Marta Velasquez was Harbour Master from 1990 to 1999.");
    backend->push(TemplateId::extract, extract({{"Harbour Master", "from 1990 to 1999"}}));
    backend->push(TemplateId::extract, "information = []");
    Pipeline p(backend, marta_page());
    const auto r = p.answer_question({"q", "Which position did Marta Velasquez hold in 1996?", std::nullopt}, config());
    EXPECT_EQ(r.answer.confidence, Confidence::unanswerable);
    ASSERT_EQ(r.trace.check_reports.size(), 1u);
    EXPECT_EQ(r.trace.check_reports[0].failures.front().kind, CheckFailureKind::uncorroborated_internal);
}

TEST(Pipeline, ParseRetriesOnceWithReformatInstruction) {
    auto backend = std::make_shared<llm::ScriptedBackend>();
    backend->push(TemplateId::parse, "I think the query is about Marta.");
    backend->push(TemplateId::parse, kParse);
    backend->push(TemplateId::gen_background, "");
    backend->push(TemplateId::extract, extract({{"Mayor of Port Ellis", "from 1994 to 1998"}}));
    Pipeline p(backend, marta_page());
    const auto r = p.answer_question({"q", "Which position did Marta Velasquez hold in 1996?", std::nullopt}, config());
    EXPECT_EQ(r.answer.value, "Mayor of Port Ellis");
    ASSERT_GE(r.trace.completions.size(), 2u);
    EXPECT_EQ(r.trace.completions[0].template_id, "parse");
    EXPECT_EQ(r.trace.completions[1].template_id, "parse");
    EXPECT_NE(r.trace.completions[0].digest, r.trace.completions[1].digest);
}

TEST(Pipeline, ParseFailureAfterRetry) {
    auto backend = std::make_shared<llm::ScriptedBackend>();
    backend->push(TemplateId::parse, "no code");
    backend->push(TemplateId::parse, "query = {'subject': 'X', 'relation': 'r'");
    Pipeline p(backend, marta_page());
    EXPECT_THROW(p.answer_question({"q", "?", std::nullopt}, config()), ParseFailure);
}

TEST(Pipeline, NoContextWhenNothingRetrieved) {
    auto backend = std::make_shared<llm::ScriptedBackend>();
    backend->push(TemplateId::parse, kParse);
    auto c = config();
    c.use_internal_knowledge = false;
    Pipeline p(backend, std::make_shared<MapSearcher>(std::map<std::string, std::string>{}));
    EXPECT_THROW(p.answer_question({"q", "?", std::nullopt}, c), NoContext);
}

TEST(Pipeline, ProvidedContextReplacesSearch) {
    auto backend = std::make_shared<llm::ScriptedBackend>();
    backend->push(TemplateId::parse, kParse);
    backend->push(TemplateId::extract, extract({{"Mayor of Port Ellis", "from 1994 to 1998"}}));
    auto searcher = marta_page();
    auto c = config();
    c.use_internal_knowledge = false;
    Pipeline p(backend, searcher);
    const auto r = p.answer_question(
        {"q", "?", std::vector<std::string>{"Marta Velasquez was Mayor of Port Ellis from 1994 to 1998."}}, c);
    EXPECT_EQ(searcher->calls, 0);
    ASSERT_EQ(r.trace.documents.size(), 1u);
    EXPECT_EQ(r.trace.documents[0].id, "context");
    EXPECT_EQ(r.answer.value, "Mayor of Port Ellis");
}

TEST(Pipeline, InvalidConfigRejected) {
    Pipeline p(std::make_shared<llm::ScriptedBackend>(), nullptr);
    auto c = config();
    c.use_internal_knowledge = c.use_external_knowledge = false;
    EXPECT_THROW(p.answer_question({"q", "?", std::nullopt}, c), ConfigError);
    EXPECT_THROW(Pipeline(nullptr, nullptr), ConfigError);
}

TEST(ParseChoice, FirstInteger) {
    EXPECT_EQ(parse_choice("Candidate 3."), 3);
    EXPECT_EQ(parse_choice("12 or 4"), 12);
    EXPECT_FALSE(parse_choice("none"));
}

TEST(Batch, InputOrderAndErrorIsolation) {
    const auto store = std::make_shared<llm::TraceStore>(kE2e / "traces");
    Pipeline p(std::make_shared<llm::ReplayBackend>(store), std::make_shared<retrieval::OfflineCorpus>(kE2e / "corpus"));
    auto questions = fixture_questions();
    questions.insert(questions.begin() + 3, QuestionInput{"extra", "A question nobody recorded?", std::nullopt});
    const auto entries = answer_batch(p, questions, config(), 2);
    ASSERT_EQ(entries.size(), questions.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        EXPECT_EQ(entries[i].id, questions[i].id);
        EXPECT_EQ(entries[i].result.has_value(), questions[i].id != "extra") << entries[i].error;
    }
    EXPECT_NE(entries[3].error.find("extra"), std::string::npos);
    EXPECT_TRUE(answer_batch(p, {}, config(), 4).empty());
    EXPECT_THROW(answer_batch(p, questions, config(), 0), ConfigError);
}

TEST(Replay, FixtureAnswersAndTraceInvariants) {
    const auto store = std::make_shared<llm::TraceStore>(kE2e / "traces");
    Pipeline p(std::make_shared<llm::ReplayBackend>(store), std::make_shared<retrieval::OfflineCorpus>(kE2e / "corpus"));
    const auto dataset = eval::load_dataset(kE2e / "dataset.jsonl");
    const auto entries = answer_batch(p, fixture_questions(), config(), 1);
    ASSERT_EQ(entries.size(), dataset.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        ASSERT_TRUE(entries[i].result) << entries[i].error;
        const auto& r = *entries[i].result;
        EXPECT_EQ(eval::exact_match(r.answer.value, dataset[i].gold_answers), 1) << dataset[i].id;
        for (const auto& item : r.trace.items) {
            const bool resolves = std::any_of(r.trace.documents.begin(), r.trace.documents.end(),
                                              [&](const Document& d) { return d.find_segment(item.segment_id); });
            EXPECT_TRUE(resolves) << item.segment_id;
        }
        ASSERT_TRUE(r.answer.supporting_item);
        const auto ordinal = r.answer.supporting_item->ordinal;
        const auto report = std::find_if(r.trace.check_reports.begin(), r.trace.check_reports.end(),
                                         [&](const CheckReport& c) { return c.item_ordinal == ordinal; });
        ASSERT_NE(report, r.trace.check_reports.end());
        EXPECT_TRUE(report->passed()) << dataset[i].id;
    }
}

TEST(Replay, ParallelismDoesNotChangeTraces) {
    const auto store = std::make_shared<llm::TraceStore>(kE2e / "traces");
    Pipeline p(std::make_shared<llm::ReplayBackend>(store), std::make_shared<retrieval::OfflineCorpus>(kE2e / "corpus"));
    for (auto mode : {PipelineMode::full, PipelineMode::without_check_match}) {
        const auto one = traces_of(answer_batch(p, fixture_questions(), config(mode), 1));
        const auto four = traces_of(answer_batch(p, fixture_questions(), config(mode), 4));
        EXPECT_EQ(one, four);
    }
}

TEST(Replay, ScriptRegeneratesShippedTraces) {
    support::TempDir dir;
    const auto store = std::make_shared<llm::TraceStore>(dir.path());
    auto searcher = std::make_shared<retrieval::OfflineCorpus>(kE2e / "corpus");
    for (auto mode : {PipelineMode::full, PipelineMode::without_check_match}) {
        auto recording = std::make_shared<llm::RecordingBackend>(cli::load_script(kE2e / "script.json"), store,
                                                                 [] { return std::string("2023-01-01T00:00:00Z"); });
        Pipeline p(recording, searcher);
        for (const auto& e : answer_batch(p, fixture_questions(), config(mode), 1)) EXPECT_TRUE(e.result) << e.error;
    }
    EXPECT_EQ(support::read_text(store->file()), support::read_text(kE2e / "traces" / "traces.jsonl"));
}
