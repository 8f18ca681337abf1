#include <gtest/gtest.h>

#include <random>

#include "qaap/error.hpp"
#include "qaap/literal.hpp"

using namespace qaap;
using namespace qaap::literal;

namespace {

ItemContext context() {
    return ItemContext{"wiki:x", "wiki:x#0", 0, KnowledgeSource::external, 0, temporal::CivilDate{2023, 1, 1}};
}

}  // namespace

TEST(ParseScript, QueryAssignment) {
    const auto s = parse_script(R"(query = {"subject": "X", "relation": "r", "object": "ANSWER", "time": "in 1996"})");
    ASSERT_EQ(s.statements.size(), 1u);
    EXPECT_EQ(s.statements[0].kind, StatementKind::assign);
    EXPECT_EQ(s.statements[0].name, "query");
    ASSERT_NE(s.statements[0].value.as_mapping(), nullptr);
    EXPECT_EQ(s.statements[0].value.as_mapping()->size(), 4u);
}

TEST(ParseScript, SingleQuotedAppend) {
    const auto s =
        parse_script("information.append({'subject': 'X', 'relation': 'r', 'object': 'Y', 'time': '1994 - 1998'})");
    ASSERT_EQ(s.statements.size(), 1u);
    EXPECT_EQ(s.statements[0].kind, StatementKind::append);
    EXPECT_EQ(*s.statements[0].value.find("time")->as_string(), "1994 - 1998");
}

TEST(ParseScript, TruncatedLiteralIsMalformed) {
    try {
        parse_script("Sure, here it is:\nquery = {\"subject\": \"X\",");
        FAIL() << "expected MalformedLiteral";
    } catch (const MalformedLiteral& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(ParseScript, FencesProseCommentsAndTrailingCommas) {
    const std::string text =
        "Here is the code.\n"
        "```python\n"
        "# the query\n"
        "query = {\n"
        "    'subject': \"X\",  # inline\n"
        "    'relation': 'r',\n"
        "    'object': 'ANSWER',\n"
        "    'time': None,\n"
        "}\n"
        "answer_key = 'object'\n"
        "```\n"
        "foo = 1 outside the fence is ignored\n";
    const auto s = parse_script(text);
    ASSERT_EQ(s.statements.size(), 2u);
    EXPECT_EQ(s.statements[0].line, 4u);
    EXPECT_TRUE(s.statements[0].value.find("time")->is_null());
    EXPECT_EQ(*s.statements[1].value.as_string(), "object");
}

TEST(ParseScript, ComparisonIsNotAnAssignment) {
    EXPECT_TRUE(parse_script("if x == 3:\n    pass\n").statements.empty());
}

TEST(ParseLiteral, ScalarsEscapesAndNesting) {
    EXPECT_EQ(*parse_literal("-42").as_int(), -42);
    EXPECT_EQ(*parse_literal(R"('it\'s é\n')").as_string(), "it's \xC3\xA9\n");
    EXPECT_EQ(parse_literal("[1, [2, [3]]]").as_sequence()->size(), 2u);
    EXPECT_THROW(parse_literal("[[[[1]]]]"), MalformedLiteral);
    EXPECT_THROW(parse_literal("{'a': 1, 'a': 2}"), MalformedLiteral);
    EXPECT_THROW(parse_literal("{1: 'a'}"), MalformedLiteral);
    EXPECT_THROW(parse_literal("1 + 2"), MalformedLiteral);
    EXPECT_THROW(parse_literal("open('x')"), MalformedLiteral);
}

TEST(ParseLiteral, RenderRoundTrip) {
    const auto v = parse_literal(R"({"a": [1, None, "q\"uote"], "b": {"c": 'tab\there'}})");
    EXPECT_EQ(parse_literal(render_literal(v)), v);
}

TEST(ParseScript, NeverCrashesOnArbitraryBytes) {
    std::mt19937 rng(5);
    const std::string pieces[] = {"query", " = ", "{", "}", "[", "]", "'", "\"", ",", ":", "\n", "information.append(",
                                  ")", "None", "12", "\\", "#", "```", "ANSWER", "\xff", "\xc3"};
    std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1), len(0, 30);
    for (int i = 0; i < 3000; ++i) {
        std::string s;
        for (std::size_t n = len(rng); n > 0; --n) s += pieces[pick(rng)];
        try {
            parse_script(s);
        } catch (const MalformedLiteral&) {
        }
        EXPECT_NO_THROW(parse_script_lenient(s));
    }
}

TEST(ToQuery, InfersAnswerKeyFromPlaceholder) {
    const auto q =
        to_query(parse_script(R"(query = {"subject": "X", "relation": "r", "object": "ANSWER", "time": "in 1996"})"));
    EXPECT_EQ(q.answer_key, AnswerKey::object);
    EXPECT_EQ(q.time.kind, temporal::ConstraintKind::exact);
}

TEST(ToQuery, MissingQuery) { EXPECT_THROW(to_query(parse_script("answer_key = 'object'")), MissingQuery); }

TEST(ToQuery, ExplicitAnswerKeyWins) {
    const auto q = to_query(parse_script(
        "query = {'subject': 'ANSWER', 'relation': 'r', 'object': 'Y', 'time': 'in 1996'}\nanswer_key = \"object\""));
    EXPECT_EQ(q.answer_key, AnswerKey::object);
    EXPECT_EQ(q.object, "ANSWER");
    EXPECT_EQ(q.subject, "");
    EXPECT_NO_THROW(q.validate());
}

TEST(ToQuery, AmbiguousWithoutExplicitKey) {
    EXPECT_THROW(to_query(parse_script("query = {'subject': 'ANSWER', 'relation': 'r', 'object': 'ANSWER'}")),
                 AmbiguousAnswerKey);
    EXPECT_THROW(to_query(parse_script("query = {'subject': 'X', 'relation': 'r', 'object': 'Y'}")),
                 AmbiguousAnswerKey);
}

TEST(ToQuery, MissingTimeIsUnspecified) {
    const auto q = to_query(parse_script("query = {'subject': 'X', 'relation': 'r', 'object': 'ANSWER'}"));
    EXPECT_EQ(q.time.kind, temporal::ConstraintKind::unspecified);
}

TEST(ToQuery, RoundTripsThroughRenderQuery) {
    for (const auto& q : {ParsedQuery{"X", "r", "ANSWER", temporal::parse_temporal("from 1994 to 1998"), AnswerKey::object},
                          ParsedQuery{"ANSWER", "chair's \"office\"", "Y", temporal::parse_temporal(""), AnswerKey::subject},
                          ParsedQuery{"X", "join", "Y", temporal::parse_temporal("ANSWER"), AnswerKey::time}})
        EXPECT_EQ(to_query(parse_script(render_query(q))), q);
}

TEST(ToItems, AppendsInOrderWithOrdinals) {
    const auto s = parse_script(
        "information = []\n"
        "information.append({'subject': 'X', 'relation': 'r', 'object': 'A', 'time': 'from 1994 to 1998'})\n"
        "information.append({'subject': 'X', 'relation': 'r', 'object': 'B', 'time': '2001'})\n");
    auto ctx = context();
    ctx.first_ordinal = 7;
    const auto r = to_items(s, ctx);
    ASSERT_EQ(r.items.size(), 2u);
    EXPECT_EQ(r.items[0].ordinal, 7);
    EXPECT_EQ(r.items[1].ordinal, 8);
    EXPECT_EQ(r.items[0].object, "A");
    ASSERT_TRUE(r.items[0].time);
    EXPECT_EQ(temporal::format_interval(*r.items[0].time), "[1994-01-01, 1998-12-31]");
    EXPECT_EQ(r.items[1].segment_id, "wiki:x#0");
}

TEST(ToItems, EmptyListAndDefaults) {
    EXPECT_TRUE(to_items(parse_script("information = []"), context()).items.empty());
    const auto r = to_items(parse_script("information = [{'subject': 'X', 'object': 7}]"), context());
    ASSERT_EQ(r.items.size(), 1u);
    EXPECT_EQ(r.items[0].relation, "");
    EXPECT_EQ(r.items[0].object, "7");
    EXPECT_EQ(r.items[0].time_raw, "");
    EXPECT_FALSE(r.items[0].time);
}

TEST(ToItems, LenientRecoveryKeepsGoodEntries) {
    const auto parsed = parse_script_lenient(
        "information = []\n"
        "information.append({'subject': 'X', 'relation': 'r', 'object': 'A', 'time': '1990'})\n"
        "information.append({'subject': 'X', 'relation': 'r', 'object': \n"
        "information.append('not a mapping')\n"
        "information.append({'subject': 'X', 'relation': 'r', 'object': 'C', 'time': '1992'})\n");
    EXPECT_EQ(parsed.diagnostics.size(), 1u);
    const auto r = to_items(parsed.script, context());
    ASSERT_EQ(r.items.size(), 2u);
    EXPECT_EQ(r.items[1].object, "C");
    EXPECT_EQ(r.diagnostics.size(), 1u);
}

TEST(ToItems, RoundTripsThroughRenderItems) {
    std::vector<ExtractedItem> items(2);
    items[0].subject = "X";
    items[0].relation = "r";
    items[0].object = "O'Neil";
    items[0].time_raw = "since 2005";
    items[1].subject = "X";
    items[1].relation = "r";
    items[1].object = "B";
    const auto r = to_items(parse_script(render_items(items)), context());
    ASSERT_EQ(r.items.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(r.items[i].object, items[i].object);
        EXPECT_EQ(r.items[i].time_raw, items[i].time_raw);
    }
}
