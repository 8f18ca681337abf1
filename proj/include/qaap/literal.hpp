#pragma once

// Reader for the code convention the model answers in: a handful of
// `name = <literal>` and `name.append(<literal>)` statements whose right-hand
// sides are Python-style literals (strings, integers, None, dicts, lists).
// Nothing is evaluated; anything outside the grammar is skipped or reported.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qaap/model.hpp"

namespace qaap::literal {

struct LiteralValue;
using Mapping = std::vector<std::pair<std::string, LiteralValue>>;
using Sequence = std::vector<LiteralValue>;

struct LiteralValue {
    std::variant<std::nullptr_t, std::int64_t, std::string, Mapping, Sequence> value;

    bool is_null() const { return std::holds_alternative<std::nullptr_t>(value); }
    const std::string* as_string() const { return std::get_if<std::string>(&value); }
    const std::int64_t* as_int() const { return std::get_if<std::int64_t>(&value); }
    const Mapping* as_mapping() const { return std::get_if<Mapping>(&value); }
    const Sequence* as_sequence() const { return std::get_if<Sequence>(&value); }
    /// Mapping lookup; nullptr when absent or not a mapping.
    const LiteralValue* find(std::string_view key) const;

    friend bool operator==(const LiteralValue&, const LiteralValue&) = default;
};

/// Maximum nesting of mappings/sequences inside one right-hand side.
inline constexpr int kMaxDepth = 3;

enum class StatementKind { assign, append };

struct Statement {
    StatementKind kind = StatementKind::assign;
    std::string name;
    LiteralValue value;
    std::size_t line = 0;  // 1-based, within the original completion text
    friend bool operator==(const Statement&, const Statement&) = default;
};

struct AssignmentScript {
    std::vector<Statement> statements;
};

struct Diagnostic {
    std::size_t line = 0;
    std::string reason;
};

struct LenientParse {
    AssignmentScript script;
    std::vector<Diagnostic> diagnostics;
};

/// Strict: the first statement whose right-hand side fails to parse raises
/// MalformedLiteral. Lines that are not statements are skipped.
AssignmentScript parse_script(std::string_view text);

/// Lenient: malformed statements are dropped and reported, the rest kept.
LenientParse parse_script_lenient(std::string_view text);

/// Parses a single literal (whole input must be consumed).
LiteralValue parse_literal(std::string_view text);

std::string render_literal(const LiteralValue& value);

/// Builds the query from the last `query` assignment, inferring answer_key
/// from the unique ANSWER field unless an explicit `answer_key` is assigned.
ParsedQuery to_query(const AssignmentScript& script);

struct ItemContext {
    std::string document_id;
    std::string segment_id;
    int segment_index = 0;
    KnowledgeSource source = KnowledgeSource::external;
    int first_ordinal = 0;
    temporal::CivilDate reference_date;
};

struct ItemsResult {
    std::vector<ExtractedItem> items;
    std::vector<Diagnostic> diagnostics;
};

/// Collects every `information = [...]` and `information.append(...)` entry
/// in statement order. Non-mapping entries are reported and skipped; missing
/// keys default to empty strings.
ItemsResult to_items(const AssignmentScript& script, const ItemContext& context);

/// Statement syntax for a query (`query = {...}` plus `answer_key = "..."`).
std::string render_query(const ParsedQuery& query);
/// Statement syntax for items (`information = []` plus one append each).
std::string render_items(const std::vector<ExtractedItem>& items);

}  // namespace qaap::literal
