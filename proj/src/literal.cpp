#include "qaap/literal.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "qaap/error.hpp"

namespace qaap::literal {

const LiteralValue* LiteralValue::find(std::string_view key) const {
    const auto* mapping = as_mapping();
    if (!mapping) return nullptr;
    for (const auto& [k, v] : *mapping)
        if (k == key) return &v;
    return nullptr;
}

namespace {

struct SyntaxError {
    std::size_t pos;
    std::string reason;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

/// Recursive-descent reader over text[pos, end).
class LiteralReader {
public:
    LiteralReader(std::string_view text, std::size_t pos, std::size_t end) : text_(text), pos_(pos), end_(end) {}

    std::size_t pos() const { return pos_; }
    void set_pos(std::size_t p) { pos_ = p; }
    bool at_end() const { return pos_ >= end_; }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    // Whitespace including newlines, and `#` comments.
    void skip_trivia() {
        while (!at_end()) {
            const char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos_;
            } else if (c == '#') {
                while (!at_end() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    // Spaces and a trailing comment, stopping at the newline.
    void skip_inline_trivia() {
        while (!at_end()) {
            const char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r') {
                ++pos_;
            } else if (c == '#') {
                while (!at_end() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    LiteralValue value(int depth) {
        skip_trivia();
        if (at_end()) fail("unexpected end of input");
        const char c = peek();
        if (c == '{') return mapping(depth + 1);
        if (c == '[') return sequence(depth + 1);
        if (c == '"' || c == '\'') return LiteralValue{string()};
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return integer();
        if (is_ident_start(c)) {
            const auto start = pos_;
            while (!at_end() && is_ident_char(text_[pos_])) ++pos_;
            const auto word = text_.substr(start, pos_ - start);
            if (word == "None") return LiteralValue{nullptr};
            pos_ = start;
            fail("unsupported name '" + std::string(word) + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    [[noreturn]] void fail(std::string reason) const { throw SyntaxError{pos_, std::move(reason)}; }

private:
    void check_depth(int depth) const {
        if (depth > kMaxDepth) fail("nesting deeper than " + std::to_string(kMaxDepth));
    }

    LiteralValue mapping(int depth) {
        check_depth(depth);
        ++pos_;  // '{'
        Mapping entries;
        while (true) {
            skip_trivia();
            if (at_end()) fail("unterminated mapping");
            if (peek() == '}') {
                ++pos_;
                break;
            }
            if (peek() != '"' && peek() != '\'') fail("mapping keys must be strings");
            auto key = string();
            skip_trivia();
            if (peek() != ':') fail("expected ':' after mapping key");
            ++pos_;
            auto v = value(depth);
            if (std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == key; }))
                fail("duplicate mapping key '" + key + "'");
            entries.emplace_back(std::move(key), std::move(v));
            skip_trivia();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() == '}') {
                ++pos_;
                break;
            }
            fail(at_end() ? "unterminated mapping" : "expected ',' or '}' in mapping");
        }
        return LiteralValue{std::move(entries)};
    }

    LiteralValue sequence(int depth) {
        check_depth(depth);
        ++pos_;  // '['
        Sequence elements;
        while (true) {
            skip_trivia();
            if (at_end()) fail("unterminated list");
            if (peek() == ']') {
                ++pos_;
                break;
            }
            elements.push_back(value(depth));
            skip_trivia();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() == ']') {
                ++pos_;
                break;
            }
            fail(at_end() ? "unterminated list" : "expected ',' or ']' in list");
        }
        return LiteralValue{std::move(elements)};
    }

    unsigned hex_digits(int count) {
        unsigned v = 0;
        for (int i = 0; i < count; ++i) {
            if (at_end() || !std::isxdigit(static_cast<unsigned char>(peek()))) fail("bad escape sequence");
            const char h = text_[pos_++];
            v = v * 16 + static_cast<unsigned>(std::isdigit(static_cast<unsigned char>(h)) ? h - '0'
                                                                                          : std::tolower(h) - 'a' + 10);
        }
        return v;
    }

    std::string string() {
        const char quote = text_[pos_++];
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = text_[pos_++];
            if (c == quote) break;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (at_end()) fail("unterminated string");
            const char e = text_[pos_++];
            switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '\\': out += '\\'; break;
                case '\'': out += '\''; break;
                case '"': out += '"'; break;
                case '\n': break;  // line continuation
                case 'x': append_utf8(out, hex_digits(2)); break;
                case 'u': {
                    const auto cp = hex_digits(4);
                    if (cp >= 0xD800 && cp <= 0xDFFF) fail("surrogate escape");
                    append_utf8(out, cp);
                    break;
                }
                default:
                    out += '\\';
                    out += e;
            }
        }
        return out;
    }

    LiteralValue integer() {
        const auto start = pos_;
        if (peek() == '-') ++pos_;
        const auto digits = pos_;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (pos_ == digits) fail("expected digits");
        if (!at_end() && (peek() == '.' || peek() == 'e' || peek() == 'E' || is_ident_char(peek())))
            fail("unsupported number literal");
        std::int64_t v = 0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc{}) fail("integer out of range");
        return LiteralValue{v};
    }

    std::string_view text_;
    std::size_t pos_;
    std::size_t end_;
};

std::size_t line_of(std::string_view text, std::size_t pos) {
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(std::min(pos, text.size())), '\n'));
}

struct Range {
    std::size_t begin;
    std::size_t end;
};

// Contents of ``` fenced blocks; the whole text when there are no fences.
// An unterminated fence runs to the end of the text.
std::vector<Range> code_ranges(std::string_view text) {
    std::vector<Range> ranges;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        auto body = text.find('\n', open);
        if (body == std::string_view::npos) break;
        ++body;
        const auto close = text.find("```", body);
        if (close == std::string_view::npos) {
            ranges.push_back({body, text.size()});
            break;
        }
        ranges.push_back({body, close});
        pos = close + 3;
    }
    if (ranges.empty()) ranges.push_back({0, text.size()});
    return ranges;
}

struct StatementHead {
    StatementKind kind;
    std::string name;
    std::size_t rhs;  // position where the literal starts
};

// Recognizes `name =` or `name.append(` at `pos` (already past indentation).
std::optional<StatementHead> statement_head(std::string_view text, std::size_t pos, std::size_t end) {
    if (pos >= end || !is_ident_start(text[pos])) return std::nullopt;
    auto p = pos;
    while (p < end && is_ident_char(text[p])) ++p;
    std::string name(text.substr(pos, p - pos));
    auto q = p;
    while (q < end && (text[q] == ' ' || text[q] == '\t')) ++q;
    if (q < end && text[q] == '=' && (q + 1 >= end || text[q + 1] != '=')) return StatementHead{StatementKind::assign, name, q + 1};
    constexpr std::string_view kAppend = ".append";
    if (text.substr(p, kAppend.size()) == kAppend) {
        q = p + kAppend.size();
        while (q < end && (text[q] == ' ' || text[q] == '\t')) ++q;
        if (q < end && text[q] == '(') return StatementHead{StatementKind::append, name, q + 1};
    }
    return std::nullopt;
}

template <typename OnError>
AssignmentScript scan(std::string_view text, OnError&& on_error) {
    AssignmentScript script;
    for (const auto range : code_ranges(text)) {
        std::size_t line_start = range.begin;
        while (line_start < range.end) {
            auto line_end = text.find('\n', line_start);
            if (line_end == std::string_view::npos || line_end > range.end) line_end = range.end;
            auto p = line_start;
            while (p < line_end && (text[p] == ' ' || text[p] == '\t')) ++p;
            auto next_line = line_end + 1;

            if (auto head = statement_head(text, p, line_end)) {
                LiteralReader reader(text, head->rhs, range.end);
                try {
                    Statement st;
                    st.kind = head->kind;
                    st.name = head->name;
                    st.line = line_of(text, line_start);
                    st.value = reader.value(0);
                    if (head->kind == StatementKind::append) {
                        reader.skip_trivia();
                        if (reader.peek() != ')') reader.fail("expected ')' to close append");
                        reader.set_pos(reader.pos() + 1);
                    }
                    reader.skip_inline_trivia();
                    if (reader.peek() == ';') {
                        reader.set_pos(reader.pos() + 1);
                        reader.skip_inline_trivia();
                    }
                    if (!reader.at_end() && reader.peek() != '\n') reader.fail("unexpected text after statement");
                    script.statements.push_back(std::move(st));
                    next_line = reader.pos() + 1;
                } catch (const SyntaxError& err) {
                    on_error(Diagnostic{line_of(text, std::min(err.pos, text.size())), err.reason});
                }
            }
            line_start = next_line;
        }
    }
    return script;
}

std::string scalar_text(const LiteralValue& v, bool& ok) {
    ok = true;
    if (const auto* s = v.as_string()) return *s;
    if (const auto* i = v.as_int()) return std::to_string(*i);
    if (v.is_null()) return {};
    ok = false;
    return {};
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned>(static_cast<unsigned char>(c)));
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
    return out;
}

}  // namespace

AssignmentScript parse_script(std::string_view text) {
    return scan(text, [](const Diagnostic& d) -> void { throw MalformedLiteral(d.line, d.reason); });
}

LenientParse parse_script_lenient(std::string_view text) {
    LenientParse result;
    result.script = scan(text, [&](const Diagnostic& d) { result.diagnostics.push_back(d); });
    return result;
}

LiteralValue parse_literal(std::string_view text) {
    LiteralReader reader(text, 0, text.size());
    try {
        auto v = reader.value(0);
        reader.skip_trivia();
        if (!reader.at_end()) reader.fail("trailing text after literal");
        return v;
    } catch (const SyntaxError& err) {
        throw MalformedLiteral(line_of(text, err.pos), err.reason);
    }
}

std::string render_literal(const LiteralValue& value) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::nullptr_t>) {
                return "None";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return quote(v);
            } else if constexpr (std::is_same_v<T, Mapping>) {
                std::string out = "{";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ", ";
                    out += quote(v[i].first) + ": " + render_literal(v[i].second);
                }
                return out + "}";
            } else {
                std::string out = "[";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ", ";
                    out += render_literal(v[i]);
                }
                return out + "]";
            }
        },
        value.value);
}

// ---------------------------------------------------------------------------

ParsedQuery to_query(const AssignmentScript& script) {
    const Statement* query_stmt = nullptr;
    const Statement* key_stmt = nullptr;
    for (const auto& st : script.statements) {
        if (st.kind != StatementKind::assign) continue;
        if (st.name == "query") query_stmt = &st;
        if (st.name == "answer_key") key_stmt = &st;
    }
    if (!query_stmt) throw MissingQuery();
    if (!query_stmt->value.as_mapping()) throw MalformedLiteral(query_stmt->line, "query must be a mapping");

    auto field = [&](std::string_view key) {
        const auto* v = query_stmt->value.find(key);
        if (!v) return std::string{};
        bool ok = false;
        auto s = scalar_text(*v, ok);
        if (!ok) throw MalformedLiteral(query_stmt->line, "query field '" + std::string(key) + "' must be a scalar");
        return s;
    };

    ParsedQuery q;
    q.subject = field("subject");
    q.relation = field("relation");
    q.object = field("object");
    q.time = temporal::parse_temporal(field("time"));
    if (normalize_field(q.relation).empty()) throw MalformedLiteral(query_stmt->line, "query relation is empty");

    if (key_stmt) {
        const auto* text = key_stmt->value.as_string();
        const auto key = text ? answer_key_from_string(*text) : std::nullopt;
        if (!key) throw MalformedLiteral(key_stmt->line, "answer_key must be one of subject/object/time");
        q.answer_key = *key;
        // An explicit key wins: the named field becomes the placeholder and
        // stray placeholders elsewhere are cleared.
        for (auto k : {AnswerKey::subject, AnswerKey::object, AnswerKey::time}) {
            if (k == q.answer_key || q.field(k) != kAnswerPlaceholder) continue;
            if (k == AnswerKey::time)
                q.time = temporal::parse_temporal("");
            else
                (k == AnswerKey::subject ? q.subject : q.object).clear();
        }
        if (q.answer_key == AnswerKey::time)
            q.time = temporal::parse_temporal(kAnswerPlaceholder);
        else
            (q.answer_key == AnswerKey::subject ? q.subject : q.object) = std::string(kAnswerPlaceholder);
        return q;
    }

    int count = 0;
    for (auto k : {AnswerKey::subject, AnswerKey::object, AnswerKey::time}) {
        if (q.field(k) == kAnswerPlaceholder) {
            ++count;
            q.answer_key = k;
        }
    }
    if (count != 1) throw AmbiguousAnswerKey(count);
    return q;
}

ItemsResult to_items(const AssignmentScript& script, const ItemContext& ctx) {
    ItemsResult result;
    int ordinal = ctx.first_ordinal;

    auto take = [&](const LiteralValue& entry, std::size_t line) {
        if (!entry.as_mapping()) {
            result.diagnostics.push_back({line, "information entry is not a mapping"});
            return;
        }
        ExtractedItem item;
        bool all_ok = true;
        auto field = [&](std::string_view key) {
            const auto* v = entry.find(key);
            if (!v) return std::string{};
            bool ok = false;
            auto s = scalar_text(*v, ok);
            if (!ok) all_ok = false;
            return s;
        };
        item.subject = field("subject");
        item.relation = field("relation");
        item.object = field("object");
        item.time_raw = field("time");
        if (!all_ok) {
            result.diagnostics.push_back({line, "information entry has a non-scalar field"});
            return;
        }
        item.time = temporal::ground(temporal::parse_temporal(item.time_raw), ctx.reference_date);
        item.source = ctx.source;
        item.document_id = ctx.document_id;
        item.segment_id = ctx.segment_id;
        item.segment_index = ctx.segment_index;
        item.ordinal = ordinal++;
        result.items.push_back(std::move(item));
    };

    for (const auto& st : script.statements) {
        if (st.name != "information") continue;
        if (st.kind == StatementKind::append) {
            take(st.value, st.line);
        } else if (const auto* seq = st.value.as_sequence()) {
            for (const auto& entry : *seq) take(entry, st.line);
        } else {
            result.diagnostics.push_back({st.line, "information must be a list"});
        }
    }
    return result;
}

std::string render_query(const ParsedQuery& query) {
    Mapping m{{"subject", LiteralValue{query.subject}},
              {"relation", LiteralValue{query.relation}},
              {"object", LiteralValue{query.object}},
              {"time", LiteralValue{query.time.raw_text}}};
    return "query = " + render_literal(LiteralValue{std::move(m)}) + "\nanswer_key = " +
           quote(to_string(query.answer_key)) + "\n";
}

std::string render_items(const std::vector<ExtractedItem>& items) {
    std::string out = "information = []\n";
    for (const auto& item : items) {
        Mapping m{{"subject", LiteralValue{item.subject}},
                  {"relation", LiteralValue{item.relation}},
                  {"object", LiteralValue{item.object}},
                  {"time", LiteralValue{item.time_raw}}};
        out += "information.append(" + render_literal(LiteralValue{std::move(m)}) + ")\n";
    }
    return out;
}

}  // namespace qaap::literal
