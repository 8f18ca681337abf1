#include "qaap/model.hpp"

#include <cctype>
#include <stdexcept>

#include "qaap/text.hpp"

namespace qaap {

std::string_view to_string(AnswerKey key) {
    switch (key) {
        case AnswerKey::subject: return "subject";
        case AnswerKey::object: return "object";
        case AnswerKey::time: return "time";
    }
    return "object";
}

std::string_view to_string(KnowledgeSource source) {
    return source == KnowledgeSource::internal ? "internal" : "external";
}

std::string_view to_string(Confidence confidence) {
    switch (confidence) {
        case Confidence::matched: return "matched";
        case Confidence::low_confidence: return "low_confidence";
        case Confidence::unanswerable: return "unanswerable";
    }
    return "unanswerable";
}

std::optional<AnswerKey> answer_key_from_string(std::string_view text) {
    const auto t = normalize_field(text);
    if (t == "subject") return AnswerKey::subject;
    if (t == "object") return AnswerKey::object;
    if (t == "time") return AnswerKey::time;
    return std::nullopt;
}

std::optional<KnowledgeSource> knowledge_source_from_string(std::string_view text) {
    if (text == "internal") return KnowledgeSource::internal;
    if (text == "external") return KnowledgeSource::external;
    return std::nullopt;
}

namespace {

Confidence confidence_from_string(std::string_view text) {
    if (text == "matched") return Confidence::matched;
    if (text == "low_confidence") return Confidence::low_confidence;
    if (text == "unanswerable") return Confidence::unanswerable;
    throw std::invalid_argument("unknown confidence: " + std::string(text));
}

bool strip_char(char c) { return text::is_space(c) || std::ispunct(static_cast<unsigned char>(c)); }

}  // namespace

std::string normalize_field(std::string_view input) {
    std::string s = text::collapse_whitespace(text::to_lower(input));
    std::size_t b = 0, e = s.size();
    while (b < e && strip_char(s[b])) ++b;
    while (e > b && strip_char(s[e - 1])) --e;
    return s.substr(b, e - b);
}

// ---------------------------------------------------------------------------

const std::string& ParsedQuery::field(AnswerKey key) const {
    switch (key) {
        case AnswerKey::subject: return subject;
        case AnswerKey::object: return object;
        case AnswerKey::time: return time.raw_text;
    }
    return object;
}

void ParsedQuery::validate() const {
    if (normalize_field(relation).empty()) throw std::invalid_argument("query relation is empty");
    int placeholders = 0;
    for (auto key : {AnswerKey::subject, AnswerKey::object, AnswerKey::time}) {
        if (field(key) == kAnswerPlaceholder) {
            ++placeholders;
            if (key != answer_key)
                throw std::invalid_argument("ANSWER placeholder in " + std::string(to_string(key)) +
                                            " but answer_key is " + std::string(to_string(answer_key)));
        }
    }
    if (placeholders != 1) throw std::invalid_argument("query must hold exactly one ANSWER placeholder");
}

const std::string& ExtractedItem::answer_field(AnswerKey key) const {
    switch (key) {
        case AnswerKey::subject: return subject;
        case AnswerKey::object: return object;
        case AnswerKey::time: return time_raw;
    }
    return object;
}

const Segment* Document::find_segment(std::string_view segment_id) const {
    for (const auto& s : segments)
        if (s.id == segment_id) return &s;
    return nullptr;
}

std::vector<std::string> split_paragraphs(std::string_view body) {
    // A paragraph break is a line that is empty or whitespace-only.
    std::vector<std::string> paragraphs;
    std::string current;
    std::size_t pos = 0;
    auto flush = [&] {
        auto collapsed = text::collapse_whitespace(current);
        if (!collapsed.empty()) paragraphs.push_back(std::move(collapsed));
        current.clear();
    };
    while (pos <= body.size()) {
        auto nl = body.find('\n', pos);
        if (nl == std::string_view::npos) nl = body.size();
        const auto line = body.substr(pos, nl - pos);
        if (text::trim(line).empty()) {
            flush();
        } else {
            current += line;
            current += ' ';
        }
        pos = nl + 1;
    }
    flush();
    return paragraphs;
}

std::string canonical_body(std::string_view raw) { return text::join(split_paragraphs(raw), "\n\n"); }

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const ParsedQuery& q) {
    j = {{"subject", q.subject},
         {"relation", q.relation},
         {"object", q.object},
         {"time", q.time.raw_text},
         {"answer_key", to_string(q.answer_key)}};
}

void from_json(const nlohmann::json& j, ParsedQuery& q) {
    q.subject = j.at("subject").get<std::string>();
    q.relation = j.at("relation").get<std::string>();
    q.object = j.at("object").get<std::string>();
    q.time = temporal::parse_temporal(j.value("time", std::string{}));
    auto key = answer_key_from_string(j.at("answer_key").get<std::string>());
    if (!key) throw std::invalid_argument("invalid answer_key: " + j.at("answer_key").dump());
    q.answer_key = *key;
}

void to_json(nlohmann::json& j, const ExtractedItem& item) {
    j = {{"subject", item.subject},
         {"relation", item.relation},
         {"object", item.object},
         {"time_raw", item.time_raw},
         {"time", temporal::optional_interval_to_json(item.time)},
         {"source", to_string(item.source)},
         {"document_id", item.document_id},
         {"segment_id", item.segment_id},
         {"segment_index", item.segment_index},
         {"ordinal", item.ordinal}};
}

void from_json(const nlohmann::json& j, ExtractedItem& item) {
    item.subject = j.value("subject", std::string{});
    item.relation = j.value("relation", std::string{});
    item.object = j.value("object", std::string{});
    item.time_raw = j.value("time_raw", std::string{});
    item.time = j.contains("time") ? temporal::optional_interval_from_json(j.at("time")) : std::nullopt;
    auto source = knowledge_source_from_string(j.value("source", std::string{"external"}));
    if (!source) throw std::invalid_argument("invalid source: " + j.at("source").dump());
    item.source = *source;
    item.document_id = j.value("document_id", std::string{});
    item.segment_id = j.value("segment_id", std::string{});
    item.segment_index = j.value("segment_index", 0);
    item.ordinal = j.value("ordinal", 0);
}

void to_json(nlohmann::json& j, const Segment& s) {
    j = {{"id", s.id}, {"index", s.index}, {"text", s.text}, {"continues_paragraph", s.continues_paragraph}};
}

void from_json(const nlohmann::json& j, Segment& s) {
    s.id = j.at("id").get<std::string>();
    s.index = j.at("index").get<int>();
    s.text = j.at("text").get<std::string>();
    s.continues_paragraph = j.value("continues_paragraph", false);
}

void to_json(nlohmann::json& j, const Document& d) {
    j = {{"id", d.id}, {"title", d.title}, {"source", to_string(d.source)}, {"body", d.body}, {"segments", d.segments}};
}

void from_json(const nlohmann::json& j, Document& d) {
    d.id = j.at("id").get<std::string>();
    d.title = j.value("title", std::string{});
    auto source = knowledge_source_from_string(j.value("source", std::string{"external"}));
    if (!source) throw std::invalid_argument("invalid source: " + j.at("source").dump());
    d.source = *source;
    d.body = j.value("body", std::string{});
    d.segments = j.value("segments", std::vector<Segment>{});
}

void to_json(nlohmann::json& j, const Answer& a) {
    j = {{"value", a.value},
         {"score", a.score},
         {"confidence", to_string(a.confidence)},
         {"supporting_item", a.supporting_item ? nlohmann::json(*a.supporting_item) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, Answer& a) {
    a.value = j.at("value").get<std::string>();
    a.score = j.at("score").get<double>();
    a.confidence = confidence_from_string(j.at("confidence").get<std::string>());
    if (j.contains("supporting_item") && !j.at("supporting_item").is_null())
        a.supporting_item = j.at("supporting_item").get<ExtractedItem>();
    else
        a.supporting_item.reset();
}

}  // namespace qaap
