#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qaap/temporal.hpp"

namespace qaap {

/// Sentinel marking the unknown field of a query.
inline constexpr std::string_view kAnswerPlaceholder = "ANSWER";

enum class AnswerKey { subject, object, time };
enum class KnowledgeSource { internal, external };
enum class Confidence { matched, low_confidence, unanswerable };

std::string_view to_string(AnswerKey key);
std::string_view to_string(KnowledgeSource source);
std::string_view to_string(Confidence confidence);
std::optional<AnswerKey> answer_key_from_string(std::string_view text);
std::optional<KnowledgeSource> knowledge_source_from_string(std::string_view text);

/// Lowercase, collapse whitespace, strip surrounding punctuation. Idempotent.
std::string normalize_field(std::string_view text);

/// The structured form of a question: (subject, relation, object, time) with
/// exactly one of subject/object/time holding the ANSWER placeholder.
struct ParsedQuery {
    std::string subject;
    std::string relation;
    std::string object;
    temporal::TemporalConstraint time;
    AnswerKey answer_key = AnswerKey::object;

    /// Throws std::invalid_argument when the placeholder invariant or the
    /// non-empty relation invariant is violated.
    void validate() const;
    /// Raw text of the named field; time yields its raw_text.
    const std::string& field(AnswerKey key) const;

    friend bool operator==(const ParsedQuery&, const ParsedQuery&) = default;
};

struct ExtractedItem {
    std::string subject;
    std::string relation;
    std::string object;
    std::string time_raw;
    std::optional<temporal::TimeInterval> time;
    KnowledgeSource source = KnowledgeSource::external;
    std::string segment_id;
    int segment_index = 0;
    std::string document_id;
    int ordinal = 0;

    /// The value an answer takes when this item is selected. For
    /// answer_key=time this is time_raw, not the grounded interval.
    const std::string& answer_field(AnswerKey key) const;

    friend bool operator==(const ExtractedItem&, const ExtractedItem&) = default;
};

struct Segment {
    std::string id;
    int index = 0;
    std::string text;
    /// True when this segment starts in the middle of a paragraph that was
    /// split at sentence boundaries.
    bool continues_paragraph = false;

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct Document {
    std::string id;
    std::string title;
    KnowledgeSource source = KnowledgeSource::external;
    /// Canonical body: paragraphs separated by one blank line, whitespace
    /// inside paragraphs collapsed.
    std::string body;
    std::vector<Segment> segments;

    const Segment* find_segment(std::string_view segment_id) const;
    friend bool operator==(const Document&, const Document&) = default;
};

/// Canonicalizes raw text into the Document::body form.
std::string canonical_body(std::string_view raw);
std::vector<std::string> split_paragraphs(std::string_view body);

struct Answer {
    std::string value;
    double score = 0.0;
    std::optional<ExtractedItem> supporting_item;
    Confidence confidence = Confidence::unanswerable;
};

void to_json(nlohmann::json& j, const ParsedQuery& q);
void from_json(const nlohmann::json& j, ParsedQuery& q);
void to_json(nlohmann::json& j, const ExtractedItem& item);
void from_json(const nlohmann::json& j, ExtractedItem& item);
void to_json(nlohmann::json& j, const Segment& s);
void from_json(const nlohmann::json& j, Segment& s);
void to_json(nlohmann::json& j, const Document& d);
void from_json(const nlohmann::json& j, Document& d);
void to_json(nlohmann::json& j, const Answer& a);
void from_json(const nlohmann::json& j, Answer& a);

}  // namespace qaap
