#include "qaap/check_match.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace qaap {

std::vector<std::string> year_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        const auto start = i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        const auto len = i - start;
        if (len == 3 || len == 4) tokens.emplace_back(text.substr(start, len));
    }
    return tokens;
}

CheckReport check_item(const ExtractedItem& item, const ParsedQuery& query, std::string_view segment_text,
                       const CheckConfig& config) {
    CheckReport report;
    report.item_ordinal = item.ordinal;

    struct Field {
        std::string_view name;
        const std::string& item_value;
        const std::string& query_value;
        bool is_answer;
    };
    const Field fields[] = {
        {"subject", item.subject, query.subject, query.answer_key == AnswerKey::subject},
        {"relation", item.relation, query.relation, false},
        {"object", item.object, query.object, query.answer_key == AnswerKey::object},
    };
    for (const auto& f : fields) {
        if (f.is_answer) continue;
        if (normalize_field(f.item_value) != normalize_field(f.query_value))
            report.failures.push_back({CheckFailureKind::field_mismatch, std::string(f.name)});
    }

    if (config.check_time_in_context && !item.time_raw.empty()) {
        const auto context_years = year_tokens(segment_text);
        const std::set<std::string> present(context_years.begin(), context_years.end());
        for (const auto& year : year_tokens(item.time_raw)) {
            if (!present.count(year)) {
                report.failures.push_back({CheckFailureKind::time_not_in_context, ""});
                break;
            }
        }
    }
    return report;
}

namespace {

bool same_fact(const ExtractedItem& a, const ExtractedItem& b) {
    if (normalize_field(a.subject) != normalize_field(b.subject)) return false;
    if (normalize_field(a.relation) != normalize_field(b.relation)) return false;
    if (normalize_field(a.object) != normalize_field(b.object)) return false;
    if (!a.time && !b.time) return true;
    if (!a.time || !b.time) return false;
    return temporal::intersects(*a.time, *b.time);
}

}  // namespace

std::vector<ExtractedItem> corroborate(const std::vector<ExtractedItem>& internal_items,
                                       const std::vector<ExtractedItem>& external_items) {
    std::vector<ExtractedItem> kept;
    for (const auto& item : internal_items) {
        const bool backed = std::any_of(external_items.begin(), external_items.end(),
                                        [&](const ExtractedItem& ext) { return same_fact(item, ext); });
        if (backed) kept.push_back(item);
    }
    return kept;
}

double match_score(const ExtractedItem& item, const std::optional<temporal::TimeInterval>& query_interval) {
    if (!query_interval) return 1.0;
    if (!item.time) return 0.0;
    return temporal::iou(*item.time, *query_interval);
}

bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.item.source != b.item.source) return a.item.source == KnowledgeSource::external;
    if (a.item.document_id != b.item.document_id) return a.item.document_id < b.item.document_id;
    if (a.item.segment_index != b.item.segment_index) return a.item.segment_index < b.item.segment_index;
    return a.item.ordinal < b.item.ordinal;
}

std::vector<ScoredCandidate> rank_candidates(std::vector<ScoredCandidate> candidates) {
    std::stable_sort(candidates.begin(), candidates.end(), ranks_before);
    return candidates;
}

Answer select_answer(const std::vector<ScoredCandidate>& candidates, const ParsedQuery& query, double min_score) {
    Answer answer;
    if (candidates.empty()) {
        answer.confidence = Confidence::unanswerable;
        return answer;
    }
    const auto best = std::min_element(candidates.begin(), candidates.end(), ranks_before);
    answer.value = best->item.answer_field(query.answer_key);
    answer.score = best->score;
    answer.supporting_item = best->item;
    answer.confidence = best->score > min_score ? Confidence::matched : Confidence::low_confidence;
    return answer;
}

std::string_view to_string(CheckFailureKind kind) {
    switch (kind) {
        case CheckFailureKind::field_mismatch: return "field_mismatch";
        case CheckFailureKind::time_not_in_context: return "time_not_in_context";
        case CheckFailureKind::uncorroborated_internal: return "uncorroborated_internal";
    }
    return "field_mismatch";
}

void to_json(nlohmann::json& j, const CheckReport& report) {
    auto failures = nlohmann::json::array();
    for (const auto& f : report.failures) {
        nlohmann::json entry = {{"kind", to_string(f.kind)}};
        if (!f.key.empty()) entry["key"] = f.key;
        failures.push_back(std::move(entry));
    }
    j = {{"item_ordinal", report.item_ordinal}, {"passed", report.passed()}, {"failures", std::move(failures)}};
}

void to_json(nlohmann::json& j, const ScoredCandidate& candidate) {
    j = {{"item", candidate.item}, {"score", candidate.score}};
}

}  // namespace qaap
