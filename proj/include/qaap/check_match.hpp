#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qaap/model.hpp"

namespace qaap {

struct CheckConfig {
    /// Reject items whose year tokens are absent from their segment.
    bool check_time_in_context = true;
    /// Keep internal-knowledge items only when an external item backs them.
    bool check_internal_against_external = true;
};

enum class CheckFailureKind { field_mismatch, time_not_in_context, uncorroborated_internal };

struct CheckFailure {
    CheckFailureKind kind;
    std::string key;  // query field name for field_mismatch, else empty
    friend bool operator==(const CheckFailure&, const CheckFailure&) = default;
};

struct CheckReport {
    int item_ordinal = 0;
    std::vector<CheckFailure> failures;
    bool passed() const { return failures.empty(); }
};

/// Digit runs of length 3 or 4 not adjacent to other digits.
std::vector<std::string> year_tokens(std::string_view text);

/// Field consistency: every query field other than time and the answer_key
/// field must equal the item's after normalize_field. Time check: every year
/// token of item.time_raw must appear as a year token of segment_text.
CheckReport check_item(const ExtractedItem& item, const ParsedQuery& query, std::string_view segment_text,
                       const CheckConfig& config);

/// Internal items that some external item backs: equal normalized
/// (subject, relation, object) and intersecting grounded times (two missing
/// times count as intersecting). Order is preserved.
std::vector<ExtractedItem> corroborate(const std::vector<ExtractedItem>& internal_items,
                                       const std::vector<ExtractedItem>& external_items);

/// IoU of the item's time against the query interval; 1.0 when the query
/// has no interval; 0.0 when only the item lacks one.
double match_score(const ExtractedItem& item, const std::optional<temporal::TimeInterval>& query_interval);

struct ScoredCandidate {
    ExtractedItem item;
    double score = 0.0;
};

/// Strict ordering used to pick the answer: higher score, then external
/// before internal, then lower document_id, lower segment index, lower
/// ordinal.
bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b);

/// Candidates sorted best-first by ranks_before.
std::vector<ScoredCandidate> rank_candidates(std::vector<ScoredCandidate> candidates);

Answer select_answer(const std::vector<ScoredCandidate>& candidates, const ParsedQuery& query, double min_score = 0.0);

std::string_view to_string(CheckFailureKind kind);
void to_json(nlohmann::json& j, const CheckReport& report);
void to_json(nlohmann::json& j, const ScoredCandidate& candidate);

}  // namespace qaap
