#pragma once

// Random inputs for the Check and Match property suites. Each generator
// records, alongside the value, the facts the property oracle needs, so
// expectations never come from the code under test.

#include <algorithm>
#include <random>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include "qaap/check_match.hpp"
#include "qaap/temporal.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(v.size()) - 1))];
}

inline qaap::ParsedQuery query(qaap::AnswerKey key, const std::string& time_text) {
    qaap::ParsedQuery q;
    q.subject = key == qaap::AnswerKey::subject ? "ANSWER" : "Marta Velasquez";
    q.relation = "hold position";
    q.object = key == qaap::AnswerKey::object ? "ANSWER" : "Port Ellis";
    q.time = qaap::temporal::parse_temporal(key == qaap::AnswerKey::time ? "ANSWER" : time_text);
    q.answer_key = key;
    return q;
}

struct TimeCheckCase {
    qaap::ParsedQuery query;
    qaap::ExtractedItem item;
    std::string segment;
    bool has_absent_year;  // oracle: some year in time_raw was never written into the segment
};

/// Segment built from filler words, a set of "present" years written as
/// standalone tokens, and decoy five-digit numbers that embed other years
/// (substrings, never year tokens). The item's time expression draws each
/// year from the present set or, with some probability, from years that
/// were not written.
inline TimeCheckCase time_check_case(Rng& rng) {
    static const std::vector<std::string> filler = {"the", "club", "season", "won", "moved", "council", "in",
                                                    "was", "elected", "signed", "from", "river", "born", "office"};
    static const std::vector<std::string> templates = {"in {a}", "{a}", "from {a} to {b}", "since {a}", "until {b}",
                                                       "between {a} and {b}", "{a}-{b}", "as of {a}", "before {b}"};
    const auto key = std::vector<qaap::AnswerKey>{qaap::AnswerKey::subject, qaap::AnswerKey::object}[uniform(rng, 0, 1)];

    std::set<int> present;
    const int n_present = uniform(rng, 1, 5);
    while (static_cast<int>(present.size()) < n_present) present.insert(uniform(rng, 1800, 2030));

    auto absent_year = [&] {
        int y;
        do y = uniform(rng, 1800, 2030);
        while (present.count(y));
        return y;
    };

    std::string segment;
    std::vector<std::string> tokens;
    for (int y : present) tokens.push_back(std::to_string(y));
    for (int i = uniform(rng, 0, 2); i > 0; --i) tokens.push_back(std::to_string(uniform(rng, 1, 9)) + std::to_string(absent_year()));
    for (int i = uniform(rng, 5, 30); i > 0; --i) tokens.push_back(pick(rng, filler));
    std::shuffle(tokens.begin(), tokens.end(), rng);
    for (const auto& t : tokens) segment += (segment.empty() ? "" : " ") + t + (uniform(rng, 0, 5) == 0 ? "," : "");
    segment += ".";

    bool absent_used = false;
    auto draw = [&] {
        if (uniform(rng, 0, 3) == 0) {
            absent_used = true;
            return absent_year();
        }
        return *std::next(present.begin(), uniform(rng, 0, static_cast<int>(present.size()) - 1));
    };
    int a = draw(), b = draw();
    if (a > b) std::swap(a, b);
    std::string time_raw = pick(rng, templates);
    if (auto p = time_raw.find("{a}"); p != std::string::npos) time_raw.replace(p, 3, std::to_string(a));
    if (auto p = time_raw.find("{b}"); p != std::string::npos) time_raw.replace(p, 3, std::to_string(b));
    // Only years that made it into the text count.
    const bool a_in = time_raw.find(std::to_string(a)) != std::string::npos;
    const bool b_in = time_raw.find(std::to_string(b)) != std::string::npos;
    const bool has_absent = (a_in && !present.count(a)) || (b_in && !present.count(b));
    (void)absent_used;

    TimeCheckCase c;
    c.query = query(key, "in " + std::to_string(uniform(rng, 1900, 2020)));
    c.item.subject = key == qaap::AnswerKey::subject ? "Some Candidate" : "marta  velasquez";
    c.item.relation = "Hold position.";
    c.item.object = key == qaap::AnswerKey::object ? "Some Office" : "PORT ELLIS";
    c.item.time_raw = time_raw;
    c.item.time = qaap::temporal::ground(qaap::temporal::parse_temporal(time_raw), {2023, 1, 1});
    c.segment = segment;
    c.has_absent_year = has_absent;
    return c;
}

inline qaap::temporal::TimeInterval year_span(int from, int to) { return {{from, 1, 1}, {to, 12, 31}}; }

/// Items over a small vocabulary so that corroboration both succeeds and
/// fails often.
inline std::vector<qaap::ExtractedItem> random_items(Rng& rng, qaap::KnowledgeSource source, int count, int& ordinal) {
    static const std::vector<std::string> subjects = {"A", "a ", "B", "C"};
    static const std::vector<std::string> objects = {"X", "Y", "y.", "Z"};
    std::vector<qaap::ExtractedItem> items;
    for (int i = 0; i < count; ++i) {
        qaap::ExtractedItem it;
        it.subject = pick(rng, subjects);
        it.relation = "r";
        it.object = pick(rng, objects);
        if (uniform(rng, 0, 4) > 0) {
            const int y = uniform(rng, 1990, 2010);
            it.time = year_span(y, y + uniform(rng, 0, 4));
        }
        it.source = source;
        it.document_id = source == qaap::KnowledgeSource::internal ? "background" : "wiki:x";
        it.ordinal = ordinal++;
        items.push_back(std::move(it));
    }
    return items;
}

/// Candidates with coarse scores (many ties) and varied provenance; ordinals
/// unique, as in a pipeline run.
inline std::vector<qaap::ScoredCandidate> random_candidates(Rng& rng, int count) {
    static const std::vector<std::string> docs = {"background", "context", "wiki:a", "wiki:b"};
    std::vector<int> ordinals(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) ordinals[static_cast<std::size_t>(i)] = i * 3 + uniform(rng, 0, 2);
    std::shuffle(ordinals.begin(), ordinals.end(), rng);
    std::vector<qaap::ScoredCandidate> out;
    for (int i = 0; i < count; ++i) {
        qaap::ScoredCandidate c;
        c.item.subject = "S";
        c.item.relation = "r";
        c.item.object = "O" + std::to_string(i);
        c.item.document_id = pick(rng, docs);
        c.item.source = c.item.document_id == "background" ? qaap::KnowledgeSource::internal : qaap::KnowledgeSource::external;
        c.item.segment_index = uniform(rng, 0, 2);
        c.item.ordinal = ordinals[static_cast<std::size_t>(i)];
        c.score = uniform(rng, 0, 4) / 4.0;
        out.push_back(std::move(c));
    }
    return out;
}

/// Index of the winner under the documented precedence, computed as a plain
/// lexicographic minimum over a key tuple.
inline std::size_t expected_winner(const std::vector<qaap::ScoredCandidate>& candidates) {
    auto key = [](const qaap::ScoredCandidate& c) {
        return std::make_tuple(-c.score, c.item.source == qaap::KnowledgeSource::internal ? 1 : 0, c.item.document_id,
                               c.item.segment_index, c.item.ordinal);
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (key(candidates[i]) < key(candidates[best])) best = i;
    return best;
}

struct ContainmentCase {
    qaap::temporal::TimeInterval query;
    qaap::temporal::TimeInterval inside;
    qaap::temporal::TimeInterval outside;
};

/// A query span of years, one interval inside it and one disjoint from it.
inline ContainmentCase containment_case(Rng& rng) {
    const int q0 = uniform(rng, 1900, 2000), q1 = q0 + uniform(rng, 0, 10);
    const int i0 = uniform(rng, q0, q1), i1 = uniform(rng, i0, q1);
    int o0, o1;
    if (uniform(rng, 0, 1) == 0) {
        o1 = q0 - uniform(rng, 1, 20);
        o0 = o1 - uniform(rng, 0, 5);
    } else {
        o0 = q1 + uniform(rng, 1, 20);
        o1 = o0 + uniform(rng, 0, 5);
    }
    return {year_span(q0, q1), year_span(i0, i1), year_span(o0, o1)};
}

}  // namespace gen
