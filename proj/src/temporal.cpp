#include "qaap/temporal.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <regex>
#include <stdexcept>

#include "qaap/text.hpp"

namespace qaap::temporal {

namespace chr = std::chrono;

// ---------------------------------------------------------------------------
// CivilDate / TimeInterval
// ---------------------------------------------------------------------------

bool CivilDate::valid(int year, unsigned month, unsigned day) {
    if (year < 1 || year > 9999) return false;
    return chr::year_month_day{chr::year{year}, chr::month{month}, chr::day{day}}.ok();
}

CivilDate::CivilDate(int year, unsigned month, unsigned day) : year_(year), month_(month), day_(day) {
    if (!valid(year, month, day)) {
        throw std::invalid_argument("invalid civil date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                                    std::to_string(day));
    }
}

std::int64_t CivilDate::serial() const {
    const chr::year_month_day ymd{chr::year{year_}, chr::month{month_}, chr::day{day_}};
    return chr::sys_days{ymd}.time_since_epoch().count();
}

CivilDate CivilDate::from_serial(std::int64_t serial) {
    const chr::year_month_day ymd{chr::sys_days{chr::days{serial}}};
    return CivilDate(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

std::optional<CivilDate> CivilDate::parse_iso(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [&](std::size_t pos, std::size_t len, auto& out) {
        for (std::size_t i = pos; i < pos + len; ++i)
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
        return std::from_chars(text.data() + pos, text.data() + pos + len, out).ec == std::errc{};
    };
    if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
    if (!valid(y, m, d)) return std::nullopt;
    return CivilDate(y, m, d);
}

std::string CivilDate::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year_, month_, day_);
    return buf;
}

unsigned days_in_month(int year, unsigned month) {
    const chr::year_month_day_last last{chr::year{year}, chr::month_day_last{chr::month{month}}};
    return static_cast<unsigned>(last.day());
}

CivilDate today_utc() {
    const auto days = chr::floor<chr::days>(chr::system_clock::now());
    return CivilDate::from_serial(days.time_since_epoch().count());
}

TimeInterval::TimeInterval(CivilDate start, CivilDate end) : start_(start), end_(end) {
    if (end_ < start_) throw std::invalid_argument("interval end precedes start: " + start_.iso() + " > " + end_.iso());
}

CivilDate PartialDate::earliest() const { return CivilDate(year, month.value_or(1), day.value_or(1)); }

CivilDate PartialDate::latest() const {
    if (!month) return CivilDate(year, 12, 31);
    if (!day) return CivilDate(year, *month, days_in_month(year, *month));
    return CivilDate(year, *month, *day);
}

std::string_view to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::exact: return "exact";
        case ConstraintKind::before: return "before";
        case ConstraintKind::after: return "after";
        case ConstraintKind::since: return "since";
        case ConstraintKind::until: return "until";
        case ConstraintKind::between: return "between";
        case ConstraintKind::as_of_reference: return "as_of_reference";
        case ConstraintKind::unspecified: return "unspecified";
    }
    return "unspecified";
}

// ---------------------------------------------------------------------------
// Expression grammar
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 12> kMonthNames = {"january", "february", "march",     "april",
                                                          "may",     "june",     "july",      "august",
                                                          "september", "october", "november", "december"};

std::optional<unsigned> month_from_name(std::string_view word) {
    if (!word.empty() && word.back() == '.') word.remove_suffix(1);
    if (word.size() < 3) return std::nullopt;
    for (unsigned i = 0; i < kMonthNames.size(); ++i) {
        const auto& name = kMonthNames[i];
        if (word == name) return i + 1;
        if (word.size() == 3 && name.substr(0, 3) == word) return i + 1;
    }
    if (word == "sept") return 9;
    return std::nullopt;
}

int to_int(const std::string& s) { return std::stoi(s); }

std::optional<PartialDate> make_date(int year, std::optional<unsigned> month, std::optional<unsigned> day) {
    if (year < 1 || year > 9999) return std::nullopt;
    if (month && (*month < 1 || *month > 12)) return std::nullopt;
    if (day && !CivilDate::valid(year, *month, *day)) return std::nullopt;
    return PartialDate{year, month, day};
}

std::optional<PartialDate> parse_date(const std::string& s) {
    static const std::regex kYear(R"(\d{3,4})");
    static const std::regex kIsoMonth(R"((\d{4})-(\d{1,2}))");
    static const std::regex kIsoDay(R"((\d{4})-(\d{1,2})-(\d{1,2}))");
    static const std::regex kMonthYear(R"(([a-z]+\.?),? (\d{3,4}))");
    static const std::regex kMonthDayYear(R"(([a-z]+\.?) (\d{1,2})(?:st|nd|rd|th)?,? (\d{3,4}))");
    static const std::regex kDayMonthYear(R"((\d{1,2})(?:st|nd|rd|th)? (?:of )?([a-z]+\.?),? (\d{3,4}))");

    std::smatch m;
    if (std::regex_match(s, kYear)) return make_date(to_int(s), std::nullopt, std::nullopt);
    if (std::regex_match(s, m, kIsoDay))
        return make_date(to_int(m[1]), static_cast<unsigned>(to_int(m[2])), static_cast<unsigned>(to_int(m[3])));
    if (std::regex_match(s, m, kIsoMonth)) return make_date(to_int(m[1]), static_cast<unsigned>(to_int(m[2])), std::nullopt);
    if (std::regex_match(s, m, kMonthYear)) {
        if (auto month = month_from_name(m[1].str())) return make_date(to_int(m[2]), month, std::nullopt);
        return std::nullopt;
    }
    if (std::regex_match(s, m, kMonthDayYear)) {
        if (auto month = month_from_name(m[1].str()))
            return make_date(to_int(m[3]), month, static_cast<unsigned>(to_int(m[2])));
        return std::nullopt;
    }
    if (std::regex_match(s, m, kDayMonthYear)) {
        if (auto month = month_from_name(m[2].str()))
            return make_date(to_int(m[3]), month, static_cast<unsigned>(to_int(m[1])));
        return std::nullopt;
    }
    return std::nullopt;
}

bool is_present_word(const std::string& s) {
    return s == "present" || s == "now" || s == "current" || s == "today" || s == "date" || s == "the present" ||
           s == "present day" || s == "present-day";
}

bool is_reference_phrase(const std::string& s) {
    return s == "current" || s == "currently" || s == "now" || s == "present" || s == "today" || s == "nowadays" ||
           s == "at present" || s == "the present" || s == "as of now" || s == "as of today" || s == "right now" ||
           s == "present day" || s == "present-day";
}

// Lowercase, map unicode dashes to '-', collapse whitespace, drop trailing
// sentence punctuation.
std::string canonical(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        // U+2013 en dash, U+2014 em dash (E2 80 93 / E2 80 94)
        if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
            static_cast<unsigned char>(text[i + 1]) == 0x80 &&
            (static_cast<unsigned char>(text[i + 2]) == 0x93 || static_cast<unsigned char>(text[i + 2]) == 0x94)) {
            out += " - ";
            i += 2;
            continue;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
    }
    out = text::collapse_whitespace(out);
    while (!out.empty() && (out.back() == '.' || out.back() == ',' || out.back() == ';' || out.back() == '?'))
        out.pop_back();
    // "1994-1998" written without spaces is a range, not an ISO month.
    static const std::regex kTightRange(R"((\d{3,4})-(\d{3,4}))");
    std::smatch m;
    if (std::regex_match(out, m, kTightRange)) out = m[1].str() + " - " + m[2].str();
    return text::collapse_whitespace(out);
}

bool starts_with(const std::string& s, std::string_view prefix, std::string& rest) {
    if (s.size() <= prefix.size() || s.compare(0, prefix.size(), prefix) != 0) return false;
    rest = s.substr(prefix.size());
    return true;
}

bool split_once(const std::string& s, std::string_view sep, std::string& left, std::string& right) {
    const auto pos = s.find(sep);
    if (pos == std::string::npos) return false;
    left = s.substr(0, pos);
    right = s.substr(pos + sep.size());
    return !left.empty() && !right.empty();
}

bool ordered(const PartialDate& lo, const PartialDate& hi) { return lo.earliest() <= hi.latest(); }

// Parses "X <sep> Y" where Y may be a present-word. Fills `out` on success.
bool parse_range(const std::string& s, TemporalConstraint& out) {
    static constexpr std::array<std::string_view, 6> kSeps = {" to ", " - ", " until ", " till ", " through ", " and "};
    for (auto sep : kSeps) {
        std::string left, right;
        if (!split_once(s, sep, left, right)) continue;
        auto lo = parse_date(left);
        if (!lo) continue;
        if (is_present_word(right)) {
            out.kind = ConstraintKind::since;
            out.lower = lo;
            return true;
        }
        auto hi = parse_date(right);
        if (!hi) continue;
        if (!ordered(*lo, *hi)) return false;
        out.kind = ConstraintKind::between;
        out.lower = lo;
        out.upper = hi;
        return true;
    }
    return false;
}

bool parse_point_or_range(const std::string& s, TemporalConstraint& out) {
    if (auto d = parse_date(s)) {
        out.kind = ConstraintKind::exact;
        out.lower = d;
        return true;
    }
    return parse_range(s, out);
}

bool parse_single(const std::string& s, ConstraintKind kind, TemporalConstraint& out) {
    if (auto d = parse_date(s)) {
        out.kind = kind;
        out.lower = d;
        return true;
    }
    return false;
}

bool parse_canonical(const std::string& s, TemporalConstraint& out) {
    if (s.empty()) return false;
    if (is_reference_phrase(s)) {
        out.kind = ConstraintKind::as_of_reference;
        return true;
    }
    std::string rest;
    if (starts_with(s, "between ", rest)) {
        std::string left, right;
        if (!split_once(rest, " and ", left, right)) return false;
        auto lo = parse_date(left);
        auto hi = parse_date(right);
        if (!lo || !hi || !ordered(*lo, *hi)) return false;
        out.kind = ConstraintKind::between;
        out.lower = lo;
        out.upper = hi;
        return true;
    }
    if (starts_with(s, "from ", rest)) {
        for (std::string_view tail : {" onwards", " onward", " on"}) {
            if (rest.size() > tail.size() && rest.compare(rest.size() - tail.size(), tail.size(), tail) == 0) {
                return parse_single(rest.substr(0, rest.size() - tail.size()), ConstraintKind::since, out);
            }
        }
        if (parse_range(rest, out)) return true;
        return parse_single(rest, ConstraintKind::since, out);
    }
    if (starts_with(s, "before ", rest) || starts_with(s, "prior to ", rest))
        return parse_single(rest, ConstraintKind::before, out);
    if (starts_with(s, "until ", rest) || starts_with(s, "till ", rest) || starts_with(s, "up to ", rest) ||
        starts_with(s, "up until ", rest) || starts_with(s, "through ", rest))
        return parse_single(rest, ConstraintKind::until, out);
    if (starts_with(s, "after ", rest)) return parse_single(rest, ConstraintKind::after, out);
    if (starts_with(s, "since ", rest)) return parse_single(rest, ConstraintKind::since, out);
    if (starts_with(s, "as of ", rest)) {
        if (is_present_word(rest)) {
            out.kind = ConstraintKind::as_of_reference;
            return true;
        }
        return parse_single(rest, ConstraintKind::as_of_reference, out);
    }
    for (std::string_view prefix : {"in ", "during ", "on ", "at ", "throughout "}) {
        if (starts_with(s, prefix, rest)) return parse_point_or_range(rest, out);
    }
    return parse_point_or_range(s, out);
}

}  // namespace

TemporalConstraint parse_temporal(std::string_view text) {
    TemporalConstraint parsed;
    parsed.raw_text = std::string(text);
    TemporalConstraint attempt;
    if (parse_canonical(canonical(text), attempt)) {
        parsed.kind = attempt.kind;
        parsed.lower = attempt.lower;
        parsed.upper = attempt.upper;
    }
    return parsed;
}

// ---------------------------------------------------------------------------
// Grounding and interval algebra
// ---------------------------------------------------------------------------

std::optional<TimeInterval> ground(const TemporalConstraint& c, const CivilDate& reference_date, const Horizon& horizon) {
    auto make = [](CivilDate start, CivilDate end) -> std::optional<TimeInterval> {
        if (end < start) return std::nullopt;
        return TimeInterval(start, end);
    };
    switch (c.kind) {
        case ConstraintKind::unspecified: return std::nullopt;
        case ConstraintKind::exact: return make(c.lower->earliest(), c.lower->latest());
        case ConstraintKind::between: return make(c.lower->earliest(), c.upper->latest());
        case ConstraintKind::before: {
            const auto first = c.lower->earliest();
            if (first.serial() <= CivilDate(1, 1, 1).serial()) return std::nullopt;
            return make(horizon.min, CivilDate::from_serial(first.serial() - 1));
        }
        case ConstraintKind::until: return make(horizon.min, c.lower->latest());
        case ConstraintKind::after:
        case ConstraintKind::since: return make(c.lower->earliest(), reference_date);
        case ConstraintKind::as_of_reference:
            if (c.lower) return make(c.lower->earliest(), c.lower->latest());
            return make(reference_date, reference_date);
    }
    return std::nullopt;
}

std::optional<TimeInterval> ground(const TemporalConstraint& constraint, const CivilDate& reference_date) {
    return ground(constraint, reference_date, Horizon{kDefaultHorizonFloor, reference_date});
}

std::optional<TimeInterval> intersection(const TimeInterval& a, const TimeInterval& b) {
    const auto start = std::max(a.start(), b.start());
    const auto end = std::min(a.end(), b.end());
    if (end < start) return std::nullopt;
    return TimeInterval(start, end);
}

bool intersects(const TimeInterval& a, const TimeInterval& b) {
    return !(a.end() < b.start()) && !(b.end() < a.start());
}

bool contains(const TimeInterval& a, const TimeInterval& b) { return a.start() <= b.start() && b.end() <= a.end(); }

IouRatio iou_ratio(const TimeInterval& a, const TimeInterval& b) {
    const auto lo = std::max(a.start().serial(), b.start().serial());
    const auto hi = std::min(a.end().serial(), b.end().serial());
    const std::int64_t inter = hi >= lo ? hi - lo + 1 : 0;
    return IouRatio{inter, a.length_days() + b.length_days() - inter};
}

std::string format_interval(const TimeInterval& interval) {
    return "[" + interval.start().iso() + ", " + interval.end().iso() + "]";
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const CivilDate& d) { j = d.iso(); }

void from_json(const nlohmann::json& j, CivilDate& d) {
    auto parsed = CivilDate::parse_iso(j.get<std::string>());
    if (!parsed) throw std::invalid_argument("not an ISO date: " + j.dump());
    d = *parsed;
}

nlohmann::json interval_to_json(const TimeInterval& interval) {
    return {{"start", interval.start().iso()}, {"end", interval.end().iso()}};
}

TimeInterval interval_from_json(const nlohmann::json& j) {
    return TimeInterval(j.at("start").get<CivilDate>(), j.at("end").get<CivilDate>());
}

nlohmann::json optional_interval_to_json(const std::optional<TimeInterval>& interval) {
    if (!interval) return nullptr;
    return interval_to_json(*interval);
}

std::optional<TimeInterval> optional_interval_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return interval_from_json(j);
}

}  // namespace qaap::temporal
