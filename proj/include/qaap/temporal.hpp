#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

namespace qaap::temporal {

/// Proleptic Gregorian calendar date, years 1..9999.
class CivilDate {
public:
    CivilDate() = default;
    CivilDate(int year, unsigned month, unsigned day);

    static bool valid(int year, unsigned month, unsigned day);
    static CivilDate from_serial(std::int64_t serial);
    /// Parses strict ISO `YYYY-MM-DD`.
    static std::optional<CivilDate> parse_iso(std::string_view text);

    int year() const { return year_; }
    unsigned month() const { return month_; }
    unsigned day() const { return day_; }

    /// Days since 1970-01-01.
    std::int64_t serial() const;
    std::string iso() const;

    friend auto operator<=>(const CivilDate&, const CivilDate&) = default;

private:
    int year_ = 1970;
    unsigned month_ = 1;
    unsigned day_ = 1;
};

unsigned days_in_month(int year, unsigned month);

/// Current UTC calendar date.
CivilDate today_utc();

/// Closed interval of whole days. A single date is a one-day interval.
class TimeInterval {
public:
    TimeInterval(CivilDate start, CivilDate end);

    const CivilDate& start() const { return start_; }
    const CivilDate& end() const { return end_; }
    std::int64_t length_days() const { return end_.serial() - start_.serial() + 1; }

    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;

private:
    CivilDate start_;
    CivilDate end_;
};

/// A date known to year, month or day precision.
struct PartialDate {
    int year = 0;
    std::optional<unsigned> month;
    std::optional<unsigned> day;

    CivilDate earliest() const;
    CivilDate latest() const;
    friend bool operator==(const PartialDate&, const PartialDate&) = default;
};

enum class ConstraintKind { exact, before, after, since, until, between, as_of_reference, unspecified };

std::string_view to_string(ConstraintKind kind);

/// Ungrounded time expression. `lower` holds the single bound for one-bound
/// kinds; `upper` is used only by `between`.
struct TemporalConstraint {
    ConstraintKind kind = ConstraintKind::unspecified;
    std::optional<PartialDate> lower;
    std::optional<PartialDate> upper;
    std::string raw_text;

    friend bool operator==(const TemporalConstraint&, const TemporalConstraint&) = default;
};

/// Recognizes bare years, month-year, full dates (written or ISO), the
/// prefixes in/during/on, before/prior to, until/till/through, after, since,
/// from X (to Y), between X and Y, X - Y ranges, as of X, and
/// current/now/present. Anything else yields `unspecified`.
TemporalConstraint parse_temporal(std::string_view text);

struct Horizon {
    CivilDate min;
    CivilDate max;
};

inline const CivilDate kDefaultHorizonFloor{1000, 1, 1};

/// Turns a constraint into a finite interval. Open ends are clamped to
/// horizon.min (lower side) or reference_date (upper side). Returns nullopt
/// for `unspecified` and for constraints whose clamped interval is empty.
std::optional<TimeInterval> ground(const TemporalConstraint& constraint, const CivilDate& reference_date,
                                   const Horizon& horizon);
std::optional<TimeInterval> ground(const TemporalConstraint& constraint, const CivilDate& reference_date);

std::optional<TimeInterval> intersection(const TimeInterval& a, const TimeInterval& b);
bool intersects(const TimeInterval& a, const TimeInterval& b);
/// a.start <= b.start && b.end <= a.end
bool contains(const TimeInterval& a, const TimeInterval& b);

struct IouRatio {
    std::int64_t intersection_days;
    std::int64_t union_days;
    double value() const { return static_cast<double>(intersection_days) / static_cast<double>(union_days); }
};

IouRatio iou_ratio(const TimeInterval& a, const TimeInterval& b);
inline double iou(const TimeInterval& a, const TimeInterval& b) { return iou_ratio(a, b).value(); }

std::string format_interval(const TimeInterval& interval);

void to_json(nlohmann::json& j, const CivilDate& d);
void from_json(const nlohmann::json& j, CivilDate& d);
nlohmann::json interval_to_json(const TimeInterval& interval);
TimeInterval interval_from_json(const nlohmann::json& j);
nlohmann::json optional_interval_to_json(const std::optional<TimeInterval>& interval);
std::optional<TimeInterval> optional_interval_from_json(const nlohmann::json& j);

}  // namespace qaap::temporal
