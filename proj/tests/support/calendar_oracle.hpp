#pragma once

// Calendar walk written independently of qaap::temporal, used as the
// reference for day counts and IoU.

#include <cstdint>
#include <vector>

#include "qaap/temporal.hpp"

namespace oracle {

struct Ymd {
    int y;
    unsigned m;
    unsigned d;
};

inline bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline unsigned month_length(int y, unsigned m) {
    static const unsigned kLengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29u : kLengths[m - 1];
}

inline Ymd next_day(Ymd v) {
    if (v.d < month_length(v.y, v.m)) return {v.y, v.m, v.d + 1};
    if (v.m < 12) return {v.y, v.m + 1, 1};
    return {v.y + 1, 1, 1};
}

/// `count` consecutive days starting at `first`.
inline std::vector<Ymd> day_window(Ymd first, std::size_t count) {
    std::vector<Ymd> days;
    days.reserve(count);
    for (Ymd v = first; days.size() < count; v = next_day(v)) days.push_back(v);
    return days;
}

/// Number of days from a to b inclusive, by walking.
inline std::int64_t walk_length(Ymd a, Ymd b) {
    std::int64_t n = 1;
    while (!(a.y == b.y && a.m == b.m && a.d == b.d)) {
        a = next_day(a);
        ++n;
    }
    return n;
}

inline qaap::temporal::CivilDate civil(Ymd v) { return {v.y, v.m, v.d}; }

struct DaySetRatio {
    std::int64_t intersection;
    std::int64_t union_size;
};

/// Marks the days of two index ranges [a0, a1] and [b0, b1] inside a window
/// and counts the shared and covered ones.
inline DaySetRatio enumerate_overlap(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1,
                                     std::vector<unsigned char>& marks) {
    std::fill(marks.begin(), marks.end(), 0);
    for (std::size_t i = a0; i <= a1; ++i) marks[i] |= 1;
    for (std::size_t i = b0; i <= b1; ++i) marks[i] |= 2;
    DaySetRatio r{0, 0};
    for (const auto m : marks) {
        if (m == 3) ++r.intersection;
        if (m != 0) ++r.union_size;
    }
    return r;
}

}  // namespace oracle
