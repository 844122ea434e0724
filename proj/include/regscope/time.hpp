#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace regscope {

/// UTC instant with second precision. All arithmetic stays in UTC; no time
/// zone ever enters comparisons.
struct Timestamp {
    std::int64_t secs = 0; // seconds since 1970-01-01T00:00:00Z

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// Signed length of time in whole seconds.
struct Duration {
    std::int64_t secs = 0;

    friend auto operator<=>(const Duration&, const Duration&) = default;
};

constexpr Duration minutes(std::int64_t m) { return Duration{m * 60}; }
constexpr Duration hours(std::int64_t h) { return Duration{h * 3600}; }
constexpr Duration days(std::int64_t d) { return Duration{d * 86400}; }

constexpr Duration operator-(Timestamp a, Timestamp b) { return Duration{a.secs - b.secs}; }
constexpr Timestamp operator+(Timestamp t, Duration d) { return Timestamp{t.secs + d.secs}; }
constexpr Timestamp operator-(Timestamp t, Duration d) { return Timestamp{t.secs - d.secs}; }
constexpr Duration operator+(Duration a, Duration b) { return Duration{a.secs + b.secs}; }
constexpr Duration operator-(Duration a, Duration b) { return Duration{a.secs - b.secs}; }
constexpr Duration operator*(Duration d, std::int64_t k) { return Duration{d.secs * k}; }

/// Days since the epoch for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t z, int& year, int& month, int& day);

Timestamp make_timestamp(int year, int month, int day, int hour = 0, int minute = 0, int second = 0);

/// Parses common registration-data timestamp renderings:
///   2023-08-14T02:11:09Z, 2023-08-14 02:11:09, 2023-08-14T02:11:09.123Z,
///   2023-08-14T02:11:09+00:00, 2023-08-14, 20230814T021109Z, 28-Oct-2008.
/// Offsets other than zero are converted to UTC.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// 2023-08-14T02:11:09Z
std::string format_timestamp(Timestamp t);
/// 20230814T021109Z (filesystem-safe)
std::string format_timestamp_basic(Timestamp t);
/// 2023-08-14
std::string format_date(Timestamp t);

} // namespace regscope
