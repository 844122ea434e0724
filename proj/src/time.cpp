#include "regscope/time.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace regscope {

std::int64_t days_from_civil(int y, int m, int d) {
    // Howard Hinnant's chrono-compatible civil date algorithm.
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

Timestamp make_timestamp(int year, int month, int day, int hour, int minute, int second) {
    return Timestamp{days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second};
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        value = value * 10 + (s[i] - '0');
    }
    out = value;
    return true;
}

const std::array<std::string_view, 12> kMonthAbbrev = {
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};

std::optional<Timestamp> parse_dd_mon_yyyy(std::string_view s) {
    // e.g. "28-Oct-2008", the .uk registry rendering
    int d = 0, y = 0;
    std::size_t p1 = s.find('-');
    if (p1 == std::string_view::npos) return std::nullopt;
    std::size_t p2 = s.find('-', p1 + 1);
    if (p2 == std::string_view::npos) return std::nullopt;
    if (!read_int(s, 0, p1, d)) return std::nullopt;
    std::string mon(s.substr(p1 + 1, p2 - p1 - 1));
    for (auto& c : mon) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    int m = 0;
    for (std::size_t i = 0; i < kMonthAbbrev.size(); ++i)
        if (mon == kMonthAbbrev[i]) m = static_cast<int>(i) + 1;
    if (m == 0) return std::nullopt;
    if (!read_int(s, p2 + 1, s.size() - p2 - 1 > 4 ? 0 : s.size() - p2 - 1, y)) return std::nullopt;
    if (y < 1000) return std::nullopt;
    return make_timestamp(y, m, d);
}

} // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    // Trim surrounding whitespace.
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;

    if (text.size() >= 6 && text[2] == '-' && !std::isdigit(static_cast<unsigned char>(text[3])))
        return parse_dd_mon_yyyy(text);

    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    std::size_t pos = 0;
    bool basic = text.size() >= 8 && text[4] != '-';
    if (basic) {
        // 20230814T021109Z
        if (!read_int(text, 0, 4, y) || !read_int(text, 4, 2, mo) || !read_int(text, 6, 2, d))
            return std::nullopt;
        pos = 8;
        if (pos < text.size() && (text[pos] == 'T' || text[pos] == 't')) {
            if (!read_int(text, pos + 1, 2, h) || !read_int(text, pos + 3, 2, mi) ||
                !read_int(text, pos + 5, 2, se))
                return std::nullopt;
            pos += 7;
        }
    } else {
        if (!read_int(text, 0, 4, y)) return std::nullopt;
        if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
        if (!read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d)) return std::nullopt;
        pos = 10;
        if (pos < text.size() && (text[pos] == 'T' || text[pos] == 't' || text[pos] == ' ')) {
            if (text.size() < pos + 9 || text[pos + 3] != ':' || text[pos + 6] != ':')
                return std::nullopt;
            if (!read_int(text, pos + 1, 2, h) || !read_int(text, pos + 4, 2, mi) ||
                !read_int(text, pos + 7, 2, se))
                return std::nullopt;
            pos += 9;
        }
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60) return std::nullopt;

    // Fractional seconds are truncated.
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    std::int64_t offset = 0;
    if (pos < text.size()) {
        char c = text[pos];
        if (c == 'Z' || c == 'z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            int oh = 0, om = 0;
            if (!read_int(text, pos + 1, 2, oh)) return std::nullopt;
            std::size_t mpos = pos + 3;
            if (mpos < text.size() && text[mpos] == ':') ++mpos;
            if (mpos + 2 <= text.size() && !read_int(text, mpos, 2, om)) return std::nullopt;
            offset = (oh * 3600 + om * 60) * (c == '+' ? 1 : -1);
            pos = text.size();
        }
    }
    if (pos != text.size()) {
        // Tolerate a trailing " UTC" marker.
        std::string_view rest = text.substr(pos);
        if (rest != " UTC" && rest != " utc") return std::nullopt;
    }

    Timestamp t = make_timestamp(y, mo, d, h, mi, se);
    t.secs -= offset;
    return t;
}

std::string format_timestamp(Timestamp t) {
    int y, mo, d;
    std::int64_t dz = t.secs / 86400, rem = t.secs % 86400;
    if (rem < 0) { rem += 86400; dz -= 1; }
    civil_from_days(dz, y, mo, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, mo, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::string format_timestamp_basic(Timestamp t) {
    int y, mo, d;
    std::int64_t dz = t.secs / 86400, rem = t.secs % 86400;
    if (rem < 0) { rem += 86400; dz -= 1; }
    civil_from_days(dz, y, mo, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02dZ", y, mo, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::string format_date(Timestamp t) {
    int y, mo, d;
    std::int64_t dz = t.secs / 86400;
    if (t.secs % 86400 < 0) dz -= 1;
    civil_from_days(dz, y, mo, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, mo, d);
    return buf;
}

} // namespace regscope
