#pragma once

#include "moodcast/errors.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace moodcast::csv {

/// One parsed record and the 1-based source line it started on.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, double-quote escaping, quoted fields may
/// span lines. CRLF and LF endings both accepted. Blank lines are skipped.
[[nodiscard]] inline std::vector<Row> read_all(std::istream& in) {
    if (!in) throw DataError("unreadable input stream");
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) throw DataError("read failure on input stream");

    std::vector<Row> rows;
    Row row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    row.line = 1;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.fields.size() == 1 && row.fields[0].empty();
        if (!blank) rows.push_back(std::move(row));
        row = Row{};
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started) {
                    quoted = true;
                    field_started = true;
                } else {
                    field.push_back(c);
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                ++line;
                row.line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (!field.empty() || !row.fields.empty() || field_started) end_row();
    return rows;
}

[[nodiscard]] inline std::string quote(std::string_view s) {
    const bool needs = s.find_first_of(",\"\r\n") != std::string_view::npos ||
                       (!s.empty() && (s.front() == ' ' || s.back() == ' '));
    if (!needs) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << quote(fields[i]);
    }
    out << '\n';
}

/// Shortest decimal text that round-trips; empty for NaN.
[[nodiscard]] inline std::string format_number(double v) {
    if (std::isnan(v)) return {};
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

[[nodiscard]] inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

[[nodiscard]] inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

}  // namespace moodcast::csv

namespace moodcast {

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

}  // namespace detail

/// Strict "YYYY-MM-DD".
[[nodiscard]] inline std::optional<std::chrono::sys_days> parse_date(std::string_view s) {
    s = csv::trim(s);
    int y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!detail::read_int(s, 0, 4, y) || !detail::read_int(s, 5, 2, m) ||
        !detail::read_int(s, 8, 2, d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y},
                                          std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days{ymd};
}

/// ISO-8601 instant: date, 'T' or space, HH:MM[:SS[.fff]], optional 'Z' or
/// +HH:MM / -HH:MM offset. A bare date means midnight UTC. Fractional seconds
/// are truncated.
[[nodiscard]] inline std::optional<std::chrono::sys_seconds> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    s = csv::trim(s);
    if (s.size() < 10) return std::nullopt;
    const auto day = parse_date(s.substr(0, 10));
    if (!day) return std::nullopt;
    if (s.size() == 10) return sys_seconds{*day};
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;

    int hh = 0, mm = 0, ss = 0;
    std::size_t pos = 11;
    if (!detail::read_int(s, pos, 2, hh) || pos + 2 >= s.size() || s[pos + 2] != ':' ||
        !detail::read_int(s, pos + 3, 2, mm)) {
        return std::nullopt;
    }
    pos += 5;
    if (pos < s.size() && s[pos] == ':') {
        if (!detail::read_int(s, pos + 1, 2, ss)) return std::nullopt;
        pos += 3;
        if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
            ++pos;
            const std::size_t digits = pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
            if (pos == digits) return std::nullopt;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;

    seconds offset{0};
    if (pos < s.size()) {
        const char z = s[pos];
        if (z == 'Z' || z == 'z') {
            ++pos;
        } else if (z == '+' || z == '-') {
            int oh = 0, om = 0;
            if (!detail::read_int(s, pos + 1, 2, oh)) return std::nullopt;
            std::size_t next = pos + 3;
            if (next < s.size() && s[next] == ':') ++next;
            if (!detail::read_int(s, next, 2, om)) return std::nullopt;
            offset = hours{oh} + minutes{om};
            if (z == '-') offset = -offset;
            pos = next + 2;
        } else {
            return std::nullopt;
        }
    }
    if (pos != s.size()) return std::nullopt;
    return sys_seconds{*day} + hours{hh} + minutes{mm} + seconds{ss} - offset;
}

/// "YYYY-MM-DDTHH:MM:SSZ"
[[nodiscard]] inline std::string format_timestamp(std::chrono::sys_seconds t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const hh_mm_ss<seconds> tod{t - day};
    const year_month_day ymd{day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

}  // namespace moodcast
