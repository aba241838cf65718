#pragma once

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/series.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace moodcast {

enum class Sentiment { positive, negative };

[[nodiscard]] inline std::string to_string(Sentiment s) {
    return s == Sentiment::positive ? "positive" : "negative";
}

[[nodiscard]] inline std::optional<Sentiment> parse_sentiment(std::string_view s) {
    const auto l = csv::lower(csv::trim(s));
    if (l == "positive") return Sentiment::positive;
    if (l == "negative") return Sentiment::negative;
    return std::nullopt;
}

struct TweetRecord {
    std::string id;
    std::chrono::sys_seconds timestamp;
    std::string text;
    std::optional<Sentiment> label;

    friend bool operator==(const TweetRecord&, const TweetRecord&) = default;
};

struct TweetCorpus {
    std::vector<TweetRecord> records;
    std::size_t skipped = 0;     ///< malformed rows
    std::size_t duplicates = 0;  ///< repeated ids, first occurrence kept
};

enum class TweetFormat { csv, json_lines };

namespace detail {

inline bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t n = 0;
        if (c < 0x80) n = 0;
        else if ((c >> 5) == 0x6) n = 1;
        else if ((c >> 4) == 0xE) n = 2;
        else if ((c >> 3) == 0x1E) n = 3;
        else return false;
        if (i + n >= s.size()) return false;
        for (std::size_t k = 1; k <= n; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
        }
        i += n + 1;
    }
    return true;
}

inline bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
}

// Builds a record from raw fields; nullopt when any record invariant fails.
inline std::optional<TweetRecord> make_tweet(std::string_view id, std::string_view ts,
                                             std::string_view text,
                                             std::optional<std::string_view> label) {
    if (csv::trim(id).empty() || blank(text)) return std::nullopt;
    if (!valid_utf8(id) || !valid_utf8(text)) return std::nullopt;
    const auto when = parse_timestamp(ts);
    if (!when) return std::nullopt;
    TweetRecord r{std::string(csv::trim(id)), *when, std::string(text), std::nullopt};
    if (label && !csv::trim(*label).empty()) {
        r.label = parse_sentiment(*label);
        if (!r.label) return std::nullopt;
    }
    return r;
}

inline void finish_corpus(TweetCorpus& corpus, std::size_t rows) {
    if (rows > 0 && corpus.skipped * 2 > rows) {
        throw ParseError("corpus rejected: " + std::to_string(corpus.skipped) + " of " +
                         std::to_string(rows) + " rows malformed");
    }
}

}  // namespace detail

/// Reads tweets from CSV (`id,timestamp,text[,label]` header) or JSON lines.
/// Malformed rows are skipped and counted; more than half malformed rejects
/// the corpus. Duplicate ids keep the first occurrence.
[[nodiscard]] inline TweetCorpus parse_tweets(std::istream& in, TweetFormat format) {
    TweetCorpus corpus;
    std::unordered_set<std::string> seen;
    std::size_t rows = 0;

    auto accept = [&](std::optional<TweetRecord> rec) {
        ++rows;
        if (!rec) {
            ++corpus.skipped;
            return;
        }
        if (!seen.insert(rec->id).second) {
            ++corpus.duplicates;
            return;
        }
        corpus.records.push_back(std::move(*rec));
    };

    if (format == TweetFormat::csv) {
        const auto table = csv::read_all(in);
        if (table.empty()) throw ParseError("tweet CSV has no header");
        const auto& header = table.front().fields;
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col[csv::lower(csv::trim(header[i]))] = i;
        for (const char* need : {"id", "timestamp", "text"}) {
            if (!col.count(need)) throw ParseError(std::string("tweet CSV missing column '") + need + "'");
        }
        const auto label_col = col.count("label") ? std::optional<std::size_t>(col["label"]) : std::nullopt;
        for (std::size_t r = 1; r < table.size(); ++r) {
            const auto& f = table[r].fields;
            if (f.size() != header.size()) {
                accept(std::nullopt);
                continue;
            }
            std::optional<std::string_view> label;
            if (label_col) label = f[*label_col];
            accept(detail::make_tweet(f[col["id"]], f[col["timestamp"]], f[col["text"]], label));
        }
    } else {
        if (!in) throw DataError("unreadable input stream");
        std::string line;
        while (std::getline(in, line)) {
            if (detail::blank(line)) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("timestamp") ||
                !j.contains("text") || !j["id"].is_string() || !j["timestamp"].is_string() ||
                !j["text"].is_string()) {
                accept(std::nullopt);
                continue;
            }
            std::optional<std::string> label;
            if (j.contains("label") && !j["label"].is_null()) {
                if (!j["label"].is_string()) {
                    accept(std::nullopt);
                    continue;
                }
                label = j["label"].get<std::string>();
            }
            const auto id = j["id"].get<std::string>();
            const auto ts = j["timestamp"].get<std::string>();
            const auto text = j["text"].get<std::string>();
            std::optional<std::string_view> lv;
            if (label) lv = *label;
            accept(detail::make_tweet(id, ts, text, lv));
        }
        if (in.bad()) throw DataError("read failure on tweet stream");
    }
    detail::finish_corpus(corpus, rows);
    return corpus;
}

inline void write_tweets(std::ostream& out, const std::vector<TweetRecord>& tweets, TweetFormat format) {
    const bool with_label = std::any_of(tweets.begin(), tweets.end(),
                                        [](const TweetRecord& t) { return t.label.has_value(); });
    if (format == TweetFormat::csv) {
        csv::write_row(out, with_label ? std::vector<std::string>{"id", "timestamp", "text", "label"}
                                       : std::vector<std::string>{"id", "timestamp", "text"});
        for (const auto& t : tweets) {
            std::vector<std::string> f{t.id, format_timestamp(t.timestamp), t.text};
            if (with_label) f.push_back(t.label ? to_string(*t.label) : std::string{});
            csv::write_row(out, f);
        }
        return;
    }
    for (const auto& t : tweets) {
        nlohmann::json j{{"id", t.id}, {"timestamp", format_timestamp(t.timestamp)}, {"text", t.text}};
        if (t.label) j["label"] = to_string(*t.label);
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Weekly windows

/// Optional inclusive week range; tweets outside it are dropped.
struct WeekCalendar {
    std::optional<WeekStamp> first;
    std::optional<WeekStamp> last;
};

struct WindowBuckets {
    std::vector<TweetRecord> weekday;  ///< Monday 00:00 .. Friday 21:00 (inclusive)
    std::vector<TweetRecord> weekend;  ///< after previous Friday 21:00 .. Sunday 24:00
};

struct WeeklyWindows {
    std::map<WeekStamp, WindowBuckets> weeks;  ///< gapless between first and last key
    std::size_t dropped = 0;
};

/// Week and bucket for one instant. Boundary Friday 21:00:00 UTC closes the week.
struct WindowSlot {
    WeekStamp week;
    bool weekend = false;
};

[[nodiscard]] inline WindowSlot window_slot(std::chrono::sys_seconds t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    auto friday = closing_friday(day);
    if (friday == day && t - sys_seconds{day} > hours{21}) friday += days{7};
    const auto monday = sys_seconds{friday - days{4}};
    return {WeekStamp(friday), t < monday};
}

[[nodiscard]] inline WeeklyWindows window_tweets(const std::vector<TweetRecord>& tweets,
                                                 const WeekCalendar& calendar = {}) {
    WeeklyWindows out;
    std::optional<WeekStamp> lo = calendar.first;
    std::optional<WeekStamp> hi = calendar.last;
    if (!lo || !hi) {
        std::optional<WeekStamp> mn, mx;
        for (const auto& t : tweets) {
            const auto w = window_slot(t.timestamp).week;
            if (!mn || w < *mn) mn = w;
            if (!mx || w > *mx) mx = w;
        }
        if (!lo) lo = mn;
        if (!hi) hi = mx;
    }
    if (!lo || !hi || *hi < *lo) {
        out.dropped = tweets.size();
        return out;
    }
    for (auto w = *lo; w <= *hi; w = w + 1) out.weeks[w];
    for (const auto& t : tweets) {
        const auto slot = window_slot(t.timestamp);
        auto it = out.weeks.find(slot.week);
        if (it == out.weeks.end()) {
            ++out.dropped;
            continue;
        }
        (slot.weekend ? it->second.weekend : it->second.weekday).push_back(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Market data

struct OhlcvWeekly {
    WeekStamp week;
    double open = 0, high = 0, low = 0, close = 0;
    double volume = 0;

    friend bool operator==(const OhlcvWeekly&, const OhlcvWeekly&) = default;
};

namespace detail {

inline std::map<std::string, std::size_t> header_index(const csv::Row& header) {
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
        col[csv::lower(csv::trim(header.fields[i]))] = i;
    }
    return col;
}

template <class Get>
inline void require_gapless(std::size_t n, Get week_of, const std::string& what) {
    for (std::size_t i = 1; i < n; ++i) {
        const auto gap = week_of(i).weeks_since(week_of(i - 1));
        if (gap == 0) throw DataError(what + ": duplicate week " + week_of(i).to_string());
        if (gap != 1) {
            throw DataError(what + ": missing week(s) between " + week_of(i - 1).to_string() +
                            " and " + week_of(i).to_string());
        }
    }
}

}  // namespace detail

/// Weekly OHLCV bars, header `date,open,high,low,close,volume` in any column
/// order. Dates map to the Friday closing their week. Rows violating
/// low <= min(open, close) <= max(open, close) <= high are rejected together,
/// citing their line numbers.
[[nodiscard]] inline std::vector<OhlcvWeekly> parse_ohlcv(std::istream& in) {
    const auto table = csv::read_all(in);
    if (table.empty()) throw ParseError("OHLCV file has no header");
    auto col = detail::header_index(table.front());
    for (const char* need : {"date", "open", "high", "low", "close", "volume"}) {
        if (!col.count(need)) throw ParseError(std::string("OHLCV file missing column '") + need + "'");
    }

    std::vector<OhlcvWeekly> bars;
    std::string bad;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        const auto line = std::to_string(row.line);
        if (row.fields.size() != table.front().fields.size()) {
            throw ParseError("OHLCV line " + line + ": expected " +
                             std::to_string(table.front().fields.size()) + " fields");
        }
        const auto day = parse_date(row.fields[col["date"]]);
        if (!day) throw ParseError("OHLCV line " + line + ": bad date '" + row.fields[col["date"]] + "'");
        double v[5];
        const char* names[5] = {"open", "high", "low", "close", "volume"};
        for (int k = 0; k < 5; ++k) {
            const auto x = csv::parse_number(row.fields[col[names[k]]]);
            if (!x) throw ParseError("OHLCV line " + line + ": bad " + names[k] + " value");
            v[k] = *x;
        }
        OhlcvWeekly bar{WeekStamp::containing(*day), v[0], v[1], v[2], v[3], v[4]};
        const bool ok = bar.open > 0 && bar.high > 0 && bar.low > 0 && bar.close > 0 &&
                        bar.volume >= 0 && bar.low <= std::min(bar.open, bar.close) &&
                        std::max(bar.open, bar.close) <= bar.high;
        if (!ok) {
            bad += (bad.empty() ? "" : ", ") + line;
            continue;
        }
        bars.push_back(bar);
    }
    if (!bad.empty()) throw DataError("OHLCV price invariant violated on line(s) " + bad);
    if (bars.empty()) throw DataError("OHLCV file has no rows");
    std::stable_sort(bars.begin(), bars.end(),
                     [](const OhlcvWeekly& a, const OhlcvWeekly& b) { return a.week < b.week; });
    detail::require_gapless(bars.size(), [&](std::size_t i) { return bars[i].week; }, "OHLCV");
    return bars;
}

inline void write_ohlcv(std::ostream& out, const std::vector<OhlcvWeekly>& bars) {
    csv::write_row(out, {"date", "open", "high", "low", "close", "volume"});
    for (const auto& b : bars) {
        csv::write_row(out, {b.week.to_string(), csv::format_number(b.open), csv::format_number(b.high),
                             csv::format_number(b.low), csv::format_number(b.close),
                             csv::format_number(b.volume)});
    }
}

/// Two-column `date,value` file (VIX, alternative price series).
[[nodiscard]] inline WeeklySeries parse_weekly_series(std::istream& in, const std::string& name) {
    const auto table = csv::read_all(in);
    if (table.size() < 2) throw ParseError("series file for '" + name + "' has no data rows");
    if (table.front().fields.size() != 2) {
        throw ParseError("series file for '" + name + "' must have exactly two columns");
    }
    std::vector<std::pair<WeekStamp, double>> rows;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        const auto line = std::to_string(row.line);
        if (row.fields.size() != 2) throw ParseError(name + " line " + line + ": expected 2 fields");
        const auto day = parse_date(row.fields[0]);
        if (!day) throw ParseError(name + " line " + line + ": bad date '" + row.fields[0] + "'");
        double v = kMissing;
        if (!csv::trim(row.fields[1]).empty()) {
            const auto x = csv::parse_number(row.fields[1]);
            if (!x) throw ParseError(name + " line " + line + ": bad value '" + row.fields[1] + "'");
            v = *x;
        }
        rows.emplace_back(WeekStamp::containing(*day), v);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    detail::require_gapless(rows.size(), [&](std::size_t i) { return rows[i].first; }, name);
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& r : rows) values.push_back(r.second);
    return WeeklySeries(name, rows.front().first, std::move(values));
}

inline void write_weekly_series(std::ostream& out, const WeeklySeries& s) {
    csv::write_row(out, {"date", s.name()});
    for (std::size_t i = 0; i < s.size(); ++i) {
        csv::write_row(out, {s.week(i).to_string(), csv::format_number(s[i])});
    }
}

// ---------------------------------------------------------------------------
// Search volume

/// Week x term matrix of search volumes, row-major.
struct SviMatrix {
    std::vector<WeekStamp> weeks;
    std::vector<std::string> terms;
    std::vector<double> volumes;

    [[nodiscard]] std::size_t rows() const noexcept { return weeks.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return terms.size(); }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return volumes[r * cols() + c]; }

    friend bool operator==(const SviMatrix&, const SviMatrix&) = default;
};

/// `date,<term1>,<term2>,...`; at least two term columns. Monday-dated rows
/// (the usual search-volume convention) map forward to their Friday.
[[nodiscard]] inline SviMatrix parse_svi(std::istream& in) {
    const auto table = csv::read_all(in);
    if (table.empty()) throw ParseError("SVI file has no header");
    const auto& header = table.front().fields;
    if (header.size() < 3) {
        throw ParseError("SVI file needs at least two term columns, found " +
                         std::to_string(header.empty() ? 0 : header.size() - 1));
    }
    SviMatrix m;
    for (std::size_t c = 1; c < header.size(); ++c) m.terms.emplace_back(csv::trim(header[c]));

    std::vector<std::pair<WeekStamp, std::vector<double>>> rows;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        const auto line = std::to_string(row.line);
        if (row.fields.size() != header.size()) {
            throw ParseError("SVI line " + line + ": ragged row (" + std::to_string(row.fields.size()) +
                             " fields, expected " + std::to_string(header.size()) + ")");
        }
        const auto day = parse_date(row.fields[0]);
        if (!day) throw ParseError("SVI line " + line + ": bad date '" + row.fields[0] + "'");
        std::vector<double> v;
        for (std::size_t c = 1; c < row.fields.size(); ++c) {
            const auto x = csv::parse_number(row.fields[c]);
            if (!x || *x < 0) {
                throw ParseError("SVI line " + line + ": bad volume for '" + m.terms[c - 1] + "'");
            }
            v.push_back(*x);
        }
        rows.emplace_back(WeekStamp::containing(*day), std::move(v));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    detail::require_gapless(rows.size(), [&](std::size_t i) { return rows[i].first; }, "SVI");
    for (auto& [w, v] : rows) {
        m.weeks.push_back(w);
        m.volumes.insert(m.volumes.end(), v.begin(), v.end());
    }
    return m;
}

inline void write_svi(std::ostream& out, const SviMatrix& m) {
    std::vector<std::string> header{"date"};
    header.insert(header.end(), m.terms.begin(), m.terms.end());
    csv::write_row(out, header);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::vector<std::string> f{m.weeks[r].to_string()};
        for (std::size_t c = 0; c < m.cols(); ++c) f.push_back(csv::format_number(m(r, c)));
        csv::write_row(out, f);
    }
}

}  // namespace moodcast
