#pragma once

#include "moodcast/errors.hpp"
#include "moodcast/ingestion.hpp"
#include "moodcast/stopwords.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace moodcast {

[[nodiscard]] inline bool is_stopword(std::string_view token) {
    return std::binary_search(kEnglishStopwords.begin(), kEnglishStopwords.end(), token);
}

/// Lowercases ASCII, deletes apostrophes, turns other ASCII punctuation into
/// separators, splits on whitespace and drops stop words. Non-ASCII bytes are
/// kept inside tokens.
[[nodiscard]] inline std::vector<std::string> preprocess(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !is_stopword(cur)) tokens.push_back(cur);
        cur.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        // U+2019 RIGHT SINGLE QUOTATION MARK
        if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80 &&
            static_cast<unsigned char>(text[i + 2]) == 0x99) {
            i += 2;
            continue;
        }
        if (c == '\'') continue;
        if (c >= 0x80) {
            cur.push_back(static_cast<char>(c));
        } else if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

/// Two-class multinomial naive Bayes with add-alpha smoothing. Index 0 is
/// positive, 1 negative. All probabilities are stored as natural logs.
struct NaiveBayesModel {
    double alpha = 1.0;
    std::array<double, 2> log_priors{};
    std::map<std::string, std::array<double, 2>> log_likelihoods;
    /// Smoothed mass of a token absent from the vocabulary.
    std::array<double, 2> log_unseen{};

    friend bool operator==(const NaiveBayesModel&, const NaiveBayesModel&) = default;
};

struct Classification {
    Sentiment label = Sentiment::positive;
    double log_odds = 0.0;  ///< log P(pos|text) - log P(neg|text)
};

namespace detail {
inline std::size_t class_index(Sentiment s) { return s == Sentiment::positive ? 0 : 1; }
}  // namespace detail

[[nodiscard]] inline NaiveBayesModel train(const std::vector<TweetRecord>& corpus, double alpha = 1.0) {
    if (!(alpha > 0.0)) throw DomainError("smoothing alpha must be positive");
    std::array<std::size_t, 2> docs{};
    std::array<double, 2> total{};
    std::map<std::string, std::array<double, 2>> counts;
    for (const auto& t : corpus) {
        if (!t.label) throw DomainError("training tweet '" + t.id + "' has no label");
        const auto c = detail::class_index(*t.label);
        ++docs[c];
        for (auto& tok : preprocess(t.text)) {
            counts[tok][c] += 1.0;
            total[c] += 1.0;
        }
    }
    if (docs[0] == 0 || docs[1] == 0) {
        throw DomainError("training corpus needs examples of both classes");
    }
    NaiveBayesModel m;
    m.alpha = alpha;
    const double n = static_cast<double>(docs[0] + docs[1]);
    const double v = static_cast<double>(counts.size());
    for (std::size_t c = 0; c < 2; ++c) {
        m.log_priors[c] = std::log(static_cast<double>(docs[c]) / n);
        m.log_unseen[c] = std::log(alpha / (total[c] + alpha * v));
    }
    for (const auto& [tok, k] : counts) {
        auto& ll = m.log_likelihoods[tok];
        for (std::size_t c = 0; c < 2; ++c) ll[c] = std::log((k[c] + alpha) / (total[c] + alpha * v));
    }
    return m;
}

[[nodiscard]] inline Classification classify(const NaiveBayesModel& model,
                                             const std::vector<std::string>& tokens) {
    double score = model.log_priors[0] - model.log_priors[1];
    for (const auto& tok : tokens) {
        const auto it = model.log_likelihoods.find(tok);
        const auto& ll = it == model.log_likelihoods.end() ? model.log_unseen : it->second;
        score += ll[0] - ll[1];
    }
    // ties resolve to positive
    return {score >= 0.0 ? Sentiment::positive : Sentiment::negative, score};
}

[[nodiscard]] inline Classification classify(const NaiveBayesModel& model, std::string_view text) {
    return classify(model, preprocess(text));
}

/// Pre-labeled tweets pass through untouched; the rest are classified with
/// `model`, which must then be present.
[[nodiscard]] inline std::vector<TweetRecord> label_corpus(std::vector<TweetRecord> tweets,
                                                           const NaiveBayesModel* model) {
    for (auto& t : tweets) {
        if (t.label) continue;
        if (!model) throw DomainError("tweet '" + t.id + "' is unlabeled and no classifier was supplied");
        t.label = classify(*model, t.text).label;
    }
    return tweets;
}

struct DailySentimentCount {
    std::chrono::sys_days date;
    std::size_t positive = 0;
    std::size_t negative = 0;

    friend bool operator==(const DailySentimentCount&, const DailySentimentCount&) = default;
};

/// Per-UTC-day tallies, ascending by date.
[[nodiscard]] inline std::vector<DailySentimentCount> tally_daily(const std::vector<TweetRecord>& tweets) {
    std::map<std::chrono::sys_days, DailySentimentCount> days;
    for (const auto& t : tweets) {
        if (!t.label) throw DomainError("tweet '" + t.id + "' is unlabeled");
        const auto d = std::chrono::floor<std::chrono::days>(t.timestamp);
        auto& rec = days[d];
        rec.date = d;
        (*t.label == Sentiment::positive ? rec.positive : rec.negative)++;
    }
    std::vector<DailySentimentCount> out;
    out.reserve(days.size());
    for (auto& [d, rec] : days) out.push_back(rec);
    return out;
}

// JSON persistence: {alpha, priors:{positive,negative},
// likelihoods:{token:{positive,negative}}, unseen:{positive,negative}}

[[nodiscard]] inline nlohmann::json to_json(const NaiveBayesModel& m) {
    nlohmann::json lik = nlohmann::json::object();
    for (const auto& [tok, ll] : m.log_likelihoods) lik[tok] = {{"positive", ll[0]}, {"negative", ll[1]}};
    return {{"alpha", m.alpha},
            {"priors", {{"positive", m.log_priors[0]}, {"negative", m.log_priors[1]}}},
            {"likelihoods", std::move(lik)},
            {"unseen", {{"positive", m.log_unseen[0]}, {"negative", m.log_unseen[1]}}}};
}

[[nodiscard]] inline NaiveBayesModel model_from_json(const nlohmann::json& j) {
    try {
        NaiveBayesModel m;
        m.alpha = j.at("alpha").get<double>();
        if (!(m.alpha > 0.0)) throw DataError("model alpha must be positive");
        m.log_priors = {j.at("priors").at("positive").get<double>(),
                        j.at("priors").at("negative").get<double>()};
        for (const auto& [tok, ll] : j.at("likelihoods").items()) {
            m.log_likelihoods[tok] = {ll.at("positive").get<double>(), ll.at("negative").get<double>()};
        }
        if (j.contains("unseen")) {
            m.log_unseen = {j["unseen"].at("positive").get<double>(), j["unseen"].at("negative").get<double>()};
        } else {
            // Without the key unseen tokens carry no evidence either way.
            m.log_unseen = {0.0, 0.0};
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed classifier model: ") + e.what());
    }
}

}  // namespace moodcast
