#include "moodcast/sentiment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace moodcast;
using namespace std::chrono;

namespace {

TweetRecord doc(const std::string& id, const std::string& text, std::optional<Sentiment> label,
                sys_seconds t = sys_seconds{sys_days{2010y / June / 7}}) {
    return {id, t, text, label};
}

NaiveBayesModel good_bad_model() {
    return train({doc("1", "good", Sentiment::positive), doc("2", "bad", Sentiment::negative)}, 1.0);
}

}  // namespace

TEST(Preprocess, Examples) {
    EXPECT_EQ(preprocess("Gold is SOARING!!!"), (std::vector<std::string>{"gold", "soaring"}));
    EXPECT_TRUE(preprocess("").empty());
    EXPECT_TRUE(preprocess("the and of").empty());
}

TEST(Preprocess, PunctuationSplitsAndApostrophesJoin) {
    EXPECT_EQ(preprocess("oil,gas;  #GOLD"), (std::vector<std::string>{"oil", "gas", "gold"}));
    EXPECT_EQ(preprocess("can't"), preprocess("cant"));
    EXPECT_EQ(preprocess("price\xE2\x80\x99s"), (std::vector<std::string>{"prices"}));
}

TEST(Preprocess, Deterministic) {
    const std::string text = "Markets rally; gold & silver jump 5% -- buy now!";
    EXPECT_EQ(preprocess(text), preprocess(text));
}

TEST(Train, HandComputedAddOneSmoothing) {
    const auto m = good_bad_model();
    EXPECT_NEAR(std::exp(m.log_priors[0]), 0.5, 1e-12);
    EXPECT_NEAR(std::exp(m.log_priors[1]), 0.5, 1e-12);
    // vocabulary {good, bad}; positive class has one token
    EXPECT_NEAR(std::exp(m.log_likelihoods.at("good")[0]), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(std::exp(m.log_likelihoods.at("bad")[0]), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(std::exp(m.log_likelihoods.at("good")[1]), 1.0 / 3.0, 1e-12);
}

TEST(Train, SingleClassCorpusRejected) {
    EXPECT_THROW((void)train({doc("1", "up", Sentiment::positive), doc("2", "more", Sentiment::positive)}),
                 DomainError);
    EXPECT_THROW((void)train({doc("1", "up", std::nullopt)}), DomainError);
    EXPECT_THROW((void)train({doc("1", "up", Sentiment::positive), doc("2", "x", Sentiment::negative)}, 0.0),
                 DomainError);
}

// Add-alpha smoothing does not scale with the counts, so doubling the corpus
// moves the likelihoods slightly; priors, vocabulary and decisions stay put.
TEST(Train, DuplicatedCorpusKeepsPriorsVocabularyAndDecisions) {
    std::vector<TweetRecord> corpus{doc("1", "gold rally strong", Sentiment::positive),
                                    doc("2", "gold crash weak", Sentiment::negative),
                                    doc("3", "strong buy", Sentiment::positive),
                                    doc("4", "sell weak panic", Sentiment::negative),
                                    doc("5", "rally", Sentiment::positive)};
    auto doubled = corpus;
    for (const auto& t : corpus) doubled.push_back(doc(t.id + "b", t.text, t.label));
    const auto a = train(corpus);
    const auto b = train(doubled);
    EXPECT_NEAR(a.log_priors[0], b.log_priors[0], 1e-12);
    EXPECT_NEAR(a.log_priors[1], b.log_priors[1], 1e-12);
    ASSERT_EQ(a.log_likelihoods.size(), b.log_likelihoods.size());
    for (const auto& [tok, ll] : a.log_likelihoods) {
        ASSERT_TRUE(b.log_likelihoods.count(tok));
        // the ordering of the two classes per token is preserved
        EXPECT_EQ(ll[0] > ll[1], b.log_likelihoods.at(tok)[0] > b.log_likelihoods.at(tok)[1]) << tok;
    }
    for (const char* probe : {"gold", "rally", "weak panic", "strong crash", "buy sell", ""}) {
        EXPECT_EQ(classify(a, probe).label, classify(b, probe).label) << probe;
    }
}

TEST(Train, LikelihoodsSumToOnePerClass) {
    std::mt19937_64 rng(2);
    std::vector<TweetRecord> corpus;
    for (int i = 0; i < 200; ++i) {
        std::string text;
        for (int k = 0; k < 6; ++k) text += "tok" + std::to_string(rng() % 40) + " ";
        corpus.push_back(doc(std::to_string(i), text, i % 3 ? Sentiment::positive : Sentiment::negative));
    }
    for (double alpha : {0.5, 1.0, 3.0}) {
        const auto m = train(corpus, alpha);
        for (std::size_t c = 0; c < 2; ++c) {
            double sum = 0.0;
            for (const auto& [tok, ll] : m.log_likelihoods) sum += std::exp(ll[c]);
            EXPECT_NEAR(sum, 1.0, 1e-9);
        }
        EXPECT_NEAR(std::exp(m.log_priors[0]) + std::exp(m.log_priors[1]), 1.0, 1e-9);
    }
}

TEST(Classify, HandComputedLogOdds) {
    const auto m = good_bad_model();
    const auto c = classify(m, "good");
    EXPECT_EQ(c.label, Sentiment::positive);
    // log((2/3)/(1/3)) with equal priors
    EXPECT_NEAR(c.log_odds, std::log(2.0), 1e-12);
    EXPECT_EQ(classify(m, "bad").label, Sentiment::negative);
}

TEST(Classify, EmptyTextTiesToPositive) {
    const auto c = classify(good_bad_model(), "");
    EXPECT_EQ(c.label, Sentiment::positive);
    EXPECT_EQ(c.log_odds, 0.0);
}

TEST(Classify, RepeatedEvidenceStrengthens) {
    const auto m = good_bad_model();
    const auto once = classify(m, "good");
    const auto thrice = classify(m, "good good good");
    EXPECT_EQ(once.label, thrice.label);
    EXPECT_GT(std::fabs(thrice.log_odds), std::fabs(once.log_odds));
    EXPECT_NEAR(thrice.log_odds, 3.0 * std::log(2.0), 1e-12);
}

TEST(Classify, TokenOrderInvariant) {
    const auto m = train({doc("1", "gold rally strong", Sentiment::positive),
                          doc("2", "gold crash weak", Sentiment::negative)});
    EXPECT_DOUBLE_EQ(classify(m, "rally weak gold").log_odds, classify(m, "gold weak rally").log_odds);
}

TEST(Classify, UnseenTokensCarrySmoothedMassOnly) {
    // positive class has more tokens, so an unseen token is slightly less likely there
    const auto m = train({doc("1", "good great", Sentiment::positive), doc("2", "bad", Sentiment::negative)});
    const double expected = std::log(1.0 / (2 + 3)) - std::log(1.0 / (1 + 3));
    EXPECT_NEAR(classify(m, "zzz").log_odds, expected, 1e-12);
}

TEST(Classify, RecoversLabelsFromAGenerativeModel) {
    // Class-conditional token distributions over 20 tokens; total variation
    // distance 0.6. Documents have 8 tokens.
    std::vector<double> pos(20), neg(20);
    for (int i = 0; i < 20; ++i) {
        pos[i] = i < 10 ? 0.08 : 0.02;
        neg[i] = i < 10 ? 0.02 : 0.08;
    }
    double tv = 0.0;
    for (int i = 0; i < 20; ++i) tv += 0.5 * std::fabs(pos[i] - neg[i]);
    ASSERT_GE(tv, 0.5);

    std::mt19937_64 rng(1234);
    std::discrete_distribution<int> dp(pos.begin(), pos.end()), dn(neg.begin(), neg.end());
    auto make = [&](int i) {
        const bool positive = rng() % 2 == 0;
        std::string text;
        for (int k = 0; k < 8; ++k) text += "term" + std::to_string(positive ? dp(rng) : dn(rng)) + " ";
        return doc(std::to_string(i), text, positive ? Sentiment::positive : Sentiment::negative);
    };
    std::vector<TweetRecord> training, held_out;
    for (int i = 0; i < 2000; ++i) training.push_back(make(i));
    for (int i = 0; i < 1000; ++i) held_out.push_back(make(i));
    const auto m = train(training);
    int correct = 0;
    for (const auto& t : held_out) correct += classify(m, t.text).label == *t.label;
    EXPECT_GE(correct, 950);
}

TEST(LabelCorpus, PreLabeledPassThrough) {
    const auto m = good_bad_model();
    const auto out = label_corpus({doc("1", "good", Sentiment::negative), doc("2", "good", std::nullopt)}, &m);
    EXPECT_EQ(out[0].label, Sentiment::negative);
    EXPECT_EQ(out[1].label, Sentiment::positive);
    EXPECT_THROW((void)label_corpus({doc("1", "good", std::nullopt)}, nullptr), DomainError);
}

TEST(TallyDaily, Examples) {
    const auto day = sys_seconds{sys_days{2010y / June / 7}};
    std::vector<TweetRecord> tweets{doc("1", "a", Sentiment::positive, day + hours{1}),
                                    doc("2", "a", Sentiment::positive, day + hours{2}),
                                    doc("3", "a", Sentiment::negative, day + hours{3}),
                                    doc("4", "a", Sentiment::positive, day + hours{23})};
    const auto t = tally_daily(tweets);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0].positive, 3u);
    EXPECT_EQ(t[0].negative, 1u);
    EXPECT_TRUE(tally_daily({}).empty());
}

TEST(TallyDaily, PermutationInvariant) {
    const auto day = sys_seconds{sys_days{2010y / June / 7}};
    std::vector<TweetRecord> tweets;
    for (int i = 0; i < 30; ++i) {
        tweets.push_back(doc(std::to_string(i), "a", i % 3 ? Sentiment::positive : Sentiment::negative,
                             day + hours{(i * 7) % 48}));
    }
    const auto base = tally_daily(tweets);
    ASSERT_EQ(base.size(), 2u);
    std::size_t total = 0;
    for (const auto& d : base) total += d.positive + d.negative;
    EXPECT_EQ(total, tweets.size());
    std::mt19937_64 rng(4);
    for (int k = 0; k < 5; ++k) {
        std::shuffle(tweets.begin(), tweets.end(), rng);
        EXPECT_EQ(tally_daily(tweets), base);
    }
}

TEST(ModelJson, RoundTrip) {
    const auto m = train({doc("1", "gold rally", Sentiment::positive), doc("2", "gold crash", Sentiment::negative)});
    const auto j = to_json(m);
    EXPECT_TRUE(j.contains("alpha"));
    EXPECT_TRUE(j["priors"].contains("positive"));
    EXPECT_TRUE(j["likelihoods"]["gold"].contains("negative"));
    const auto back = model_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back, m);
    EXPECT_THROW((void)model_from_json(nlohmann::json::parse(R"({"alpha":1})")), ParseError);
}
