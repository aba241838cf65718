#pragma once

#include "moodcast/econometrics.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/factors.hpp"
#include "moodcast/features.hpp"
#include "moodcast/forecasting.hpp"
#include "moodcast/ingestion.hpp"
#include "moodcast/sentiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace moodcast {

namespace fs = std::filesystem;

struct SecurityConfig {
    std::string label;
    fs::path tweets;
    fs::path ohlcv;
    fs::path vix;
    fs::path svi;
    std::optional<fs::path> price;
};

/// Declarative run description, read from an INI file:
///
///     seed = 42
///     out = out                      ; relative to the config file
///     split = 0.76                   ; train fraction ...
///     split_week = 2011-05-27        ; ... or the last training week
///     lags = 1,2,3,4
///     ccf_max_lag = 7
///     classifier_training = training.csv   ; labeled tweets (optional)
///     classifier_model = model.json        ; or a saved model (optional)
///     vix_transform = log            ; log | level, for correlation and Granger
///     parallel = 1
///
///     [security.GLD]
///     tweets = GLD/tweets.csv        ; .jsonl for JSON lines
///     ohlcv = GLD/ohlcv.csv
///     vix = GLD/vix.csv
///     svi = GLD/svi.csv
///     price = GLD/price.csv          ; optional, replaces OHLCV closes
struct RunConfig {
    std::uint64_t seed = 42;
    fs::path out = "out";
    double split = 0.76;
    std::optional<WeekStamp> split_week;
    std::vector<int> lags{1, 2, 3, 4};
    int ccf_max_lag = 7;
    std::optional<fs::path> classifier_training;
    std::optional<fs::path> classifier_model;
    bool log_levels = true;
    std::size_t parallel = 1;
    std::vector<SecurityConfig> securities;
};

namespace detail {

inline std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = std::string(csv::trim(item));
        int v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
            throw ConfigError("'" + key + "': '" + t + "' is not an integer");
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace detail

[[nodiscard]] inline RunConfig load_config(const fs::path& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("cannot read config: " + std::string(e.what()));
    }
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    auto rel = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    static const std::vector<std::string> known{"seed", "out", "split", "split_week", "lags", "ccf_max_lag",
                                                "classifier_training", "classifier_model", "vix_transform", "parallel"};
    RunConfig cfg;
    try {
        for (const auto& [key, node] : tree) {
            if (node.empty()) {
                if (std::find(known.begin(), known.end(), key) == known.end()) {
                    throw ConfigError("unknown config key '" + key + "'");
                }
                continue;
            }
            if (key.rfind("security.", 0) != 0 || key.size() == 9) {
                throw ConfigError("unknown config section [" + key + "]");
            }
            SecurityConfig s;
            s.label = key.substr(9);
            for (const auto& [k, v] : node) {
                if (k != "tweets" && k != "ohlcv" && k != "vix" && k != "svi" && k != "price") {
                    throw ConfigError("[" + key + "]: unknown key '" + k + "'");
                }
            }
            for (const char* need : {"tweets", "ohlcv", "vix", "svi"}) {
                if (!node.get_optional<std::string>(need)) throw ConfigError("[" + key + "]: missing '" + need + "'");
            }
            s.tweets = rel(node.get<std::string>("tweets"));
            s.ohlcv = rel(node.get<std::string>("ohlcv"));
            s.vix = rel(node.get<std::string>("vix"));
            s.svi = rel(node.get<std::string>("svi"));
            if (auto p = node.get_optional<std::string>("price")) s.price = rel(*p);
            cfg.securities.push_back(std::move(s));
        }
        cfg.seed = tree.get<std::uint64_t>("seed", cfg.seed);
        cfg.out = rel(tree.get<std::string>("out", "out"));
        cfg.split = tree.get<double>("split", cfg.split);
        if (auto w = tree.get_optional<std::string>("split_week")) {
            const auto day = parse_date(*w);
            if (!day) throw ConfigError("'split_week': bad date '" + *w + "'");
            cfg.split_week = WeekStamp::containing(*day);
        }
        if (auto l = tree.get_optional<std::string>("lags")) cfg.lags = detail::parse_int_list(*l, "lags");
        cfg.ccf_max_lag = tree.get<int>("ccf_max_lag", cfg.ccf_max_lag);
        if (auto p = tree.get_optional<std::string>("classifier_training")) cfg.classifier_training = rel(*p);
        if (auto p = tree.get_optional<std::string>("classifier_model")) cfg.classifier_model = rel(*p);
        const auto transform = tree.get<std::string>("vix_transform", "log");
        if (transform != "log" && transform != "level") {
            throw ConfigError("'vix_transform' must be 'log' or 'level', got '" + transform + "'");
        }
        cfg.log_levels = transform == "log";
        cfg.parallel = tree.get<std::size_t>("parallel", 1);
    } catch (const pt::ptree_bad_data& e) {
        throw ConfigError("bad config value: " + std::string(e.what()));
    }
    if (cfg.securities.empty()) throw ConfigError("config lists no [security.<label>] sections");
    if (cfg.lags.empty()) throw ConfigError("'lags' must not be empty");
    for (int l : cfg.lags) {
        if (l < 1) throw ConfigError("'lags' entries must be at least 1");
    }
    if (cfg.ccf_max_lag < 0) throw ConfigError("'ccf_max_lag' must be non-negative");
    if (!cfg.split_week && !(cfg.split > 0.0 && cfg.split < 1.0)) throw ConfigError("'split' must lie in (0, 1)");
    if (cfg.parallel < 1) throw ConfigError("'parallel' must be at least 1");
    return cfg;
}

// ---------------------------------------------------------------------------
// Per-security analysis

/// Which artifact groups a run produces.
enum Stage : unsigned {
    stage_features = 1u << 0,
    stage_factors = 1u << 1,
    stage_correlate = 1u << 2,
    stage_granger = 1u << 3,
    stage_forecast = 1u << 4,
    stage_all = 0x1Fu,
};

struct SecurityInputs {
    std::string label;
    std::vector<TweetRecord> tweets;
    std::vector<OhlcvWeekly> ohlcv;
    WeeklySeries vix;
    SviMatrix svi;
    std::optional<WeeklySeries> price;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::ifstream open_for_read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    return in;
}

inline TweetFormat tweet_format_for(const fs::path& p) {
    const auto ext = csv::lower(p.extension().string());
    return ext == ".jsonl" || ext == ".json" || ext == ".ndjson" ? TweetFormat::json_lines : TweetFormat::csv;
}

}  // namespace detail

[[nodiscard]] inline SecurityInputs load_inputs(const SecurityConfig& s) {
    auto ctx = [&](const std::string& file, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            // keep the error class, add which file failed
            const std::string msg = s.label + ": " + file + ": " + e.what();
            if (e.kind() == ErrorKind::numerical) throw NumericalError(msg);
            if (e.kind() == ErrorKind::config) throw ConfigError(msg);
            throw DataError(msg);
        }
    };
    SecurityInputs in{s.label, {}, {}, WeeklySeries("vix", WeekStamp{}, {0.0}), {}, std::nullopt, {}};
    auto corpus = ctx(s.tweets.filename().string(), [&] {
        auto f = detail::open_for_read(s.tweets);
        return parse_tweets(f, detail::tweet_format_for(s.tweets));
    });
    if (corpus.skipped) in.warnings.push_back(std::to_string(corpus.skipped) + " malformed tweet rows skipped");
    if (corpus.duplicates) in.warnings.push_back(std::to_string(corpus.duplicates) + " duplicate tweet ids dropped");
    in.tweets = std::move(corpus.records);
    in.ohlcv = ctx(s.ohlcv.filename().string(), [&] {
        auto f = detail::open_for_read(s.ohlcv);
        return parse_ohlcv(f);
    });
    in.vix = ctx(s.vix.filename().string(), [&] {
        auto f = detail::open_for_read(s.vix);
        return parse_weekly_series(f, "vix");
    });
    in.svi = ctx(s.svi.filename().string(), [&] {
        auto f = detail::open_for_read(s.svi);
        return parse_svi(f);
    });
    if (s.price) {
        in.price = ctx(s.price->filename().string(), [&] {
            auto f = detail::open_for_read(*s.price);
            return parse_weekly_series(f, "close");
        });
    }
    return in;
}

struct AnalysisOptions {
    std::uint64_t seed = 42;
    double split = 0.76;
    std::optional<WeekStamp> split_week;
    std::vector<int> lags{1, 2, 3, 4};
    int ccf_max_lag = 7;
    bool log_levels = true;
    unsigned stages = stage_all;
    std::vector<std::string> forecast_targets{"close", "vix"};
};

struct SecurityAnalysis {
    std::string label;
    std::optional<FeatureBundle> features;  ///< set once the features stage ran
    std::optional<FactorModel> factors;
    std::vector<HeatmapCell> heatmap;
    std::vector<LagCorrelogram> correlograms;
    std::vector<GrangerCell> granger;
    std::vector<ForecastReport> forecasts;
    std::vector<std::string> warnings;
    /// file name -> content, written only once everything succeeded
    std::map<std::string, std::string> artifacts;
};

/// Sentiment and factor series that act as mood predictors.
[[nodiscard]] inline std::vector<WeeklySeries> mood_series(const SecurityAnalysis& a) {
    auto out = a.features->twitter.series;
    if (a.factors) out.insert(out.end(), a.factors->scores.begin(), a.factors->scores.end());
    return out;
}

/// Financial series used in correlation and causality analysis; close and
/// the volatility index are logged when `log_levels` is set.
[[nodiscard]] inline std::vector<WeeklySeries> market_series(const SecurityFeatures& f, bool log_levels) {
    if (!log_levels) return f.all();
    return {log_transform(f.close).renamed("log_close"), f.returns, f.volatility, f.log_volume,
            log_transform(f.vix).renamed("log_vix")};
}

/// Runs every requested stage in memory. Throws on the first fatal error.
[[nodiscard]] inline SecurityAnalysis analyze_security(const SecurityInputs& in, const NaiveBayesModel* classifier,
                                                       const AnalysisOptions& opt) {
    SecurityAnalysis a;
    a.label = in.label;
    a.warnings = in.warnings;
    auto stage = [&](const char* name, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            const std::string msg = in.label + ": " + name + ": " + e.what();
            if (e.kind() == ErrorKind::numerical) throw NumericalError(msg);
            if (e.kind() == ErrorKind::config) throw ConfigError(msg);
            throw DataError(msg);
        }
    };

    stage("features", [&] {
        const auto labeled = label_corpus(in.tweets, classifier);
        const auto windows = window_tweets(labeled);
        if (windows.dropped) a.warnings.push_back(std::to_string(windows.dropped) + " tweets outside the week range");
        a.features.emplace(build_feature_sets(in.label, tally_windows(windows), in.ohlcv, in.vix, in.price));
        if (a.features->clamped_volatility_bars) {
            a.warnings.push_back(std::to_string(a.features->clamped_volatility_bars) +
                                 " OHLCV bars had a negative Garman-Klass term clamped to zero");
        }
    });
    if (opt.stages & stage_features) {
        std::ostringstream tw, fin;
        write_wide_csv(tw, a.features->twitter.series);
        write_wide_csv(fin, a.features->financial.all());
        a.artifacts["features.csv"] = tw.str();
        a.artifacts["financial.csv"] = fin.str();
    }

    const bool need_factors = opt.stages & (stage_factors | stage_correlate | stage_granger | stage_forecast);
    if (need_factors) {
        stage("factors", [&] {
            a.factors = fit_factor_model(in.svi);
            if (a.factors->kaiser_fallback) a.warnings.push_back("no eigenvalue above 1; kept the largest component");
            if (!a.factors->rotation_converged) a.warnings.push_back("varimax stopped at the sweep limit");
            if (a.factors->ridge_applied) a.warnings.push_back("factor scores used a ridge-regularised correlation matrix");
        });
    }
    if (opt.stages & stage_factors) {
        std::ostringstream out;
        write_loadings_csv(out, *a.factors);
        a.artifacts["factor_loadings.csv"] = out.str();
    }

    const auto mood = need_factors ? mood_series(a) : a.features->twitter.series;
    if (opt.stages & (stage_correlate | stage_granger)) {
        const auto market = market_series(a.features->financial, opt.log_levels);
        if (opt.stages & stage_correlate) {
            stage("correlate", [&] {
                a.heatmap = correlation_heatmap(mood, market);
                for (const auto& x : mood) {
                    for (const auto& y : market) {
                        try {
                            const auto pair = align({x, y});
                            a.correlograms.push_back(cross_correlogram(pair[0], pair[1], opt.ccf_max_lag));
                        } catch (const DataError& e) {
                            a.warnings.push_back("cross-correlogram " + x.name() + " vs " + y.name() + ": " + e.what());
                        }
                    }
                }
                std::ostringstream hm, cc;
                write_heatmap_csv(hm, a.heatmap);
                write_correlograms_csv(cc, a.correlograms);
                a.artifacts["correlation_heatmap.csv"] = hm.str();
                a.artifacts["cross_correlogram.csv"] = cc.str();
            });
        }
        if (opt.stages & stage_granger) {
            stage("granger", [&] {
                a.granger = significance_table(market, mood, opt.lags);
                for (const auto& c : a.granger) {
                    if (!c.result) {
                        a.warnings.push_back("granger " + c.predictor + " -> " + c.target + " lag " +
                                             std::to_string(c.lag) + " unavailable: " + c.error);
                    }
                }
                std::ostringstream out;
                write_significance_csv(out, in.label, a.granger);
                a.artifacts["granger.csv"] = out.str();
            });
        }
    }

    if (opt.stages & stage_forecast) {
        stage("forecast", [&] {
            StepwiseOptions so;
            so.mining.fit.seed = opt.seed;
            const auto& fin = a.features->financial;
            for (const auto& target_name : opt.forecast_targets) {
                const WeeklySeries& target = target_name == "vix" ? fin.vix : fin.close;
                auto prep = lagged_predictors(target, mood);
                for (const auto& x : prep.excluded) {
                    a.warnings.push_back("forecast " + target_name + ": predictor " + x + " has missing values");
                }
                std::size_t split = 0;
                if (opt.split_week) {
                    if (!prep.target.covers(*opt.split_week)) throw ConfigError("split week outside the sample");
                    split = static_cast<std::size_t>(opt.split_week->weeks_since(prep.target.start())) + 1;
                    if (split >= prep.target.size()) throw ConfigError("split week leaves no test weeks");
                } else {
                    split = split_point(prep.target.size(), opt.split);
                }
                a.forecasts.push_back(compare_with_without(in.label, prep.target, prep.candidates, split, so));
            }
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : a.forecasts) j.push_back(to_json(r));
            std::ostringstream csv_out;
            write_forecast_csv(csv_out, a.forecasts);
            a.artifacts["forecast.json"] = j.dump(2) + "\n";
            a.artifacts["forecast.csv"] = csv_out.str();
        });
    }
    return a;
}

// ---------------------------------------------------------------------------
// Artifacts and manifest

[[nodiscard]] inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

struct SecurityOutcome {
    std::string label;
    bool complete = false;
    std::optional<ErrorKind> error_kind;
    std::string error;
    std::vector<std::string> warnings;
    std::vector<std::string> files;  ///< relative to the output directory
};

struct RunResult {
    std::vector<SecurityOutcome> securities;
    fs::path manifest;

    /// 0 when every security completed, otherwise the code of the first failure.
    [[nodiscard]] int exit_code() const {
        for (const auto& s : securities) {
            if (s.error_kind) {
                switch (*s.error_kind) {
                    case ErrorKind::config: return 2;
                    case ErrorKind::data: return 3;
                    case ErrorKind::numerical: return 4;
                }
            }
        }
        return 0;
    }
};

namespace detail {

inline void write_file(const fs::path& p, std::string_view content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write to '" + p.string() + "' failed");
}

inline std::string read_file(const fs::path& p) {
    auto in = open_for_read(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Trains (or loads) the shared classifier named by the config, if any.
[[nodiscard]] inline std::optional<NaiveBayesModel> load_classifier(const RunConfig& cfg) {
    if (cfg.classifier_model) {
        try {
            return model_from_json(nlohmann::json::parse(detail::read_file(*cfg.classifier_model)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("classifier model: " + std::string(e.what()));
        }
    }
    if (cfg.classifier_training) {
        auto in = detail::open_for_read(*cfg.classifier_training);
        const auto corpus = parse_tweets(in, detail::tweet_format_for(*cfg.classifier_training));
        return train(corpus.records);
    }
    return std::nullopt;
}

/// Processes every security (in parallel when configured), writes each
/// security's artifacts only after its analysis succeeded, then writes
/// `manifest.json` listing every artifact with its SHA-256 and size.
[[nodiscard]] inline RunResult run_pipeline(const RunConfig& cfg, unsigned stages = stage_all) {
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + cfg.out.string() + "': " + ec.message());

    const auto classifier = load_classifier(cfg);
    std::vector<std::string> global_files;
    if (classifier && cfg.classifier_training) {
        detail::write_file(cfg.out / "classifier.json", to_json(*classifier).dump(2) + "\n");
        global_files.emplace_back("classifier.json");
    }

    AnalysisOptions opt;
    opt.seed = cfg.seed;
    opt.split = cfg.split;
    opt.split_week = cfg.split_week;
    opt.lags = cfg.lags;
    opt.ccf_max_lag = cfg.ccf_max_lag;
    opt.log_levels = cfg.log_levels;
    opt.stages = stages;

    RunResult result;
    result.securities.resize(cfg.securities.size());
    std::mutex io;
    detail::parallel_for(cfg.securities.size(), cfg.parallel, [&](std::size_t i) {
        const auto& sc = cfg.securities[i];
        auto& outcome = result.securities[i];
        outcome.label = sc.label;
        try {
            const auto inputs = load_inputs(sc);
            auto analysis = analyze_security(inputs, classifier ? &*classifier : nullptr, opt);
            outcome.warnings = analysis.warnings;
            const fs::path dir = cfg.out / sc.label;
            std::lock_guard lock(io);
            fs::create_directories(dir);
            for (const auto& [name, content] : analysis.artifacts) {
                detail::write_file(dir / name, content);
                outcome.files.push_back(sc.label + "/" + name);
            }
            outcome.complete = true;
        } catch (const Error& e) {
            outcome.error_kind = e.kind();
            outcome.error = e.what();
        } catch (const std::exception& e) {
            outcome.error_kind = ErrorKind::data;
            outcome.error = sc.label + ": " + e.what();
        }
    });

    nlohmann::json files = nlohmann::json::array();
    std::vector<std::string> all = global_files;
    for (const auto& s : result.securities) all.insert(all.end(), s.files.begin(), s.files.end());
    std::sort(all.begin(), all.end());
    for (const auto& f : all) {
        const auto content = detail::read_file(cfg.out / f);
        files.push_back({{"path", f}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }
    nlohmann::json secs = nlohmann::json::array();
    for (const auto& s : result.securities) {
        nlohmann::json j{{"label", s.label}, {"complete", s.complete}, {"warnings", s.warnings}, {"files", s.files}};
        if (!s.complete) j["error"] = s.error;
        secs.push_back(std::move(j));
    }
    const nlohmann::json manifest{{"format", 1},
                                  {"seed", cfg.seed},
                                  {"complete", std::all_of(result.securities.begin(), result.securities.end(),
                                                           [](const auto& s) { return s.complete; })},
                                  {"securities", std::move(secs)},
                                  {"files", std::move(files)}};
    result.manifest = cfg.out / "manifest.json";
    detail::write_file(result.manifest, manifest.dump(2) + "\n");
    return result;
}

}  // namespace moodcast
