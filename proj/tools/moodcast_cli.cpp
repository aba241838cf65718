// moodcast command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.

#include "moodcast/moodcast.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> parallel;
};

int exit_code_for(moodcast::ErrorKind kind) {
    switch (kind) {
        case moodcast::ErrorKind::config: return 2;
        case moodcast::ErrorKind::data: return 3;
        case moodcast::ErrorKind::numerical: return 4;
    }
    return 3;
}

moodcast::RunConfig resolve_config(const GlobalFlags& g) {
    if (g.config.empty()) throw moodcast::ConfigError("--config is required");
    auto cfg = moodcast::load_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out.empty()) cfg.out = g.out;
    if (g.parallel) {
        if (*g.parallel < 1) throw moodcast::ConfigError("--parallel must be at least 1");
        cfg.parallel = *g.parallel;
    }
    return cfg;
}

int report(const moodcast::RunResult& r) {
    for (const auto& s : r.securities) {
        if (s.complete) {
            std::cout << s.label << ": " << s.files.size() << " artifact(s)";
            if (!s.warnings.empty()) std::cout << ", " << s.warnings.size() << " warning(s)";
            std::cout << "\n";
        } else {
            std::cerr << "error: " << s.error << "\n";
        }
    }
    std::cout << "manifest: " << r.manifest.string() << "\n";
    return r.exit_code();
}

int run_ingest(const GlobalFlags& g) {
    const auto cfg = resolve_config(g);
    int code = 0;
    for (const auto& sc : cfg.securities) {
        try {
            const auto in = moodcast::load_inputs(sc);
            std::cout << sc.label << ": " << in.tweets.size() << " tweets, " << in.ohlcv.size() << " OHLCV weeks ("
                      << in.ohlcv.front().week.to_string() << " .. " << in.ohlcv.back().week.to_string() << "), "
                      << in.vix.size() << " VIX weeks, " << in.svi.rows() << "x" << in.svi.cols() << " SVI\n";
            for (const auto& w : in.warnings) std::cout << "  warning: " << w << "\n";
        } catch (const moodcast::Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            if (code == 0) code = exit_code_for(e.kind());
        }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Investor-mood analytics: sentiment and search features, factor reduction, "
                 "lagged correlation, Granger causality and forecast model mining."};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalFlags g;
    app.add_option("--config", g.config, "Run configuration (INI)");
    app.add_option("--seed", g.seed, "Override the configured seed");
    app.add_option("--out", g.out, "Override the output directory");
    app.add_option("--parallel", g.parallel, "Securities processed concurrently");

    struct Sub {
        const char* name;
        const char* help;
        unsigned stages;
    };
    const Sub subs[] = {
        {"features", "Write weekly sentiment and market feature tables", moodcast::stage_features},
        {"factors", "Write search-volume factor loadings", moodcast::stage_factors},
        {"correlate", "Write correlation heatmap and cross-correlograms", moodcast::stage_correlate},
        {"granger", "Write the Granger significance grid", moodcast::stage_granger},
        {"forecast", "Write forecast comparisons with and without predictors", moodcast::stage_forecast},
        {"run", "Full pipeline: every artifact plus the manifest", moodcast::stage_all},
    };
    std::optional<unsigned> stages;
    for (const auto& s : subs) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        cmd->callback([&stages, st = s.stages] { stages = st; });
    }
    bool ingest = false;
    app.add_subcommand("ingest", "Parse and validate every input file")->callback([&] { ingest = true; });

    bool fixture = false;
    std::string fixture_dir;
    auto* fx = app.add_subcommand("fixture", "Generate a synthetic dataset with a ready-to-run config.ini");
    fx->add_option("dir", fixture_dir, "Directory to write (defaults to --out or ./fixture)");
    fx->callback([&] { fixture = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (fixture) {
            const std::string dir = !fixture_dir.empty() ? fixture_dir : !g.out.empty() ? g.out : "fixture";
            const auto data = moodcast::make_fixture(g.seed.value_or(42));
            moodcast::write_fixture(data, dir);
            std::cout << "fixture written to " << dir << " (config: " << dir << "/config.ini)\n";
            return 0;
        }
        if (ingest) return run_ingest(g);
        return report(moodcast::run_pipeline(resolve_config(g), *stages));
    } catch (const moodcast::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
