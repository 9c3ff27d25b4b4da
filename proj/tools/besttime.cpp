// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// besttime: derive and evaluate best-time-to-post schedules.
//
//   besttime <subcommand> [--config FILE] [--workers N] [--seed S]
//            [--network TW|FB|FP|GP] [--out DIR] [--set key=value ...]
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <besttime/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr const char* kFooter = R"(Subcommands:
  synth          generate synthetic posts/reactions/edges/users + ground_truth.tsv
  ingest-report  parse inputs, join reactions to posts, report counts
  ptr            delay filter (ptr_filter.tsv), quantiles, cumulative curve CSV
  schedule       S1, S2, S1w, S2w, MFU, AFD per user; ranked recommended times
  evaluate       reaction gain per rank on the held-out window (gain.tsv, CSV)
  analyze        city cohort series and pairwise correlation/cosine histograms
  plot-data      verify every figure CSV is present
  all            ingest-report, ptr, schedule, evaluate, analyze in order

Defaults: derivation window 63 days, evaluation window 56 days right after it,
15-minute buckets (672 per week), 24-hour delay window with 15-minute lags,
alpha = beta = 1.0, K = 32 ranked buckets, weekday evaluation, 24-hour
reaction attribution.)";

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Best-time-to-post schedule derivation and evaluation"};
    app.footer(kFooter);

    std::string subcommand;
    std::string config_path;
    std::string manifest_path;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> network;
    std::optional<std::string> out;
    std::vector<std::string> overrides;

    app.add_option("subcommand", subcommand, "stage to run")->required();
    app.add_option("--config", config_path, "key=value run configuration file");
    app.add_option("--from-manifest", manifest_path,
                   "re-run with the parameters recorded in a manifest.json");
    app.add_option("--workers", workers, "worker threads (default 1)");
    app.add_option("--seed", seed, "random seed (default 1)");
    app.add_option("--network", network, "TW, FB, FP or GP (default TW)");
    app.add_option("--out", out, "output directory (default ./out)");
    app.add_option("--set", overrides, "override one config key, key=value");

    CLI11_PARSE(app, argc, argv);

    try {
        besttime::RunConfig cfg;
        if (!manifest_path.empty())
            cfg = besttime::config_from_manifest(manifest_path);
        if (!config_path.empty())
            besttime::parse_config_text(cfg, besttime::tsv::read_file(config_path));
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw besttime::ValidationError("--set", "expected key=value, got '" + kv + "'");
            besttime::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (workers)
            cfg.workers = *workers;
        if (seed)
            cfg.seed = *seed;
        if (network)
            besttime::set_config_value(cfg, "network", *network);
        if (out)
            cfg.out = *out;

        besttime::Pipeline pipeline(cfg);
        pipeline.run(subcommand);
        for (const auto& [name, digest] : pipeline.manifest().outputs)
            std::cout << digest << "  " << name << '\n';
        return 0;
    }
    catch (const besttime::ValidationError& e) {
        std::cerr << "besttime: invalid configuration: " << e.what() << '\n';
        return 1;
    }
    catch (const std::exception& e) {
        std::cerr << "besttime: " << subcommand << " failed: " << e.what() << '\n';
        return 2;
    }
}
