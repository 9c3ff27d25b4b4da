// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

#include <besttime/pipeline.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace besttime;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("besttime_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunConfig synth_config(const fs::path& out) {
    RunConfig c;
    c.out = out.string();
    c.synth_in_all = true;
    c.synth.users = 30;
    c.synth.followers_min = 8;
    c.synth.followers_max = 12;
    c.synth.communities = 2;
    c.synth.tz_offsets = {0, -300};
    c.synth.cities = {"Springfield", "Shelbyville"};
    c.synth.kernel = {0.5, 0.3, 0.2};
    c.sample_budget = 2000;
    return c;
}

std::string slurp(const fs::path& p) { return tsv::read_file(p.string()); }

struct CliResult
{
    int status = -1;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(BESTTIME_CLI) + " " + args + " >" +
                            (dir / "stdout.txt").string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = fs::exists(err) ? slurp(err) : "";
    return r;
}

std::size_t count_lines(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST(Pipeline, PtrOnDeltaKernelIsDelta) {
    const auto dir = scratch("ptr_delta");
    auto cfg = synth_config(dir);
    cfg.synth.kernel = {1.0};
    std::ostringstream log;
    {
        Pipeline p(cfg, log);
        p.run("synth");
    }
    cfg.posts = (dir / "posts.tsv").string();
    cfg.reactions = (dir / "reactions.tsv").string();
    cfg.edges = (dir / "edges.tsv").string();
    cfg.users = (dir / "users.tsv").string();
    Pipeline p(cfg, log);
    p.run("ptr");
    std::ifstream is(dir / "ptr_filter.tsv");
    const auto f = read_filter_table(is);
    EXPECT_EQ(f[0], 1.0);
    EXPECT_EQ(f.lags(), 96u);
    const std::string curve = slurp(dir / "cumulative_curves.csv");
    EXPECT_EQ(curve.substr(0, curve.find('\n')), "network,lag_end_seconds,fraction");
    EXPECT_EQ(curve.substr(curve.rfind(',', curve.size() - 2) + 1), "1\n");
}

TEST(Pipeline, AllIsDeterministicAcrossRunsAndWorkers) {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    std::ostringstream log;
    auto ca = synth_config(a);
    auto cb = synth_config(b);
    cb.workers = 3;
    Pipeline pa(ca, log);
    pa.run("all");
    Pipeline pb(cb, log);
    pb.run("all");
    ASSERT_FALSE(pa.manifest().outputs.empty());
    // The ingest report records input paths, which differ between the two.
    auto without_report = [](auto outputs) {
        outputs.erase("ingest_report.tsv");
        return outputs;
    };
    EXPECT_EQ(without_report(pa.manifest().outputs), without_report(pb.manifest().outputs));
    for (const char* f : {"schedules.tsv", "gain.tsv", "gain_by_rank.csv", "cohort_series.csv",
                          "metric_distributions.csv", "ranked_times.tsv", "ptr_filter.tsv"})
        EXPECT_TRUE(pa.manifest().outputs.count(f)) << f;

    Pipeline again(ca, log);
    again.run("all");
    EXPECT_EQ(again.manifest().outputs, pa.manifest().outputs);
}

TEST(Pipeline, PlotDataShapes) {
    const auto dir = scratch("shapes");
    auto cfg = synth_config(dir);
    cfg.ranks = 10;
    std::ostringstream log;
    Pipeline p(cfg, log);
    p.run("all");
    Pipeline plot(cfg, log);
    plot.run("plot-data");
    EXPECT_EQ(plot.manifest().outputs.size(), 4u);

    const std::string gain = slurp(dir / "gain_by_rank.csv");
    EXPECT_EQ(count_lines(gain), 1u + 6u * 10u);
    std::map<std::string, int> per_kind;
    std::istringstream is(gain);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "schedule,rank,rg_avg,users,posts");
    while (std::getline(is, line))
        ++per_kind[line.substr(0, line.find(','))];
    EXPECT_EQ(per_kind.size(), 6u);
    for (const auto& [kind, n] : per_kind)
        EXPECT_EQ(n, 10) << kind;

    // Every schedule line carries one probability per bucket.
    std::istringstream sched(slurp(dir / "schedules.tsv"));
    std::size_t lines = 0;
    while (std::getline(sched, line)) {
        ++lines;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 671);
    }
    EXPECT_GT(lines, 0u);
    EXPECT_NE(slurp(dir / "cohort_series.csv").find("TW:Springfield"), std::string::npos);
}

TEST(Pipeline, MissingArtifactsNameTheStage) {
    const auto dir = scratch("missing");
    auto cfg = synth_config(dir);
    std::ostringstream log;
    Pipeline p(cfg, log);
    p.run("synth");
    cfg.posts = (dir / "posts.tsv").string();
    cfg.reactions = (dir / "reactions.tsv").string();
    cfg.edges = (dir / "edges.tsv").string();
    cfg.users = (dir / "users.tsv").string();
    Pipeline q(cfg, log);
    try {
        q.run("schedule");
        FAIL() << "schedule ran without a filter";
    }
    catch (const MissingArtifact& e) {
        EXPECT_EQ(e.subcommand(), "ptr");
    }
    try {
        q.run("plot-data");
        FAIL() << "plot-data ran without upstream CSVs";
    }
    catch (const MissingArtifact& e) {
        EXPECT_EQ(e.subcommand(), "ptr");
    }
    EXPECT_THROW(q.run("evaluate"), MissingArtifact);
}

TEST(Pipeline, EmptyEvaluationWritesNoCsv) {
    const auto dir = scratch("empty_eval");
    auto cfg = synth_config(dir);
    cfg.synth.span_days = 63; // nothing left for the evaluation window
    std::ostringstream log;
    Pipeline p(cfg, log);
    try {
        p.run("all");
        FAIL() << "empty evaluation accepted";
    }
    catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("evaluation is empty"), std::string::npos);
    }
    EXPECT_TRUE(fs::exists(dir / "schedules.tsv"));
    EXPECT_FALSE(fs::exists(dir / "gain_by_rank.csv"));
}

TEST(Pipeline, ManifestRoundTrip) {
    const auto dir = scratch("manifest");
    auto cfg = synth_config(dir);
    cfg.model = {0.5, 2.0};
    cfg.synth.kernel = {0.25, 0.75};
    std::ostringstream log;
    Pipeline p(cfg, log);
    p.run("all");
    const auto manifest_path = dir / "manifest.json";
    const auto m = Manifest::from_json(nlohmann::ordered_json::parse(slurp(manifest_path)));
    EXPECT_EQ(m.subcommand, "all");
    EXPECT_EQ(m.outputs, p.manifest().outputs);

    const RunConfig back = config_from_manifest(manifest_path.string());
    EXPECT_EQ(config_values(back), config_values(p.config()));
    EXPECT_EQ(back.model.alpha, 0.5);
    EXPECT_EQ(back.synth.kernel, cfg.synth.kernel);

    Pipeline r(back, log);
    r.run("all");
    EXPECT_EQ(r.manifest().outputs, m.outputs);
}

TEST(Config, TextRoundTripAndErrors) {
    RunConfig c;
    c.seed = 77;
    c.synth.cities = {"a", "b"};
    c.eval_days = DayFilter::All;
    RunConfig d;
    parse_config_text(d, config_text(c));
    EXPECT_EQ(config_values(d), config_values(c));

    RunConfig e;
    try {
        set_config_value(e, "no_such_key", "1");
        FAIL();
    }
    catch (const ValidationError& err) {
        EXPECT_EQ(err.field(), "no_such_key");
    }
    EXPECT_THROW(set_config_value(e, "alpha", "abc"), ValidationError);

    RunConfig w;
    w.derivation_start = 0;
    w.evaluation_start = 10 * kDaySeconds;
    try {
        w.validate();
        FAIL();
    }
    catch (const ValidationError& err) {
        EXPECT_NE(err.field().find("derivation_window"), std::string::npos);
        EXPECT_NE(err.field().find("evaluation_window"), std::string::npos);
    }
}

TEST(Cli, ExitCodesAndDiagnostics) {
    const auto dir = scratch("cli");
    const std::string out = "--out " + (dir / "out").string();

    auto r = run_cli("all " + out + " --set derivation_start=0 --set evaluation_start=86400",
                     dir);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("derivation_window"), std::string::npos);
    EXPECT_NE(r.err.find("evaluation_window"), std::string::npos);

    r = run_cli("schedule " + out + " --set bogus=1", dir);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("bogus"), std::string::npos);

    r = run_cli("nonsense " + out, dir);
    EXPECT_EQ(r.status, 1);

    r = run_cli("plot-data " + out, dir);
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("'ptr' subcommand"), std::string::npos);

    r = run_cli("synth " + out + " --seed 5 --set synth.users=20 --set synth.followers_min=5 "
                "--set synth.followers_max=5",
                dir);
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "out" / "posts.tsv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));

    const fs::path cfg = dir / "run.conf";
    {
        std::ofstream os(cfg);
        os << "# synthetic end-to-end run\nsynth.in_all=true\nsynth.users=20\n"
              "synth.followers_min=5\nsynth.followers_max=5\nsample_budget=500\n";
    }
    r = run_cli("all --config " + cfg.string() + " " + out + " --workers 2", dir);
    EXPECT_EQ(r.status, 0) << r.err;
    const std::string first = slurp(dir / "stdout.txt");
    r = run_cli("all --from-manifest " + (dir / "out" / "manifest.json").string(), dir);
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(slurp(dir / "stdout.txt"), first);

    r = run_cli("--help", dir);
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(slurp(dir / "stdout.txt").find("63 days"), std::string::npos);
}
