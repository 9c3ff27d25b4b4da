// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Stage orchestration behind the command-line tool. Every stage reads its
// inputs from files, writes its artifacts into the output directory and
// records them in a manifest with SHA-256 digests.

#pragma once

#include <besttime/analysis.hpp>
#include <besttime/config.hpp>
#include <besttime/evaluation.hpp>
#include <besttime/grid.hpp>
#include <besttime/ingestion.hpp>
#include <besttime/ptr_filter.hpp>
#include <besttime/schedules.hpp>
#include <besttime/synthgen.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace besttime {

namespace fs = std::filesystem;

//! A stage could not run because an artifact of an earlier stage is missing.
class MissingArtifact : public Error
{
public:
    MissingArtifact(const std::string& file, const std::string& subcommand)
        : Error("missing " + file + "; run the '" + subcommand + "' subcommand first"),
          subcommand_(subcommand) { }

    const std::string& subcommand() const noexcept { return subcommand_; }

private:
    std::string subcommand_;
};

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

inline std::string file_digest(const std::string& path) { return sha256_hex(tsv::read_file(path)); }

//! Records what a run read and wrote.
struct Manifest
{
    std::string subcommand;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::map<std::string, std::string> inputs;  //!< path -> digest
    std::map<std::string, std::string> outputs; //!< file name in out dir -> digest

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["subcommand"] = subcommand;
        j["parameters"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : parameters)
            j["parameters"][k] = v;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        return j;
    }

    static Manifest from_json(const nlohmann::ordered_json& j) {
        Manifest m;
        m.subcommand = j.at("subcommand").get<std::string>();
        for (const auto& [k, v] : j.at("parameters").items())
            m.parameters.emplace_back(k, v.get<std::string>());
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        return m;
    }
};

inline RunConfig config_from_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest '" + path + "'");
    const auto m = Manifest::from_json(nlohmann::ordered_json::parse(in));
    RunConfig c;
    for (const auto& [k, v] : m.parameters)
        set_config_value(c, k, v);
    return c;
}

//! Loaded and joined inputs shared by the analysis stages.
struct Dataset
{
    UserTable users;
    std::vector<PostRecord> posts;
    std::vector<ReactionRecord> reactions;
    SocialGraph graph;
    std::vector<UserMeta> meta;
    JoinResult join;
    std::vector<int> tz;
    std::vector<LoadReport> reports;
    bool analysis_only = false; //!< reactor ids absent: delay analysis only
    std::size_t unknown_tz = 0;
};

class Pipeline
{
public:
    explicit Pipeline(RunConfig cfg, std::ostream& log = std::cerr)
        : cfg_(std::move(cfg)), log_(log) {
        cfg_.validate();
        cfg_.synth.seed = cfg_.seed;
        cfg_.synth.network = cfg_.network;
        cfg_.synth.bucket_width = cfg_.bucket_width;
        cfg_.synth.symmetric_edges = is_bidirectional(cfg_.network);
    }

    const RunConfig& config() const noexcept { return cfg_; }
    const Manifest& manifest() const noexcept { return manifest_; }

    //! Runs one subcommand and writes out/manifest.json.
    void run(const std::string& subcommand) {
        static const std::set<std::string> known = {"ingest-report", "ptr",     "schedule",
                                                    "evaluate",      "analyze", "synth",
                                                    "plot-data",     "all"};
        if (!known.count(subcommand))
            throw ValidationError("subcommand", "unknown subcommand '" + subcommand + "'");
        fs::create_directories(cfg_.out);
        manifest_ = Manifest{};
        manifest_.subcommand = subcommand;
        if (subcommand == "all") {
            if (cfg_.synth_in_all) {
                synth();
                use_synth_inputs();
            }
            ingest_report();
            ptr();
            schedule();
            evaluate();
            analyze();
        }
        else if (subcommand == "synth")
            synth();
        else if (subcommand == "ingest-report")
            ingest_report();
        else if (subcommand == "ptr")
            ptr();
        else if (subcommand == "schedule")
            schedule();
        else if (subcommand == "evaluate")
            evaluate();
        else if (subcommand == "analyze")
            analyze();
        else
            plot_data();
        manifest_.parameters = config_values(cfg_);
        write_text("manifest.json", manifest_.to_json().dump(2) + "\n", false);
    }

    //------------------------------------------------------------------
    // stages

    void synth() {
        log_ << "synth: generating " << cfg_.synth.users << " users\n";
        const auto out = synth::generate(cfg_.synth, cfg_.workers);
        write_text("posts.tsv", out.posts);
        write_text("reactions.tsv", out.reactions);
        write_text("edges.tsv", out.edges);
        write_text("users.tsv", out.users);
        write_text("ground_truth.tsv", out.ground_truth);
        log_ << "synth: " << out.post_count << " posts, " << out.reaction_count << " reactions\n";
    }

    //! Points the input paths at the synth stage's files.
    void use_synth_inputs() {
        cfg_.posts = (fs::path(cfg_.out) / "posts.tsv").string();
        cfg_.reactions = (fs::path(cfg_.out) / "reactions.tsv").string();
        cfg_.edges = (fs::path(cfg_.out) / "edges.tsv").string();
        cfg_.users = (fs::path(cfg_.out) / "users.tsv").string();
        cfg_.open_dataset.clear();
        if (cfg_.derivation_start < 0)
            cfg_.derivation_start = cfg_.synth.start;
        data_.reset();
    }

    void ingest_report() {
        const Dataset& d = dataset();
        std::ostringstream os;
        os << "# item\tvalue\n";
        for (const auto& r : d.reports)
            os << "file\t" << r << '\n';
        os << "users\t" << d.users.size() << '\n';
        os << "users_unknown_tz\t" << d.unknown_tz << '\n';
        os << "posts\t" << d.posts.size() << '\n';
        os << "reactions\t" << d.reactions.size() << '\n';
        os << "edges\t" << d.graph.edge_count() << '\n';
        os << "joined\t" << d.join.pairs.size() << '\n';
        os << "dangling_reactions\t" << d.join.dangling << '\n';
        os << "negative_delay_reactions\t" << d.join.negative << '\n';
        os << "duplicate_post_ids\t" << d.join.duplicate_posts << '\n';
        os << "analysis_only\t" << (d.analysis_only ? "true" : "false") << '\n';
        os << "derivation_window\t" << cfg_.derivation_window().start << '\t'
           << cfg_.derivation_window().end << '\n';
        os << "evaluation_window\t" << cfg_.evaluation_window().start << '\t'
           << cfg_.evaluation_window().end << '\n';
        write_text("ingest_report.tsv", os.str());
    }

    //! Filter estimated from pairs whose post falls in the derivation window.
    void ptr() {
        const Dataset& d = dataset();
        const auto window = cfg_.derivation_window();
        DelayHistogram h(cfg_.ptr_window, cfg_.lag_width);
        for (const auto& j : d.join.pairs)
            if (window.contains(j.pair.post_time))
                h.add(j.pair);
        const PTRFilter filter = h.to_filter();
        std::ostringstream table;
        write_filter_table(table, filter);
        write_text("ptr_filter.tsv", table.str());

        std::vector<DelayPair> pairs;
        for (const auto& j : d.join.pairs)
            if (window.contains(j.pair.post_time))
                pairs.push_back(j.pair);
        std::ostringstream q;
        q << "# p\tseconds\thh:mm\n";
        for (double p : {0.25, 0.50, 0.75, 0.90}) {
            const EpochSeconds t = time_to_fraction(pairs, p, cfg_.ptr_window);
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%.2f\t%lld\t%02lld:%02lld\n", p,
                          static_cast<long long>(t), static_cast<long long>(t / 3600),
                          static_cast<long long>(t % 3600 / 60));
            q << buf;
        }
        write_text("ptr_quantiles.tsv", q.str());

        const auto curve = h.cumulative();
        std::ostringstream c;
        c << "network,lag_end_seconds,fraction\n";
        for (std::size_t m = 0; m < curve.size(); ++m) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s,%lld,%.10g\n",
                          std::string(to_string(cfg_.network)).c_str(),
                          static_cast<long long>((static_cast<EpochSeconds>(m) + 1) * cfg_.lag_width),
                          curve[m]);
            c << buf;
        }
        write_text("cumulative_curves.csv", c.str());
        log_ << "ptr: " << h.in_window() << " delays in window, " << h.out_of_window()
             << " beyond\n";
    }

    void schedule() {
        const Dataset& d = dataset();
        if (d.analysis_only)
            throw ValidationError("reactions", "reactor ids absent; schedules need them");
        const PTRFilter filter = read_artifact_filter();
        const WeeklyGrid grid = cfg_.grid();
        const auto window = cfg_.derivation_window();
        const std::size_t n_users = d.users.size();

        auto profiles = build_profiles(d.posts, d.join.pairs, d.tz, n_users, grid, window);
        std::vector<ActionProfile> delayed(n_users);
        parallel_for(n_users, cfg_.workers, [&](std::size_t u) {
            delayed[u] = delayed_profile(profiles.reactions[u], filter);
        });
        ScheduleInputs in;
        in.graph = &d.graph;
        in.tz = d.tz;
        in.created = profiles.created;
        in.delayed = delayed;
        in.model = cfg_.model;
        in.grid = grid;
        ReceivedReactions received(d.join.pairs, window, n_users);
        const auto result = derive_all(in, received, cfg_.workers);

        std::string sched, ranked, rec;
        sched.reserve(n_users * 6 * 2000);
        char buf[64];
        for (UserId u = 0; u < n_users; ++u) {
            const auto& us = result.users[u];
            for (Provenance p : kDerivedProvenances) {
                const auto& s = us.get(p);
                if (!s)
                    continue;
                sched += d.users.name(u);
                sched += '\t';
                sched += to_string(p);
                sched += '\t';
                for (std::size_t k = 0; k < s->size(); ++k) {
                    std::snprintf(buf, sizeof(buf), k ? ",%.17g" : "%.17g", (*s)[k]);
                    sched += buf;
                }
                sched += '\n';
            }
            if (d.graph.audience(u).empty() && !us.get(Provenance::MFU))
                continue;
            const Schedule r = recommended(us, grid.size());
            rec += d.users.name(u) + "\t" + std::string(to_string(r.provenance())) + "\n";
            const auto top = top_k_times(r, cfg_.ranks, cfg_.eval_days, grid);
            for (std::size_t i = 0; i < top.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "\t%.10g\n", top[i].probability);
                ranked += d.users.name(u) + "\t" + std::to_string(i + 1) + "\t" +
                          std::to_string(top[i].bucket) + "\t" + grid.label(top[i].bucket) + buf;
            }
        }
        write_text("schedules.tsv", sched);
        write_text("recommended.tsv", rec);
        write_text("ranked_times.tsv", ranked);
    }

    void evaluate() {
        const Dataset& d = dataset();
        const auto schedules = read_artifact_schedules(d);
        EvaluationWindow ew{cfg_.evaluation_window(), cfg_.attribution};
        ew.validate_against(cfg_.derivation_window());
        UsageAudit audit;
        const auto outcomes = collect_outcomes(d.posts, d.join.pairs, d.tz, d.users.size(),
                                               cfg_.grid(), ew, &audit);
        if (!audit.inside(ew.span))
            throw Error("evaluation used events outside its window");
        EvaluationOptions opts;
        opts.max_rank = cfg_.ranks;
        opts.days = cfg_.eval_days;
        opts.grid = cfg_.grid();
        const auto report = evaluate_schedules(schedules, outcomes, opts);
        bool any = false;
        for (const auto& s : report.schedules)
            any = any || s.evaluated_users > 0;
        if (!any)
            throw Error("evaluation is empty: no user has held-out posts and a schedule");
        std::ostringstream tsv, csv;
        write_gain_tsv(tsv, report);
        write_gain_csv(csv, report);
        write_text("gain.tsv", tsv.str());
        write_text("gain_by_rank.csv", csv.str());
        for (const auto& s : report.schedules)
            log_ << "evaluate: " << to_string(s.kind) << " users=" << s.evaluated_users
                 << " zero_rpm_excluded=" << s.zero_rpm_users
                 << " no_schedule=" << s.missing_schedule << '\n';
    }

    //! City cohorts of S1 series, and pairwise metric distributions.
    void analyze() {
        const Dataset& d = dataset();
        const auto schedules = read_artifact_schedules(d);
        const WeeklyGrid grid = cfg_.grid();
        std::map<std::string, std::vector<UserId>> by_city;
        for (const auto& m : d.meta)
            if (!m.city.empty() && m.user < schedules.size() &&
                schedules[m.user].get(Provenance::S1))
                by_city[m.city].push_back(m.user);
        if (by_city.empty())
            throw Error("analysis is empty: no user with a city and an S1 schedule");

        std::vector<Cohort> cohorts;
        std::vector<std::vector<std::span<const double>>> series;
        for (const auto& [city, members] : by_city) {
            std::vector<CohortMember> cm;
            std::vector<std::span<const double>> raw;
            for (UserId u : members) {
                cm.push_back({schedules[u].get(Provenance::S1)->probabilities(), d.tz[u]});
                raw.push_back(schedules[u].get(Provenance::S1)->probabilities());
            }
            cohorts.push_back(cohort_aggregate(std::string(to_string(cfg_.network)) + ":" + city,
                                               cm, grid));
            series.push_back(std::move(raw));
        }
        std::ostringstream cs;
        write_cohort_csv(cs, cohorts);
        write_text("cohort_series.csv", cs.str());

        std::vector<LabeledDistribution> dists;
        std::uint64_t stream = 0;
        for (std::size_t i = 0; i < cohorts.size(); ++i)
            for (std::size_t j = i; j < cohorts.size(); ++j)
                for (Metric m : {Metric::Correlation, Metric::Cosine}) {
                    const std::string label = cohorts[i].label + "~" + cohorts[j].label;
                    try {
                        dists.push_back({label, pairwise_distribution(
                                                    series[i], series[j], m, cfg_.sample_budget,
                                                    cfg_.seed * 1000003ULL + stream++,
                                                    cfg_.bin_width)});
                    }
                    catch (const NoSignal& e) {
                        log_ << "analyze: " << label << " " << to_string(m) << ": " << e.what()
                             << '\n';
                    }
                }
        std::ostringstream ds;
        write_distribution_csv(ds, dists);
        write_text("metric_distributions.csv", ds.str());
    }

    //! Checks that every figure's CSV exists, naming the stage that makes it.
    void plot_data() {
        const std::vector<std::pair<std::string, std::string>> families = {
            {"cumulative_curves.csv", "ptr"},
            {"gain_by_rank.csv", "evaluate"},
            {"cohort_series.csv", "analyze"},
            {"metric_distributions.csv", "analyze"}};
        for (const auto& [file, stage] : families) {
            const fs::path p = fs::path(cfg_.out) / file;
            if (!fs::exists(p))
                throw MissingArtifact(file, stage);
            manifest_.outputs[file] = file_digest(p.string());
        }
    }

    //------------------------------------------------------------------

    const Dataset& dataset() {
        if (!data_)
            data_ = load_dataset();
        return *data_;
    }

    //! Reads schedules.tsv back into per-user schedule sets.
    std::vector<UserSchedules> read_artifact_schedules(const Dataset& d) {
        const fs::path p = fs::path(cfg_.out) / "schedules.tsv";
        if (!fs::exists(p))
            throw MissingArtifact("schedules.tsv", "schedule");
        const std::string text = tsv::read_file(p.string());
        manifest_.inputs[p.string()] = sha256_hex(text);
        std::vector<UserSchedules> out(d.users.size());
        const std::size_t n = cfg_.grid().size();
        std::vector<std::string_view> f;
        tsv::for_each_line(text, [&](std::string_view line) {
            if (line.empty() || line.front() == '#')
                return;
            if (tsv::split_fields(line, f) != 3)
                throw IoError("schedules.tsv: malformed line");
            auto u = d.users.find(f[0]);
            if (!u)
                throw IoError("schedules.tsv: unknown user " + std::string(f[0]));
            std::vector<double> probs;
            probs.reserve(n);
            std::string_view rest = f[2];
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                probs.push_back(std::strtod(std::string(rest.substr(0, comma)).c_str(), nullptr));
                if (comma == std::string_view::npos)
                    break;
                rest.remove_prefix(comma + 1);
            }
            if (probs.size() != n)
                throw IoError("schedules.tsv: expected " + std::to_string(n) + " probabilities");
            out[*u].get(parse_provenance(f[1])) = Schedule(parse_provenance(f[1]), std::move(probs));
        });
        return out;
    }

private:
    PTRFilter read_artifact_filter() {
        const fs::path p = fs::path(cfg_.out) / "ptr_filter.tsv";
        if (!fs::exists(p))
            throw MissingArtifact("ptr_filter.tsv", "ptr");
        const std::string text = tsv::read_file(p.string());
        manifest_.inputs[p.string()] = sha256_hex(text);
        std::istringstream is(text);
        PTRFilter f = read_filter_table(is);
        if (f.lag_width() != cfg_.bucket_width)
            throw ValidationError("lag_width", "ptr_filter.tsv lag width differs from bucket_width");
        return f;
    }

    static GainReport evaluate_schedules(std::span<const UserSchedules> s,
                                         std::span<const UserOutcomes> o,
                                         const EvaluationOptions& opts) {
        return besttime::evaluate(s, o, kDerivedProvenances, opts);
    }

    std::string read_input(const std::string& key, const std::string& path) {
        if (path.empty())
            throw ValidationError(key, "input path not set");
        if (!fs::exists(path))
            throw ValidationError(key, "file does not exist: " + path);
        std::string text = tsv::read_file(path);
        manifest_.inputs[path] = sha256_hex(text);
        return text;
    }

    Dataset load_dataset() {
        Dataset d;
        LoadOptions opts;
        opts.network = cfg_.network;
        opts.workers = cfg_.workers;
        opts.max_malformed_fraction = cfg_.max_malformed_fraction;
        if (!cfg_.open_dataset.empty()) {
            auto o = parse_open_dataset(read_input("open_dataset", cfg_.open_dataset),
                                        cfg_.network, d.users, opts, cfg_.open_dataset);
            d.posts = std::move(o.posts);
            d.reactions = std::move(o.reactions);
            d.reports.push_back(o.report);
            d.analysis_only = true;
        }
        else {
            auto p = parse_posts(read_input("posts", cfg_.posts), d.users, opts, cfg_.posts);
            auto r = parse_reactions(read_input("reactions", cfg_.reactions), d.users, opts,
                                     cfg_.reactions);
            d.posts = std::move(p.records);
            d.reactions = std::move(r.records);
            d.reports.push_back(p.report);
            d.reports.push_back(r.report);
            for (const auto& rr : d.reactions)
                if (rr.reactor == kNoUser) {
                    d.analysis_only = true;
                    break;
                }
        }
        if (!cfg_.edges.empty()) {
            auto g = parse_graph(read_input("edges", cfg_.edges), d.users, opts,
                                 is_bidirectional(cfg_.network), cfg_.edges);
            d.graph = std::move(g.graph);
            d.reports.push_back(g.report);
        }
        if (!cfg_.users.empty()) {
            auto u = parse_users(read_input("users", cfg_.users), d.users, opts, cfg_.users);
            d.meta = std::move(u.records);
            d.reports.push_back(u.report);
        }
        d.graph.grow(d.users.size());
        for (const auto& m : d.meta)
            d.unknown_tz += m.tz_known ? 0 : 1;
        d.tz = tz_table(d.meta, d.users.size());
        d.join = join_reactions(d.posts, d.reactions);

        if (cfg_.derivation_start < 0) {
            if (d.posts.empty())
                throw ValidationError("derivation_start", "cannot infer from an empty post log");
            EpochSeconds first = d.posts.front().created_at;
            for (const auto& p : d.posts)
                first = std::min(first, p.created_at);
            cfg_.derivation_start = first - ((first % kDaySeconds) + kDaySeconds) % kDaySeconds;
            cfg_.validate();
        }
        return d;
    }

    void write_text(const std::string& name, const std::string& text, bool record = true) {
        const fs::path p = fs::path(cfg_.out) / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + p.string());
        out << text;
        if (!out)
            throw IoError("error writing " + p.string());
        if (record)
            manifest_.outputs[name] = sha256_hex(text);
    }

    RunConfig cfg_;
    std::ostream& log_;
    Manifest manifest_;
    std::optional<Dataset> data_;
};

} // namespace besttime
