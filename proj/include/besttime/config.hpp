// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration: plain key=value lines, '#' comments.

#pragma once

#include <besttime/error.hpp>
#include <besttime/evaluation.hpp>
#include <besttime/grid.hpp>
#include <besttime/ingestion.hpp>
#include <besttime/schedules.hpp>
#include <besttime/synthgen.hpp>
#include <besttime/tsv.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace besttime {

struct RunConfig
{
    // inputs
    std::string posts;
    std::string reactions;
    std::string edges;
    std::string users;
    std::string open_dataset; //!< optional timestamp dump, see parse_open_dataset

    Network network = Network::TW;

    // windows; a start of -1 means "infer"
    EpochSeconds derivation_start = -1;
    int derivation_days = 63;
    EpochSeconds evaluation_start = -1; //!< -1: right after the derivation window
    int evaluation_days = 56;

    EpochSeconds bucket_width = 900;
    EpochSeconds ptr_window = kDaySeconds;
    EpochSeconds lag_width = 900;
    VisibilityModel model;
    std::size_t ranks = 32;
    DayFilter eval_days = DayFilter::Weekday;
    EpochSeconds attribution = kDaySeconds;

    std::size_t sample_budget = 100000;
    double bin_width = 0.05;
    double max_malformed_fraction = 0.01;

    std::string out = "out";
    std::uint64_t seed = 1;
    std::size_t workers = 1;

    // synthetic data, used by the synth stage
    bool synth_in_all = false;
    synth::SynthConfig synth;

    TimeWindow derivation_window() const {
        return TimeWindow::days(derivation_start, derivation_days);
    }

    TimeWindow evaluation_window() const {
        const EpochSeconds s =
            evaluation_start >= 0 ? evaluation_start : derivation_window().end;
        return TimeWindow::days(s, evaluation_days);
    }

    WeeklyGrid grid() const { return WeeklyGrid(bucket_width); }

    //! Checks value ranges and window disjointness. File existence is
    //! checked by the stages that read them.
    void validate() const {
        WeeklyGrid{bucket_width};
        if (derivation_days <= 0)
            throw ValidationError("derivation_days", "must be > 0");
        if (evaluation_days <= 0)
            throw ValidationError("evaluation_days", "must be > 0");
        if (derivation_start >= 0) {
            const auto d = derivation_window();
            const auto e = evaluation_window();
            if (d.overlaps(e))
                throw ValidationError("derivation_window/evaluation_window",
                                      "derivation_window and evaluation_window overlap");
        }
        lag_count(ptr_window, lag_width);
        if (lag_width != bucket_width)
            throw ValidationError("lag_width", "must equal bucket_width");
        model.validate();
        if (ranks == 0)
            throw ValidationError("ranks", "must be >= 1");
        if (!(bin_width > 0.0 && bin_width <= 2.0))
            throw ValidationError("bin_width", "must lie in (0, 2]");
        if (!(max_malformed_fraction >= 0.0 && max_malformed_fraction <= 1.0))
            throw ValidationError("max_malformed_fraction", "must lie in [0, 1]");
        if (workers == 0)
            throw ValidationError("workers", "must be >= 1");
        if (attribution <= 0)
            throw ValidationError("attribution", "must be > 0");
    }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
        std::istringstream is(v);
        is >> out;
        if (!is || !is.eof())
            throw ValidationError(key, "not a number: '" + v + "'");
    }
    else {
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
            throw ValidationError(key, "not an integer: '" + v + "'");
    }
    return out;
}

inline std::string fmt_double(double d) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    return buf;
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i)
            s += ',';
        if constexpr (std::is_floating_point_v<T>)
            s += fmt_double(xs[i]);
        else if constexpr (std::is_same_v<T, std::string>)
            s += xs[i];
        else
            s += std::to_string(xs[i]);
    }
    return s;
}

template <typename T>
std::vector<T> split_list(const std::string& key, const std::string& v) {
    std::vector<T> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        std::size_t comma = v.find(',', pos);
        if (comma == std::string::npos)
            comma = v.size();
        std::string item = v.substr(pos, comma - pos);
        if constexpr (std::is_same_v<T, std::string>)
            out.push_back(item);
        else
            out.push_back(parse_number<T>(key, item));
        pos = comma + 1;
    }
    return out;
}

struct Field
{
    std::string key;
    std::string help;
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

inline std::string day_filter_name(DayFilter f) {
    return f == DayFilter::All ? "all" : f == DayFilter::Weekday ? "weekday" : "weekend";
}

} // namespace detail

//! Every configurable key, in a stable order.
inline std::vector<detail::Field> config_fields(RunConfig& c) {
    using detail::Field;
    using detail::fmt_double;
    using detail::parse_number;
    std::vector<Field> f;
    auto str = [&](const char* key, std::string& ref, const char* help) {
        f.push_back({key, help, [&ref] { return ref; }, [&ref](const std::string& v) { ref = v; }});
    };
    auto i64 = [&](const char* key, auto& ref, const char* help) {
        using T = std::remove_reference_t<decltype(ref)>;
        f.push_back({key, help, [&ref] { return std::to_string(ref); },
                     [&ref, key](const std::string& v) { ref = parse_number<T>(key, v); }});
    };
    auto dbl = [&](const char* key, double& ref, const char* help) {
        f.push_back({key, help, [&ref] { return fmt_double(ref); },
                     [&ref, key](const std::string& v) { ref = parse_number<double>(key, v); }});
    };
    str("posts", c.posts, "posts.tsv path");
    str("reactions", c.reactions, "reactions.tsv path");
    str("edges", c.edges, "edges.tsv path");
    str("users", c.users, "users.tsv path");
    str("open_dataset", c.open_dataset, "timestamp dump (author, post time, reaction times)");
    f.push_back({"network", "TW, FB, FP or GP",
                 [&c] { return std::string(to_string(c.network)); },
                 [&c](const std::string& v) {
                     auto n = parse_network(v);
                     if (!n)
                         throw ValidationError("network", "unknown network '" + v + "'");
                     c.network = *n;
                 }});
    i64("derivation_start", c.derivation_start, "epoch seconds; -1 infers from the earliest post");
    i64("derivation_days", c.derivation_days, "default 63");
    i64("evaluation_start", c.evaluation_start, "epoch seconds; -1 follows the derivation window");
    i64("evaluation_days", c.evaluation_days, "default 56");
    i64("bucket_width", c.bucket_width, "seconds, default 900 (672 buckets per week)");
    i64("ptr_window", c.ptr_window, "delay filter window in seconds, default 86400");
    i64("lag_width", c.lag_width, "delay filter lag in seconds, default 900");
    dbl("alpha", c.model.alpha, "visibility slope, default 1.0");
    dbl("beta", c.model.beta, "visibility intercept, default 1.0");
    i64("ranks", c.ranks, "evaluated ranks K, default 32");
    f.push_back({"eval_days", "weekday (default), weekend or all",
                 [&c] { return detail::day_filter_name(c.eval_days); },
                 [&c](const std::string& v) {
                     if (v == "weekday") c.eval_days = DayFilter::Weekday;
                     else if (v == "weekend") c.eval_days = DayFilter::Weekend;
                     else if (v == "all") c.eval_days = DayFilter::All;
                     else throw ValidationError("eval_days", "expected weekday, weekend or all");
                 }});
    i64("attribution", c.attribution, "seconds after a post that reactions count, default 86400");
    i64("sample_budget", c.sample_budget, "pairs sampled per cohort comparison");
    dbl("bin_width", c.bin_width, "metric histogram bin width");
    dbl("max_malformed_fraction", c.max_malformed_fraction, "per input file");
    str("out", c.out, "output directory");
    i64("seed", c.seed, "random seed");
    i64("workers", c.workers, "worker threads");

    f.push_back({"synth.in_all", "run synth first in 'all' and read its files",
                 [&c] { return std::string(c.synth_in_all ? "true" : "false"); },
                 [&c](const std::string& v) {
                     if (v != "true" && v != "false")
                         throw ValidationError("synth.in_all", "expected true or false");
                     c.synth_in_all = v == "true";
                 }});
    auto& s = c.synth;
    i64("synth.users", s.users, "synthetic users");
    i64("synth.start", s.start, "span start, epoch seconds");
    i64("synth.span_days", s.span_days, "observation span in days");
    i64("synth.followers_min", s.followers_min, "fewest followers per user");
    i64("synth.followers_max", s.followers_max, "most followers per user");
    i64("synth.communities", s.communities, "communities with distinct peaks");
    dbl("synth.homophily", s.homophily, "chance a follower shares the author's community");
    f.push_back({"synth.community_peaks", "comma-separated peak buckets",
                 [&s] { return detail::join_list(s.community_peaks); },
                 [&s](const std::string& v) {
                     s.community_peaks = v.empty() ? std::vector<std::size_t>{}
                                                   : detail::split_list<std::size_t>(
                                                         "synth.community_peaks", v);
                 }});
    i64("synth.peak_width", s.peak_width, "buckets per peak");
    dbl("synth.peak_rate", s.peak_rate, "posts per peak bucket per week");
    dbl("synth.base_rate", s.base_rate, "posts per other bucket per week");
    f.push_back({"synth.kernel", "comma-separated delay mass per lag",
                 [&s] { return detail::join_list(s.kernel); },
                 [&s](const std::string& v) {
                     s.kernel = detail::split_list<double>("synth.kernel", v);
                 }});
    dbl("synth.reaction_prob", s.reaction_prob, "base reaction probability per follower");
    f.push_back({"synth.tz_offsets", "comma-separated minutes, by community",
                 [&s] { return detail::join_list(s.tz_offsets); },
                 [&s](const std::string& v) {
                     s.tz_offsets = detail::split_list<int>("synth.tz_offsets", v);
                 }});
    f.push_back({"synth.cities", "comma-separated labels, by community",
                 [&s] { return detail::join_list(s.cities); },
                 [&s](const std::string& v) {
                     s.cities = detail::split_list<std::string>("synth.cities", v);
                 }});
    return f;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    for (auto& f : config_fields(c))
        if (f.key == key) {
            f.set(value);
            return;
        }
    throw ValidationError(key, "unknown configuration key");
}

inline std::vector<std::pair<std::string, std::string>> config_values(const RunConfig& c) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto& f : config_fields(const_cast<RunConfig&>(c)))
        out.emplace_back(f.key, f.get());
    return out;
}

inline void parse_config_text(RunConfig& c, const std::string& text) {
    std::size_t lineno = 0;
    tsv::for_each_line(text, [&](std::string_view raw) {
        ++lineno;
        auto trim = [](std::string_view s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
                s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
                s.remove_suffix(1);
            return s;
        };
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#')
            return;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ValidationError("config", "line " + std::to_string(lineno) + ": expected key=value");
        set_config_value(c, std::string(trim(line.substr(0, eq))),
                         std::string(trim(line.substr(eq + 1))));
    });
}

inline RunConfig load_config(const std::string& path) {
    RunConfig c;
    parse_config_text(c, tsv::read_file(path));
    return c;
}

inline std::string config_text(const RunConfig& c) {
    std::string s;
    for (const auto& [k, v] : config_values(c))
        s += k + "=" + v + "\n";
    return s;
}

} // namespace besttime
