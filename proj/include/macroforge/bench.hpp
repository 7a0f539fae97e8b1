#pragma once

#include <atomic>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "macroforge/generators.hpp"
#include "macroforge/macros.hpp"
#include "macroforge/mining.hpp"
#include "macroforge/search.hpp"
#include "macroforge/strips.hpp"

namespace macroforge {

// Wall-clock readings below this are clamped up to it before scoring, so a
// sub-resolution T* cannot blow up the quotient.
constexpr double kClockResolutionSeconds = 1e-3;

// IPC time score T*/T for a solved run. The unsolved case scores 0 on both
// metrics and is handled by score_run / compute_scores.
inline double time_score(double best_seconds, double seconds) {
    best_seconds = std::max(best_seconds, kClockResolutionSeconds);
    seconds = std::max(seconds, kClockResolutionSeconds);
    return best_seconds / seconds;
}

// IPC quality score Q*/Q for a solved run.
inline double quality_score(int best_cost, int cost) {
    return static_cast<double>(best_cost) / static_cast<double>(cost);
}

struct Scores {
    double time = 0;
    double quality = 0;
};

inline Scores score_run(bool solved, double best_seconds, double seconds,
                        int best_cost, int cost) {
    if (!solved)
        return {0, 0};
    return {time_score(best_seconds, seconds), quality_score(best_cost, cost)};
}

// Relative gain of a candidate aggregate over the baseline aggregate, in
// percent. Undefined (nullopt) when the baseline aggregate is zero.
inline std::optional<double> gain_pct(double baseline_sum, double candidate_sum) {
    if (baseline_sum == 0)
        return std::nullopt;
    return (candidate_sum - baseline_sum) / baseline_sum * 100.0;
}

constexpr const char* kBaselineConfig = "baseline";
constexpr const char* kEnhancedConfig = "enhanced";

struct RunRecord {
    double minsup = 0;  // the sweep point this row belongs to
    std::string problem;
    std::string config;  // "baseline" | "enhanced"
    Outcome outcome = Outcome::unsolvable;
    int cost = -1;  // meaningful iff solved
    double seconds = 0;
    std::uint64_t expanded = 0;
    double time_score = 0;
    double quality_score = 0;
    std::uint64_t macro_applications = 0;  // not serialized
};

struct ReferenceValues {
    double best_seconds = 0;
    int best_cost = 0;
};

// Fills per-run scores from the references T*, Q*: the best values among
// all evaluated configurations of each problem, baseline included. Returns
// the references; problems no configuration solved have none and all their
// rows score 0.
inline std::map<std::string, ReferenceValues> compute_scores(std::vector<RunRecord>& records) {
    std::map<std::string, ReferenceValues> refs;
    for (const auto& r : records) {
        if (r.outcome != Outcome::solved)
            continue;
        auto [it, inserted] = refs.try_emplace(r.problem, ReferenceValues{r.seconds, r.cost});
        if (!inserted) {
            it->second.best_seconds = std::min(it->second.best_seconds, r.seconds);
            it->second.best_cost = std::min(it->second.best_cost, r.cost);
        }
    }
    for (auto& r : records) {
        if (r.outcome != Outcome::solved) {
            r.time_score = 0;
            r.quality_score = 0;
            continue;
        }
        const ReferenceValues& ref = refs.at(r.problem);
        Scores s = score_run(true, ref.best_seconds, r.seconds, ref.best_cost, r.cost);
        r.time_score = s.time;
        r.quality_score = s.quality;
    }
    return refs;
}

namespace bench_detail {

template <typename F>
void parallel_for(std::size_t n, int jobs, F f) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
            f(i);
    };
    std::vector<std::thread> threads;
    int spawn = std::min<int>(jobs, static_cast<int>(n));
    threads.reserve(spawn);
    for (int t = 0; t < spawn; ++t)
        threads.emplace_back(worker);
    for (auto& t : threads)
        t.join();
}

inline std::string format_minsup(double minsup) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", minsup);
    return buf;
}

inline std::string format_fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string format_general(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string timestamp_line() {
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
    return std::string("# generated: ") + stamp + "\n";
}

}  // namespace bench_detail

// A named, grounded test problem.
struct Instance {
    std::string name;
    GroundTask task;
};

/*
  A training/test split over one domain. Desk-scale defaults are 50 training
  and 20 test problems; the sets are generated from disjoint seed streams
  and verified disjoint by file identity.
*/
struct BenchmarkSuite {
    std::string domain_name;
    std::vector<Instance> training;
    std::vector<Instance> tests;
    std::uint64_t seed = 0;
};

inline BenchmarkSuite generate_suite(BenchDomain which, const GenParams& params,
                                     std::uint64_t seed, int training_count = 50,
                                     int test_count = 20) {
    Domain domain = parse_domain(domain_pddl(which));
    BenchmarkSuite suite;
    suite.domain_name = bench_domain_name(which);
    suite.seed = seed;
    std::set<std::string> training_texts;
    for (const auto& generated : generate_problems(which, params, training_count, seed)) {
        training_texts.insert(generated.pddl);
        suite.training.push_back({generated.name,
                                  ground(domain, parse_problem(generated.pddl, domain))});
    }
    // Disjoint seed stream for the test set; file identity checked anyway.
    std::uint64_t test_seed = seed ^ 0x517cc1b727220a95ull;
    for (const auto& generated : generate_problems(which, params, test_count, test_seed)) {
        if (training_texts.count(generated.pddl))
            throw std::runtime_error("training/test overlap on " + generated.name);
        suite.tests.push_back({generated.name,
                               ground(domain, parse_problem(generated.pddl, domain))});
    }
    return suite;
}

struct CorpusBuild {
    std::vector<std::string> plan_names;  // problems that were solved
    std::vector<Plan> plans;
    std::vector<std::string> unsolved;
    SequenceDatabase db;
};

// Solves the training problems with the baseline search and builds the
// sequence database from the solved subset. Unsolved problems are excluded
// and reported; an empty solved set is a hard error.
inline CorpusBuild build_corpus(const std::vector<Instance>& training,
                                const SearchLimits& limits, bool use_ff = true, int jobs = 1) {
    std::vector<SearchResult> results(training.size());
    bench_detail::parallel_for(training.size(), jobs, [&](std::size_t i) {
        if (use_ff)
            results[i] = astar(training[i].task, FFHeuristic(training[i].task), limits);
        else
            results[i] = astar(training[i].task, ZeroHeuristic{}, limits);
    });

    CorpusBuild corpus;
    for (std::size_t i = 0; i < training.size(); ++i) {
        if (results[i].outcome == Outcome::solved) {
            corpus.plan_names.push_back(training[i].name);
            corpus.plans.push_back(std::move(results[i].plan));
        } else {
            corpus.unsolved.push_back(training[i].name);
        }
    }
    // The database takes the non-empty plans only; a zero-step plan carries
    // no sequence information.
    std::vector<Plan> db_plans;
    std::vector<std::string> db_names;
    for (std::size_t i = 0; i < corpus.plans.size(); ++i) {
        if (!corpus.plans[i].steps.empty()) {
            db_plans.push_back(corpus.plans[i]);
            db_names.push_back(corpus.plan_names[i]);
        }
    }
    if (db_plans.empty())
        throw std::runtime_error("empty corpus: no training problem produced a non-empty plan");
    corpus.db = build_sequence_db(db_plans, db_names);
    return corpus;
}

struct SweepConfig {
    double minsup_start = 0.01;
    double minsup_step = 0.01;
    double minsup_end = 1.0;
    int max_pattern_length = 0;
    SearchLimits limits;
    bool use_ff = true;
    MacroSuccessors successors = MacroSuccessors::all;
    int jobs = 1;
    std::string domain_name = "domain";
};

struct GainRow {
    double minsup = 0;
    int patterns = 0;  // mined maximal patterns at this support; -1 = unknown
    double baseline_time_sum = 0, enhanced_time_sum = 0;
    double baseline_quality_sum = 0, enhanced_quality_sum = 0;
    std::optional<double> time_gain;
    std::optional<double> quality_gain;
};

struct SweepResult {
    std::vector<RunRecord> records;  // scored; one row per (minsup, problem, config)
    std::vector<GainRow> gains;      // one row per evaluated sweep point
    std::string stop_reason;
};

namespace bench_detail {

inline RunRecord record_of(double minsup, const std::string& problem, const char* config,
                           const SearchResult& r) {
    RunRecord rec;
    rec.minsup = minsup;
    rec.problem = problem;
    rec.config = config;
    rec.outcome = r.outcome;
    rec.cost = r.outcome == Outcome::solved ? r.plan.cost() : -1;
    rec.seconds = r.seconds;
    rec.expanded = r.expanded;
    rec.macro_applications = r.macro_applications;
    return rec;
}

inline std::vector<GainRow> gains_from_records(const std::vector<RunRecord>& records,
                                               const std::vector<std::pair<double, int>>& points) {
    std::vector<GainRow> gains;
    for (const auto& [minsup, patterns] : points) {
        GainRow row;
        row.minsup = minsup;
        row.patterns = patterns;
        for (const auto& r : records) {
            if (r.minsup != minsup)
                continue;
            if (r.config == kBaselineConfig) {
                row.baseline_time_sum += r.time_score;
                row.baseline_quality_sum += r.quality_score;
            } else {
                row.enhanced_time_sum += r.time_score;
                row.enhanced_quality_sum += r.quality_score;
            }
        }
        row.time_gain = gain_pct(row.baseline_time_sum, row.enhanced_time_sum);
        row.quality_gain = gain_pct(row.baseline_quality_sum, row.enhanced_quality_sum);
        gains.push_back(row);
    }
    return gains;
}

}  // namespace bench_detail

/*
  The support sweep: mine at minsup = start, start + step, ... until the
  miner returns no patterns or the range ends; at every point run the
  macro-enhanced search on each test problem against the baseline. Mining is
  resolved for all points first (it is cheap and the stop condition depends
  on it alone), then the searches run, optionally in parallel; results are
  deterministic either way, only the timing columns vary.
*/
inline SweepResult sweep(const std::vector<Instance>& tests, const SequenceDatabase& corpus,
                         const SweepConfig& cfg) {
    if (tests.empty())
        throw std::invalid_argument("sweep: no test problems");
    if (cfg.minsup_start <= 0 || cfg.minsup_start > 1 || cfg.minsup_step <= 0
        || cfg.minsup_end > 1)
        throw std::invalid_argument("sweep: minsup range must stay in (0, 1]");

    SweepResult result;

    // Sweep points and their mined pattern sets.
    std::vector<std::pair<double, std::vector<Pattern>>> points;
    result.stop_reason = "range end";
    for (int k = 0;; ++k) {
        double minsup = cfg.minsup_start + k * cfg.minsup_step;
        if (minsup > cfg.minsup_end + 1e-12)
            break;
        MiningConfig mining{minsup, cfg.max_pattern_length};
        auto patterns = mine_maximal(corpus, mining);
        if (patterns.empty()) {
            result.stop_reason =
                "no sequences at minsup=" + bench_detail::format_minsup(minsup);
            break;
        }
        points.emplace_back(minsup, std::move(patterns));
    }

    // Baseline once per problem.
    std::vector<SearchResult> baseline(tests.size());
    bench_detail::parallel_for(tests.size(), cfg.jobs, [&](std::size_t i) {
        if (cfg.use_ff)
            baseline[i] = astar(tests[i].task, FFHeuristic(tests[i].task), cfg.limits);
        else
            baseline[i] = astar(tests[i].task, ZeroHeuristic{}, cfg.limits);
    });

    // Enhanced runs across (point, problem).
    std::vector<SearchResult> enhanced(points.size() * tests.size());
    bench_detail::parallel_for(enhanced.size(), cfg.jobs, [&](std::size_t i) {
        std::size_t point = i / tests.size();
        std::size_t test = i % tests.size();
        MacroLibrary library =
            encode_macros(points[point].second, corpus.dictionary, tests[test].task);
        library.minsup = points[point].first;
        if (cfg.use_ff) {
            enhanced[i] = enhanced_astar(tests[test].task, library,
                                         FFHeuristic(tests[test].task), cfg.limits,
                                         cfg.successors);
        } else {
            enhanced[i] = enhanced_astar(tests[test].task, library, ZeroHeuristic{},
                                         cfg.limits, cfg.successors);
        }
    });

    std::vector<std::pair<double, int>> gain_points;
    for (std::size_t point = 0; point < points.size(); ++point) {
        double minsup = points[point].first;
        gain_points.emplace_back(minsup, static_cast<int>(points[point].second.size()));
        for (std::size_t test = 0; test < tests.size(); ++test) {
            result.records.push_back(bench_detail::record_of(
                minsup, tests[test].name, kBaselineConfig, baseline[test]));
            result.records.push_back(bench_detail::record_of(
                minsup, tests[test].name, kEnhancedConfig,
                enhanced[point * tests.size() + test]));
        }
    }

    compute_scores(result.records);
    result.gains = bench_detail::gains_from_records(result.records, gain_points);
    return result;
}

// Scores plus gain aggregates for an arbitrary record set (the score stage;
// sweep computes the same thing with the mined pattern counts attached).
struct ScoreReport {
    std::map<std::string, ReferenceValues> references;  // per problem: T*, Q*
    std::vector<GainRow> gains;                         // per minsup: aggregates and gains
};

inline ScoreReport score_records(std::vector<RunRecord>& records) {
    ScoreReport report;
    report.references = compute_scores(records);
    std::vector<std::pair<double, int>> points;
    for (const auto& r : records) {
        bool seen = false;
        for (const auto& [minsup, patterns] : points) {
            if (minsup == r.minsup) {
                seen = true;
                break;
            }
            (void)patterns;
        }
        if (!seen)
            points.emplace_back(r.minsup, -1);
    }
    report.gains = bench_detail::gains_from_records(records, points);
    return report;
}

// ---- report files -------------------------------------------------------

constexpr const char* kReportHeader =
    "minsup,problem,config,outcome,cost,seconds,expanded,time_score,quality_score";

inline void write_report_csv(std::ostream& out, const std::vector<RunRecord>& records,
                             const std::string& domain_name, bool with_timestamp = true) {
    using namespace bench_detail;
    out << "# macroforge run report: " << domain_name << "\n";
    if (with_timestamp)
        out << timestamp_line();
    out << "# scoring: IPC time score T*/T and quality score Q*/Q; unsolved runs score 0 on both\n"
        << "# references: T*/Q* are the best values among the evaluated configurations, baseline included\n"
        << kReportHeader << "\n";
    for (const auto& r : records) {
        out << format_minsup(r.minsup) << ',' << r.problem << ',' << r.config << ','
            << outcome_name(r.outcome) << ','
            << (r.outcome == Outcome::solved ? std::to_string(r.cost) : "") << ','
            << format_fixed(r.seconds) << ',' << r.expanded << ','
            << format_fixed(r.time_score) << ',' << format_fixed(r.quality_score) << "\n";
    }
}

inline std::vector<RunRecord> read_records_csv(std::istream& in) {
    std::vector<RunRecord> records;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = line.find(',', pos);
            fields.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        if (!header_seen) {
            if (fields.size() < 7 || fields[0] != "minsup")
                throw FormatError("expected the report header row", line_no);
            header_seen = true;
            continue;
        }
        if (fields.size() < 7)
            throw FormatError("expected at least 7 fields", line_no);
        RunRecord r;
        try {
            r.minsup = std::stod(fields[0]);
            r.problem = fields[1];
            r.config = fields[2];
            std::string outcome = fields[3];
            if (outcome == "solved")
                r.outcome = Outcome::solved;
            else if (outcome == "unsolvable")
                r.outcome = Outcome::unsolvable;
            else if (outcome == "timeout")
                r.outcome = Outcome::timeout;
            else if (outcome == "memory-out")
                r.outcome = Outcome::memory_out;
            else
                throw FormatError("unknown outcome: " + outcome, line_no);
            r.cost = fields[4].empty() ? -1 : std::stoi(fields[4]);
            r.seconds = std::stod(fields[5]);
            r.expanded = std::stoull(fields[6]);
        } catch (const FormatError&) {
            throw;
        } catch (const std::exception&) {
            throw FormatError("malformed record", line_no);
        }
        if (r.outcome == Outcome::solved && r.cost < 0)
            throw FormatError("solved record without a cost", line_no);
        records.push_back(std::move(r));
    }
    if (!header_seen)
        throw FormatError("no header row found", 0);
    return records;
}

inline void write_gains_csv(std::ostream& out, const std::vector<GainRow>& gains,
                            const std::string& stop_reason, bool with_timestamp = true) {
    using namespace bench_detail;
    out << "# macroforge sweep gains\n";
    if (with_timestamp)
        out << timestamp_line();
    out << "# gain: (sum(enhanced) - sum(baseline)) / sum(baseline) * 100 over aggregate IPC scores\n"
        << "# unsolved runs score 0 on both metrics; 'undefined' marks a zero baseline aggregate\n"
        << "# patterns: mined maximal patterns at that support (-1 = unknown)\n"
        << "minsup,patterns,time_gain_pct,quality_gain_pct\n";
    for (const auto& g : gains) {
        out << format_minsup(g.minsup) << ',' << g.patterns << ','
            << (g.time_gain ? format_general(*g.time_gain) : "undefined") << ','
            << (g.quality_gain ? format_general(*g.quality_gain) : "undefined") << "\n";
    }
    if (!stop_reason.empty())
        out << "# stop_reason: " << stop_reason << "\n";
}

// Two-column gnuplot data, support in percent against gain in percent.
inline void write_plot_file(std::ostream& out, const std::string& domain_name,
                            const std::string& metric, const std::vector<GainRow>& gains) {
    using namespace bench_detail;
    out << "# " << domain_name << ": " << metric << " gain vs support\n"
        << "# support_pct gain_pct\n";
    for (const auto& g : gains) {
        const std::optional<double>& gain = metric == "time" ? g.time_gain : g.quality_gain;
        if (!gain) {
            out << "# " << format_general(g.minsup * 100.0)
                << ": undefined (zero baseline aggregate)\n";
            continue;
        }
        out << format_general(g.minsup * 100.0) << ' ' << format_general(*gain) << "\n";
    }
}

}  // namespace macroforge
