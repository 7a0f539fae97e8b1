#include <gtest/gtest.h>

#include <sstream>

#include "macroforge/bench.hpp"
#include "macroforge/generators.hpp"
#include "test_support.hpp"

using namespace macroforge;
using namespace testsupport;

namespace {

std::vector<Instance> make_instances(BenchDomain which, const GenParams& params, int count,
                                     std::uint64_t seed) {
    Domain domain = parse_domain(domain_pddl(which));
    std::vector<Instance> instances;
    for (const auto& generated : generate_problems(which, params, count, seed))
        instances.push_back({generated.name, ground(domain, parse_problem(generated.pddl, domain))});
    return instances;
}

TEST(Scores, HandValues) {
    EXPECT_DOUBLE_EQ(time_score(2.0, 4.0), 0.5);
    EXPECT_DOUBLE_EQ(time_score(3.0, 3.0), 1.0);
    EXPECT_DOUBLE_EQ(quality_score(6, 8), 0.75);
    EXPECT_DOUBLE_EQ(quality_score(5, 5), 1.0);

    Scores unsolved = score_run(false, 1.0, 2.0, 3, 4);
    EXPECT_EQ(unsolved.time, 0.0);
    EXPECT_EQ(unsolved.quality, 0.0);
}

TEST(Scores, ClampedBelowClockResolution) {
    EXPECT_DOUBLE_EQ(time_score(1e-9, 1e-9), 1.0);
    EXPECT_DOUBLE_EQ(time_score(1e-9, 0.002), kClockResolutionSeconds / 0.002);
    EXPECT_LE(time_score(0.0005, 0.1), 1.0);
}

TEST(Gain, MirrorsReportedMagnitudes) {
    EXPECT_DOUBLE_EQ(*gain_pct(10.0, 47.2), 372.0);
    EXPECT_DOUBLE_EQ(*gain_pct(10.0, 10.0), 0.0);
    EXPECT_DOUBLE_EQ(*gain_pct(10.0, 8.8), -12.0);
    EXPECT_FALSE(gain_pct(0.0, 5.0).has_value());
}

TEST(ComputeScores, ReferencesAreTheBestOfAllConfigurations) {
    std::vector<RunRecord> records;
    auto add = [&](const char* problem, const char* config, Outcome outcome, int cost,
                   double seconds) {
        RunRecord r;
        r.minsup = 0.01;
        r.problem = problem;
        r.config = config;
        r.outcome = outcome;
        r.cost = cost;
        r.seconds = seconds;
        records.push_back(r);
    };
    add("p1", "baseline", Outcome::solved, 8, 0.004);
    add("p1", "enhanced", Outcome::solved, 6, 0.002);
    add("p2", "baseline", Outcome::timeout, -1, 60.0);
    add("p2", "enhanced", Outcome::solved, 5, 0.010);
    add("p3", "baseline", Outcome::timeout, -1, 60.0);
    add("p3", "enhanced", Outcome::memory_out, -1, 1.0);

    auto refs = compute_scores(records);
    EXPECT_DOUBLE_EQ(refs.at("p1").best_seconds, 0.002);
    EXPECT_EQ(refs.at("p1").best_cost, 6);
    EXPECT_EQ(refs.count("p3"), 0u);

    // Independent recomputation of every score from the records.
    for (const auto& r : records) {
        if (r.outcome != Outcome::solved) {
            EXPECT_EQ(r.time_score, 0.0);
            EXPECT_EQ(r.quality_score, 0.0);
            continue;
        }
        double best_seconds = std::numeric_limits<double>::infinity();
        int best_cost = std::numeric_limits<int>::max();
        for (const auto& other : records) {
            if (other.problem == r.problem && other.outcome == Outcome::solved) {
                best_seconds = std::min(best_seconds, other.seconds);
                best_cost = std::min(best_cost, other.cost);
            }
        }
        EXPECT_DOUBLE_EQ(r.time_score, time_score(best_seconds, r.seconds));
        EXPECT_DOUBLE_EQ(r.quality_score, quality_score(best_cost, r.cost));
        EXPECT_GE(r.time_score, 0.0);
        EXPECT_LE(r.time_score, 1.0);
        EXPECT_GE(r.quality_score, 0.0);
        EXPECT_LE(r.quality_score, 1.0);
    }
}

TEST(BenchmarkSuiteGen, DisjointTrainingAndTestSets) {
    BenchmarkSuite suite = generate_suite(BenchDomain::gripper, {.balls = 2}, 13,
                                          /*training_count=*/6, /*test_count=*/3);
    EXPECT_EQ(suite.domain_name, "gripper");
    EXPECT_EQ(suite.training.size(), 6u);
    EXPECT_EQ(suite.tests.size(), 3u);
    std::set<std::string> names;
    for (const auto& instance : suite.training)
        names.insert(instance.name);
    for (const auto& instance : suite.tests)
        EXPECT_EQ(names.count(instance.name), 0u);
}

TEST(ScoreRecords, ProducesReferencesAndPerPointGains) {
    std::vector<RunRecord> records;
    auto add = [&](double minsup, const char* config, double seconds, int cost) {
        RunRecord r;
        r.minsup = minsup;
        r.problem = "p";
        r.config = config;
        r.outcome = Outcome::solved;
        r.seconds = seconds;
        r.cost = cost;
        records.push_back(r);
    };
    add(0.01, "baseline", 0.004, 8);
    add(0.01, "enhanced", 0.002, 8);
    add(0.02, "baseline", 0.004, 8);
    add(0.02, "enhanced", 0.004, 8);
    ScoreReport report = score_records(records);
    EXPECT_DOUBLE_EQ(report.references.at("p").best_seconds, 0.002);
    ASSERT_EQ(report.gains.size(), 2u);
    EXPECT_DOUBLE_EQ(report.gains[0].minsup, 0.01);
    EXPECT_EQ(report.gains[0].patterns, -1);
    ASSERT_TRUE(report.gains[0].time_gain.has_value());
    EXPECT_GT(*report.gains[0].time_gain, 0.0);     // enhanced was faster at 1%
    EXPECT_DOUBLE_EQ(*report.gains[1].time_gain, 0.0);
    EXPECT_DOUBLE_EQ(*report.gains[0].quality_gain, 0.0);
}

TEST(BuildCorpus, SolvesTrainingProblemsAndBuildsTheDatabase) {
    auto training = make_instances(BenchDomain::blocksworld, {.blocks = 3}, 6, 11);
    SearchLimits limits;
    limits.timeout_seconds = 30;
    CorpusBuild corpus = build_corpus(training, limits);
    EXPECT_EQ(corpus.plans.size(), 6u);
    EXPECT_TRUE(corpus.unsolved.empty());
    EXPECT_EQ(corpus.db.size(), static_cast<int>(corpus.db.origins.size()));
    EXPECT_GE(corpus.db.size(), 1);
    for (const auto& seq : corpus.db.sequences)
        EXPECT_FALSE(seq.empty());
}

TEST(BuildCorpus, AllTimeoutsIsAHardError) {
    auto training = make_instances(BenchDomain::blocksworld, {.blocks = 3}, 3, 11);
    SearchLimits limits;
    limits.timeout_seconds = 0;  // everything times out
    EXPECT_THROW(build_corpus(training, limits), std::runtime_error);
}

TEST(Sweep, StopsAtFirstEmptyMiningResultAndEmitsEveryRow) {
    // Synthetic corpus with known support structure: "a b" in 3/4 plans.
    std::vector<Plan> plans = {Plan{{"a", "b"}}, Plan{{"a", "b"}}, Plan{{"a", "b"}},
                               Plan{{"c"}}};
    SequenceDatabase corpus = build_sequence_db(plans);
    auto tests = make_instances(BenchDomain::blocksworld, {.blocks = 3}, 3, 17);

    SweepConfig cfg;
    cfg.minsup_start = 0.25;
    cfg.minsup_step = 0.25;
    cfg.minsup_end = 1.0;
    cfg.limits.timeout_seconds = 30;
    SweepResult result = sweep(tests, corpus, cfg);

    // Supports: "a b" 3/4, "c" 1/4. Thresholds 1,2,3 pass; 4 mines nothing.
    ASSERT_EQ(result.gains.size(), 3u);
    EXPECT_EQ(result.stop_reason, "no sequences at minsup=1");
    EXPECT_EQ(result.records.size(), 3u * 3u * 2u);
    std::set<std::tuple<double, std::string, std::string>> rows;
    for (const auto& r : result.records) {
        EXPECT_TRUE(r.config == kBaselineConfig || r.config == kEnhancedConfig);
        rows.insert({r.minsup, r.problem, r.config});
        EXPECT_GE(r.time_score, 0.0);
        EXPECT_LE(r.time_score, 1.0);
        EXPECT_GE(r.quality_score, 0.0);
        EXPECT_LE(r.quality_score, 1.0);
    }
    EXPECT_EQ(rows.size(), result.records.size());  // no duplicates, nothing skipped
}

TEST(Sweep, RangeEndStop) {
    std::vector<Plan> plans = {Plan{{"a", "b"}}, Plan{{"a", "b"}}};
    SequenceDatabase corpus = build_sequence_db(plans);
    auto tests = make_instances(BenchDomain::blocksworld, {.blocks = 3}, 2, 29);
    SweepConfig cfg;
    cfg.minsup_start = 0.5;
    cfg.minsup_step = 0.5;
    cfg.minsup_end = 1.0;
    cfg.limits.timeout_seconds = 30;
    SweepResult result = sweep(tests, corpus, cfg);
    EXPECT_EQ(result.stop_reason, "range end");
    ASSERT_EQ(result.gains.size(), 2u);
    EXPECT_DOUBLE_EQ(result.gains[0].minsup, 0.5);
    EXPECT_DOUBLE_EQ(result.gains[1].minsup, 1.0);
}

TEST(Sweep, SingleThreadRunsAreByteIdenticalExceptTimings) {
    auto tests = make_instances(BenchDomain::blocksworld, {.blocks = 4}, 4, 5);
    auto training = make_instances(BenchDomain::blocksworld, {.blocks = 4}, 8, 6);
    SearchLimits limits;
    limits.timeout_seconds = 30;
    CorpusBuild corpus = build_corpus(training, limits);

    SweepConfig cfg;
    cfg.minsup_start = 0.2;
    cfg.minsup_step = 0.2;
    cfg.minsup_end = 1.0;
    cfg.limits = limits;
    cfg.jobs = 1;

    auto strip_timing = [](const std::string& report) {
        std::string out;
        std::istringstream in(report);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line[0] == '#')
                continue;  // the timestamp comment line
            std::vector<std::string> fields;
            std::stringstream fs(line);
            std::string f;
            while (std::getline(fs, f, ','))
                fields.push_back(f);
            if (fields.size() == 9) {
                fields[5] = "-";  // seconds
                fields[7] = "-";  // time_score
            }
            for (std::size_t i = 0; i < fields.size(); ++i)
                out += (i ? "," : "") + fields[i];
            out += "\n";
        }
        return out;
    };

    std::ostringstream first, second;
    write_report_csv(first, sweep(tests, corpus.db, cfg).records, "blocksworld");
    write_report_csv(second, sweep(tests, corpus.db, cfg).records, "blocksworld");
    EXPECT_EQ(strip_timing(first.str()), strip_timing(second.str()));
}

TEST(Sweep, ParallelRunsMatchSequentialResults) {
    auto tests = make_instances(BenchDomain::gripper, {.balls = 3}, 4, 77);
    auto training = make_instances(BenchDomain::gripper, {.balls = 3}, 8, 78);
    SearchLimits limits;
    limits.timeout_seconds = 30;
    CorpusBuild corpus = build_corpus(training, limits);

    SweepConfig cfg;
    cfg.minsup_start = 0.2;
    cfg.minsup_step = 0.2;
    cfg.minsup_end = 1.0;
    cfg.limits = limits;
    cfg.jobs = 1;
    SweepResult sequential = sweep(tests, corpus.db, cfg);
    cfg.jobs = 4;
    SweepResult parallel = sweep(tests, corpus.db, cfg);

    ASSERT_EQ(sequential.records.size(), parallel.records.size());
    EXPECT_EQ(sequential.stop_reason, parallel.stop_reason);
    for (std::size_t i = 0; i < sequential.records.size(); ++i) {
        EXPECT_EQ(sequential.records[i].problem, parallel.records[i].problem);
        EXPECT_EQ(sequential.records[i].config, parallel.records[i].config);
        EXPECT_EQ(sequential.records[i].outcome, parallel.records[i].outcome);
        EXPECT_EQ(sequential.records[i].cost, parallel.records[i].cost);
        EXPECT_EQ(sequential.records[i].expanded, parallel.records[i].expanded);
        EXPECT_EQ(sequential.records[i].quality_score, parallel.records[i].quality_score);
    }
}

TEST(ReportCsv, RoundTripsRecords) {
    std::vector<RunRecord> records;
    RunRecord a;
    a.minsup = 0.01;
    a.problem = "p1";
    a.config = "baseline";
    a.outcome = Outcome::solved;
    a.cost = 7;
    a.seconds = 0.125;
    a.expanded = 42;
    records.push_back(a);
    RunRecord b = a;
    b.config = "enhanced";
    b.outcome = Outcome::timeout;
    b.cost = -1;
    records.push_back(b);
    compute_scores(records);

    std::ostringstream out;
    write_report_csv(out, records, "unit");
    std::string text = out.str();
    EXPECT_NE(text.find(kReportHeader), std::string::npos);
    EXPECT_NE(text.find("0.01,p1,baseline,solved,7,0.125000,42,1.000000,1.000000"),
              std::string::npos);
    EXPECT_NE(text.find("0.01,p1,enhanced,timeout,,"), std::string::npos);

    std::istringstream in(text);
    auto read_back = read_records_csv(in);
    ASSERT_EQ(read_back.size(), 2u);
    EXPECT_EQ(read_back[0].problem, "p1");
    EXPECT_EQ(read_back[0].cost, 7);
    EXPECT_EQ(read_back[1].outcome, Outcome::timeout);
    EXPECT_EQ(read_back[1].cost, -1);

    std::istringstream garbage("not,a,report\n");
    EXPECT_THROW(read_records_csv(garbage), FormatError);
}

TEST(GainsCsv, WritesUndefinedAndStopReason) {
    std::vector<GainRow> gains;
    GainRow g;
    g.minsup = 0.01;
    g.patterns = 4;
    g.baseline_time_sum = 10;
    g.enhanced_time_sum = 47.2;
    g.time_gain = gain_pct(10, 47.2);
    g.quality_gain = std::nullopt;
    gains.push_back(g);
    std::ostringstream out;
    write_gains_csv(out, gains, "no sequences at minsup=0.31", /*with_timestamp=*/false);
    std::string text = out.str();
    EXPECT_NE(text.find("minsup,patterns,time_gain_pct,quality_gain_pct"), std::string::npos);
    EXPECT_NE(text.find("0.01,4,372,undefined"), std::string::npos);
    EXPECT_NE(text.find("# stop_reason: no sequences at minsup=0.31"), std::string::npos);
}

TEST(PlotFiles, TwoColumnsInPercent) {
    std::vector<GainRow> gains;
    GainRow g;
    g.minsup = 0.02;
    g.patterns = 3;
    g.time_gain = 55.5;
    g.quality_gain = -4.0;
    gains.push_back(g);
    std::ostringstream time_out, quality_out;
    write_plot_file(time_out, "blocksworld", "time", gains);
    write_plot_file(quality_out, "blocksworld", "quality", gains);
    EXPECT_NE(time_out.str().find("\n2 55.5\n"), std::string::npos);
    EXPECT_NE(quality_out.str().find("\n2 -4\n"), std::string::npos);
}

}  // namespace
