// macroforge command-line front end. Every subcommand is a thin adapter over
// the library: identical inputs through the CLI and through direct calls
// produce identical artifacts. Exit codes: 0 success, 1 planning failure
// (unsolvable / timeout / memory-out), 2 usage or parse errors.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "macroforge/bench.hpp"
#include "macroforge/generators.hpp"
#include "macroforge/macros.hpp"
#include "macroforge/mining.hpp"
#include "macroforge/pddl.hpp"
#include "macroforge/search.hpp"
#include "macroforge/strips.hpp"

namespace fs = std::filesystem;
using namespace macroforge;

namespace {

// Generated search nodes stand in for a hard memory limit; this estimate
// converts --mem-cap-mb into a node cap (state bits plus bookkeeping).
constexpr std::uint64_t kNodeBytesEstimate = 256;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& extension) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::uint64_t env_seed_fallback() {
    if (const char* env = std::getenv("MACROFORGE_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 1;
}

struct LimitOptions {
    double timeout = 300;
    std::uint64_t node_cap = 0;
    std::uint64_t mem_cap_mb = 0;

    SearchLimits limits() const {
        SearchLimits l;
        l.timeout_seconds = timeout;
        l.max_generated = node_cap;
        if (mem_cap_mb > 0) {
            std::uint64_t by_memory = mem_cap_mb * 1024 * 1024 / kNodeBytesEstimate;
            l.max_generated = l.max_generated ? std::min(l.max_generated, by_memory) : by_memory;
        }
        return l;
    }
};

void add_limit_options(CLI::App* cmd, LimitOptions& opts, double default_timeout) {
    opts.timeout = default_timeout;
    cmd->add_option("--timeout", opts.timeout, "search timeout in seconds per problem")
        ->capture_default_str();
    cmd->add_option("--node-cap", opts.node_cap,
                    "abort a search after generating this many nodes (0 = unlimited)")
        ->capture_default_str();
    cmd->add_option("--mem-cap-mb", opts.mem_cap_mb,
                    "approximate memory cap, enforced as a generated-node cap of "
                    "mem-cap-mb*2^20/" + std::to_string(kNodeBytesEstimate)
                    + " nodes (0 = unlimited)")
        ->capture_default_str();
}

Instance load_instance(const Domain& domain, const fs::path& problem_path) {
    ProblemDef problem = parse_problem(read_file(problem_path), domain);
    return {problem.name, ground(domain, problem)};
}

std::vector<Instance> load_instances(const Domain& domain, const fs::path& dir) {
    std::vector<Instance> instances;
    for (const auto& path : sorted_files(dir, ".pddl")) {
        if (path.filename() == "domain.pddl")
            continue;
        instances.push_back(load_instance(domain, path));
    }
    if (instances.empty())
        throw std::runtime_error("no problem files (*.pddl) in " + dir.string());
    return instances;
}

// Plan files from a corpus directory; zero-step plans are skipped with a
// note since the sequence database takes non-empty plans only.
std::pair<std::vector<Plan>, std::vector<std::string>> load_plans(const fs::path& dir) {
    std::vector<Plan> plans;
    std::vector<std::string> names;
    for (const auto& path : sorted_files(dir, ".plan")) {
        Plan plan = read_plan(read_file(path));
        if (plan.steps.empty()) {
            std::cerr << "note: skipping empty plan " << path.string() << "\n";
            continue;
        }
        plans.push_back(std::move(plan));
        names.push_back(path.filename().string());
    }
    if (plans.empty())
        throw std::runtime_error("no non-empty plan files (*.plan) in " + dir.string());
    return {std::move(plans), std::move(names)};
}

template <typename SearchFn>
SearchResult run_with_heuristic(const GroundTask& task, const std::string& heuristic,
                                SearchFn&& search) {
    if (heuristic == "zero")
        return search(ZeroHeuristic{});
    return search(FFHeuristic(task));
}

// ---- solve ---------------------------------------------------------------

struct SolveOptions {
    std::string domain_path, problem_path, out_path, macros_path;
    std::string heuristic = "ff";
    std::string macro_successors = "all";
    LimitOptions limits;
};

int run_solve(const SolveOptions& opts) {
    Domain domain = parse_domain(read_file(opts.domain_path));
    Instance instance = load_instance(domain, opts.problem_path);
    MacroSuccessors successors = opts.macro_successors == "final"
        ? MacroSuccessors::final_only : MacroSuccessors::all;

    SearchResult result;
    if (!opts.macros_path.empty()) {
        MacroLoadReport loaded = read_macro_library(read_file(opts.macros_path), instance.task);
        for (const auto& sig : loaded.dropped)
            std::cerr << "note: dropped macro entry not in this task: " << sig << "\n";
        result = run_with_heuristic(instance.task, opts.heuristic, [&](auto&& h) {
            return enhanced_astar(instance.task, loaded.library, h, opts.limits.limits(),
                                  successors);
        });
    } else {
        result = run_with_heuristic(instance.task, opts.heuristic, [&](auto&& h) {
            return astar(instance.task, h, opts.limits.limits());
        });
    }

    std::cout << result_record(instance.name, result) << "\n";
    if (result.outcome != Outcome::solved) {
        std::cerr << "no plan: " << outcome_name(result.outcome) << "\n";
        return 1;
    }
    fs::path out = opts.out_path.empty()
        ? fs::path(opts.problem_path).filename().replace_extension(".plan")
        : fs::path(opts.out_path);
    write_file(out, write_plan(result.plan));
    std::cerr << "plan written to " << out.string() << "\n";
    return 0;
}

// ---- gen-problems ----------------------------------------------------------

struct GenProblemsOptions {
    std::string domain_name;
    std::string out_dir;
    int count = 50;
    std::uint64_t seed = 0;
    bool seed_set = false;
    GenParams params;
};

int run_gen_problems(const GenProblemsOptions& opts) {
    auto which = bench_domain_from_name(opts.domain_name);
    if (!which)
        throw std::invalid_argument("unknown domain: " + opts.domain_name
                                    + " (expected blocksworld, gripper or ferry)");
    std::uint64_t seed = opts.seed_set ? opts.seed : env_seed_fallback();
    auto problems = generate_problems(*which, opts.params, opts.count, seed);
    fs::create_directories(opts.out_dir);
    write_file(fs::path(opts.out_dir) / "domain.pddl", domain_pddl(*which));
    for (const auto& problem : problems)
        write_file(fs::path(opts.out_dir) / (problem.name + ".pddl"), problem.pddl);
    std::cerr << "generated " << problems.size() << " problems (seed " << seed << ") in "
              << opts.out_dir << "\n";
    return 0;
}

// ---- gen-corpus -------------------------------------------------------------

struct GenCorpusOptions {
    std::string domain_path, problems_dir, out_dir;
    std::string heuristic = "ff";
    int jobs = 1;
    bool single_thread = false;
    LimitOptions limits;
};

int run_gen_corpus(const GenCorpusOptions& opts) {
    Domain domain = parse_domain(read_file(opts.domain_path));
    std::vector<Instance> training = load_instances(domain, opts.problems_dir);
    int jobs = opts.single_thread ? 1 : opts.jobs;

    CorpusBuild corpus;
    try {
        corpus = build_corpus(training, opts.limits.limits(), opts.heuristic != "zero", jobs);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    for (const auto& name : corpus.unsolved)
        std::cerr << "unsolved, excluded from corpus: " << name << "\n";

    fs::create_directories(opts.out_dir);
    for (std::size_t i = 0; i < corpus.plans.size(); ++i) {
        write_file(fs::path(opts.out_dir) / (corpus.plan_names[i] + ".plan"),
                   write_plan(corpus.plans[i]));
    }
    write_file(fs::path(opts.out_dir) / "corpus.spmf", spmf_encode(corpus.db));
    write_file(fs::path(opts.out_dir) / "corpus.dict", encode_dictionary(corpus.db.dictionary));
    std::cerr << "corpus: " << corpus.db.size() << " plans, "
              << corpus.db.dictionary.size() << " distinct actions\n";
    return 0;
}

// ---- mine -------------------------------------------------------------------

struct MineOptions {
    std::string plans_dir, spmf_path, dict_path, out_path;
    double minsup = 0.01;
    int max_length = 0;
};

int run_mine(const MineOptions& opts) {
    SequenceDatabase db;
    if (!opts.plans_dir.empty()) {
        auto [plans, names] = load_plans(opts.plans_dir);
        db = build_sequence_db(plans, names);
    } else {
        db.sequences = spmf_decode(read_file(opts.spmf_path));
        db.dictionary = decode_dictionary(read_file(opts.dict_path));
        for (const auto& seq : db.sequences) {
            for (int item : seq) {
                if (item > db.dictionary.size())
                    throw std::runtime_error("item " + std::to_string(item)
                                             + " is not in the dictionary");
            }
            db.origins.push_back("spmf");
        }
    }
    auto patterns = mine_maximal(db, MiningConfig{opts.minsup, opts.max_length});
    write_file(opts.out_path, encode_patterns(patterns, db.dictionary));
    std::cerr << "mined " << patterns.size() << " maximal patterns (minsup "
              << bench_detail::format_minsup(opts.minsup) << ", threshold "
              << MiningConfig{opts.minsup, opts.max_length}.threshold(db.size()) << "/"
              << db.size() << ")\n";
    return 0;
}

// ---- encode -----------------------------------------------------------------

struct EncodeOptions {
    std::string patterns_path, domain_path, problem_path, out_path, corpus_id;
    double minsup = 0;
};

int run_encode(const EncodeOptions& opts) {
    Domain domain = parse_domain(read_file(opts.domain_path));
    Instance instance = load_instance(domain, opts.problem_path);
    auto patterns = decode_patterns(read_file(opts.patterns_path));
    std::vector<std::string> dropped;
    MacroLibrary library = encode_macros(patterns, instance.task, &dropped);
    library.minsup = opts.minsup;
    library.corpus_id = opts.corpus_id.empty() ? opts.patterns_path : opts.corpus_id;
    for (const auto& sig : dropped)
        std::cerr << "note: dropped entry not encodable for this problem: " << sig << "\n";
    write_file(opts.out_path, write_macro_library(library, instance.task));
    std::cerr << "encoded " << library.size() << " macros for " << instance.name << "\n";
    return 0;
}

// ---- sweep ------------------------------------------------------------------

struct SweepOptions {
    std::string domain_path, test_dir, plans_dir, out_dir, domain_name;
    std::string heuristic = "ff";
    std::string macro_successors = "all";
    double start = 0.01, step = 0.01, end = 1.0;
    int max_length = 0;
    int jobs = 1;
    bool single_thread = false;
    LimitOptions limits;
};

int run_sweep(const SweepOptions& opts) {
    Domain domain = parse_domain(read_file(opts.domain_path));
    std::vector<Instance> tests = load_instances(domain, opts.test_dir);
    auto [plans, names] = load_plans(opts.plans_dir);
    SequenceDatabase corpus = build_sequence_db(plans, names);

    SweepConfig cfg;
    cfg.minsup_start = opts.start;
    cfg.minsup_step = opts.step;
    cfg.minsup_end = opts.end;
    cfg.max_pattern_length = opts.max_length;
    cfg.limits = opts.limits.limits();
    cfg.use_ff = opts.heuristic != "zero";
    cfg.successors = opts.macro_successors == "final" ? MacroSuccessors::final_only
                                                      : MacroSuccessors::all;
    cfg.jobs = opts.single_thread ? 1 : opts.jobs;
    cfg.domain_name = opts.domain_name.empty() ? domain.name : opts.domain_name;

    SweepResult result = sweep(tests, corpus, cfg);

    fs::create_directories(opts.out_dir);
    std::ofstream report(fs::path(opts.out_dir) / "report.csv");
    write_report_csv(report, result.records, cfg.domain_name);
    std::ofstream gains(fs::path(opts.out_dir) / "gains.csv");
    write_gains_csv(gains, result.gains, result.stop_reason);
    std::ofstream time_plot(fs::path(opts.out_dir) / (cfg.domain_name + "_time_gain.dat"));
    write_plot_file(time_plot, cfg.domain_name, "time", result.gains);
    std::ofstream quality_plot(fs::path(opts.out_dir) / (cfg.domain_name + "_quality_gain.dat"));
    write_plot_file(quality_plot, cfg.domain_name, "quality", result.gains);

    std::cerr << "sweep: " << result.gains.size() << " support points, "
              << result.records.size() << " rows; stop: " << result.stop_reason << "\n";
    return 0;
}

// ---- score ------------------------------------------------------------------

struct ScoreOptions {
    std::string records_path, out_path, gains_path, domain_name = "records";
};

int run_score(const ScoreOptions& opts) {
    std::ifstream in(opts.records_path);
    if (!in)
        throw std::runtime_error("cannot read " + opts.records_path);
    std::vector<RunRecord> records = read_records_csv(in);
    ScoreReport report = score_records(records);
    std::ofstream out(opts.out_path);
    if (!out)
        throw std::runtime_error("cannot write " + opts.out_path);
    write_report_csv(out, records, opts.domain_name);

    if (!opts.gains_path.empty()) {
        std::ofstream gout(opts.gains_path);
        write_gains_csv(gout, report.gains, "");
    }
    std::cerr << "scored " << records.size() << " records\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"macroforge: learn macro-actions from solution plans and use them in search"};
    app.require_subcommand(1);

    SolveOptions solve_opts;
    auto* solve = app.add_subcommand("solve", "solve one problem, optionally with a macro library");
    solve->add_option("--domain", solve_opts.domain_path, "PDDL domain file")
        ->required()->check(CLI::ExistingFile);
    solve->add_option("--problem", solve_opts.problem_path, "PDDL problem file")
        ->required()->check(CLI::ExistingFile);
    solve->add_option("--out", solve_opts.out_path,
                      "plan output file (default: <problem>.plan in the working directory)");
    solve->add_option("--macros", solve_opts.macros_path,
                      "macro library file; runs the macro-enhanced search")
        ->check(CLI::ExistingFile);
    solve->add_option("--heuristic", solve_opts.heuristic, "search heuristic")
        ->check(CLI::IsMember({"ff", "zero"}))->capture_default_str();
    solve->add_option("--macro-successors", solve_opts.macro_successors,
                      "macro expansion generates all intermediate states or only the final one")
        ->check(CLI::IsMember({"all", "final"}))->capture_default_str();
    add_limit_options(solve, solve_opts.limits, 300);

    GenProblemsOptions gen_opts;
    auto* gen = app.add_subcommand("gen-problems", "generate solvable benchmark problems");
    gen->add_option("--domain-name", gen_opts.domain_name, "blocksworld, gripper or ferry")
        ->required();
    gen->add_option("--out", gen_opts.out_dir, "output directory")->required();
    gen->add_option("--count", gen_opts.count, "number of problems")->capture_default_str();
    gen->add_option("--seed", gen_opts.seed,
                    "generator seed (falls back to MACROFORGE_SEED, then 1)")
        ->each([&](const std::string&) { gen_opts.seed_set = true; });
    gen->add_option("--blocks", gen_opts.params.blocks, "blocksworld: block count (>= 2)")
        ->capture_default_str();
    gen->add_option("--balls", gen_opts.params.balls, "gripper: ball count (>= 1)")
        ->capture_default_str();
    gen->add_option("--cars", gen_opts.params.cars, "ferry: car count (>= 1)")
        ->capture_default_str();
    gen->add_option("--locations", gen_opts.params.locations, "ferry: location count (>= 2)")
        ->capture_default_str();

    GenCorpusOptions corpus_opts;
    auto* corpus = app.add_subcommand("gen-corpus",
                                      "solve training problems and build the plan corpus");
    corpus->add_option("--domain", corpus_opts.domain_path, "PDDL domain file")
        ->required()->check(CLI::ExistingFile);
    corpus->add_option("--problems", corpus_opts.problems_dir, "directory of training problems")
        ->required()->check(CLI::ExistingDirectory);
    corpus->add_option("--out", corpus_opts.out_dir, "output directory")->required();
    corpus->add_option("--heuristic", corpus_opts.heuristic, "search heuristic")
        ->check(CLI::IsMember({"ff", "zero"}))->capture_default_str();
    corpus->add_option("--jobs", corpus_opts.jobs, "parallel searches")->capture_default_str();
    corpus->add_flag("--single-thread", corpus_opts.single_thread,
                     "force sequential runs (equivalent to --jobs 1)");
    add_limit_options(corpus, corpus_opts.limits, 60);

    MineOptions mine_opts;
    auto* mine = app.add_subcommand("mine", "mine maximal frequent action sequences");
    mine->add_option("--plans", mine_opts.plans_dir, "directory of plan files")
        ->check(CLI::ExistingDirectory);
    mine->add_option("--spmf", mine_opts.spmf_path, "SPMF sequence file")
        ->check(CLI::ExistingFile);
    mine->add_option("--dict", mine_opts.dict_path, "dictionary sidecar for --spmf")
        ->check(CLI::ExistingFile);
    mine->add_option("--minsup", mine_opts.minsup, "support threshold, fraction in (0,1]")
        ->check(CLI::Range(1e-9, 1.0))->capture_default_str();
    mine->add_option("--max-length", mine_opts.max_length, "pattern length cap (0 = unlimited)")
        ->capture_default_str();
    mine->add_option("--out", mine_opts.out_path, "mined-pattern output file")->required();

    EncodeOptions encode_opts;
    auto* encode = app.add_subcommand("encode", "bind mined patterns to a problem as macros");
    encode->add_option("--patterns", encode_opts.patterns_path, "mined-pattern file")
        ->required()->check(CLI::ExistingFile);
    encode->add_option("--domain", encode_opts.domain_path, "PDDL domain file")
        ->required()->check(CLI::ExistingFile);
    encode->add_option("--problem", encode_opts.problem_path, "PDDL problem file")
        ->required()->check(CLI::ExistingFile);
    encode->add_option("--out", encode_opts.out_path, "macro library output file")->required();
    encode->add_option("--corpus-id", encode_opts.corpus_id,
                       "provenance label (default: the pattern file path)");
    encode->add_option("--minsup", encode_opts.minsup, "provenance: support used when mining")
        ->capture_default_str();

    SweepOptions sweep_opts;
    auto* sweep_cmd = app.add_subcommand("sweep",
                                         "support sweep: mine, encode and search per support value");
    sweep_cmd->add_option("--domain", sweep_opts.domain_path, "PDDL domain file")
        ->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--test", sweep_opts.test_dir, "directory of test problems")
        ->required()->check(CLI::ExistingDirectory);
    sweep_cmd->add_option("--plans", sweep_opts.plans_dir, "directory of corpus plan files")
        ->required()->check(CLI::ExistingDirectory);
    sweep_cmd->add_option("--out", sweep_opts.out_dir, "output directory")->required();
    sweep_cmd->add_option("--start", sweep_opts.start, "first support value")
        ->capture_default_str();
    sweep_cmd->add_option("--step", sweep_opts.step, "support increment")->capture_default_str();
    sweep_cmd->add_option("--end", sweep_opts.end, "last support value")->capture_default_str();
    sweep_cmd->add_option("--max-length", sweep_opts.max_length,
                          "pattern length cap (0 = unlimited)")->capture_default_str();
    sweep_cmd->add_option("--heuristic", sweep_opts.heuristic, "search heuristic")
        ->check(CLI::IsMember({"ff", "zero"}))->capture_default_str();
    sweep_cmd->add_option("--macro-successors", sweep_opts.macro_successors,
                          "macro expansion mode")
        ->check(CLI::IsMember({"all", "final"}))->capture_default_str();
    sweep_cmd->add_option("--jobs", sweep_opts.jobs, "parallel searches")->capture_default_str();
    sweep_cmd->add_flag("--single-thread", sweep_opts.single_thread,
                        "force sequential runs for fully deterministic reports");
    sweep_cmd->add_option("--domain-name", sweep_opts.domain_name,
                          "label for reports and plot files (default: the parsed domain name)");
    add_limit_options(sweep_cmd, sweep_opts.limits, 60);

    ScoreOptions score_opts;
    auto* score = app.add_subcommand("score", "recompute IPC scores and gains from run records");
    score->add_option("--records", score_opts.records_path, "records CSV (report format)")
        ->required()->check(CLI::ExistingFile);
    score->add_option("--out", score_opts.out_path, "scored report output file")->required();
    score->add_option("--gains", score_opts.gains_path, "optional gain summary output file");
    score->add_option("--domain-name", score_opts.domain_name, "label for the report header")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (solve->parsed())
            return run_solve(solve_opts);
        if (gen->parsed())
            return run_gen_problems(gen_opts);
        if (corpus->parsed())
            return run_gen_corpus(corpus_opts);
        if (mine->parsed()) {
            if (mine_opts.plans_dir.empty() && (mine_opts.spmf_path.empty()
                                                || mine_opts.dict_path.empty()))
                throw std::invalid_argument("mine needs --plans or both --spmf and --dict");
            return run_mine(mine_opts);
        }
        if (encode->parsed())
            return run_encode(encode_opts);
        if (sweep_cmd->parsed())
            return run_sweep(sweep_opts);
        if (score->parsed())
            return run_score(score_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
