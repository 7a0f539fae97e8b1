#include <gtest/gtest.h>

#include "macroforge/macros.hpp"
#include "test_support.hpp"

using namespace macroforge;
using namespace testsupport;

namespace {

ActionDictionary bw_dict() {
    std::set<std::string> sigs = {"pick-up a", "pick-up c", "stack a b", "stack a c"};
    return ActionDictionary::from_signatures(sigs);
}

std::set<std::string> atom_names(const GroundTask& task, const State& s) {
    std::set<std::string> out;
    for (int id : s.members())
        out.insert(task.atoms[id].signature());
    return out;
}

TEST(EncodeMacros, KeepsOnlyFullyResolvableSequencesOfLengthTwoPlus) {
    GroundTask task = bw2_task();
    ActionDictionary dict = bw_dict();
    std::vector<Pattern> patterns = {
        {{dict.id("pick-up a"), dict.id("stack a b")}, 5},  // kept
        {{dict.id("pick-up c"), dict.id("stack a b")}, 9},  // block c not in the task
        {{dict.id("pick-up a"), dict.id("stack a c")}, 9},  // partial match dropped whole
        {{dict.id("pick-up a")}, 7},                        // length 1
    };
    MacroLibrary library = encode_macros(patterns, dict, task);
    ASSERT_EQ(library.size(), 1u);
    EXPECT_EQ(library.macros[0].length(), 2);
    EXPECT_EQ(library.macros[0].support, 5);
    EXPECT_EQ(task.actions[library.macros[0].steps[0]].signature, "pick-up a");
    EXPECT_EQ(task.actions[library.macros[0].steps[1]].signature, "stack a b");
}

TEST(EncodeMacros, OrdersBySupportThenStepsAndDedupes) {
    GroundTask task = bw2_task();
    auto dict = ActionDictionary::from_signatures(
        {"pick-up a", "pick-up b", "stack a b", "stack b a"});
    std::vector<Pattern> patterns = {
        {{dict.id("pick-up b"), dict.id("stack b a")}, 3},
        {{dict.id("pick-up a"), dict.id("stack a b")}, 3},
        {{dict.id("pick-up a"), dict.id("stack a b")}, 1},  // duplicate steps, lower support
        {{dict.id("pick-up b")}, 9},
    };
    MacroLibrary library = encode_macros(patterns, dict, task);
    ASSERT_EQ(library.size(), 2u);
    EXPECT_EQ(task.actions[library.macros[0].steps[0]].signature, "pick-up a");
    EXPECT_EQ(library.macros[0].support, 3);
    EXPECT_EQ(task.actions[library.macros[1].steps[0]].signature, "pick-up b");
}

TEST(MacroApplicability, StepwiseFold) {
    GroundTask task = bw2_task();
    Macro macro{{task.action_id("pick-up a"), task.action_id("stack a b")}, {}, 1};
    EXPECT_TRUE(macro_applicable(task, task.init, macro));

    State holding(task.num_atoms());
    holding.insert(task.atom_id("holding a"));
    holding.insert(task.atom_id("ontable b"));
    holding.insert(task.atom_id("clear b"));
    EXPECT_FALSE(macro_applicable(task, holding, macro));  // step 0 needs handempty

    // Later steps can be enabled by earlier adds.
    Macro chained{{task.action_id("pick-up a"), task.action_id("put-down a")}, {}, 1};
    EXPECT_TRUE(macro_applicable(task, task.init, chained));
}

TEST(ApplyMacro, ProducesIntermediateStates) {
    GroundTask task = bw2_task();
    Macro macro{{task.action_id("pick-up a"), task.action_id("stack a b")}, {}, 1};
    auto states = apply_macro(task, task.init, macro);
    ASSERT_EQ(states.size(), 2u);
    EXPECT_EQ(atom_names(task, states[0]),
              (std::set<std::string>{"holding a", "clear b", "ontable b"}));
    EXPECT_EQ(atom_names(task, states[1]),
              (std::set<std::string>{"on a b", "clear a", "handempty", "ontable b"}));
    EXPECT_EQ(states.back(), apply_sequence(task.init, macro.steps, task));

    Macro bad{{task.action_id("stack a b"), task.action_id("pick-up a")}, {}, 1};
    try {
        apply_macro(task, task.init, bad);
        FAIL() << "expected InapplicableError";
    } catch (const InapplicableError& e) {
        EXPECT_EQ(e.step_index, 0);
    }
}

TEST(ApplyMacroProperties, FinalStateEqualsApplySequence) {
    TestRng rng(1234);
    int checked = 0;
    while (checked < 300) {
        RawTask raw = random_raw_task(rng);
        GroundTask task = build_task(raw);
        // Random applicable macro: walk 2..4 applicable steps from a random
        // reachable state.
        State s = task.init;
        for (int hop = rng.below(3); hop > 0; --hop) {
            std::vector<int> options;
            for (int ai = 0; ai < task.num_actions(); ++ai)
                if (applicable(s, task.actions[ai]))
                    options.push_back(ai);
            if (options.empty())
                break;
            s = apply_unchecked(s, task.actions[options[rng.below((int)options.size())]]);
        }
        Macro macro;
        State walk = s;
        int want = 2 + rng.below(3);
        for (int step = 0; step < want; ++step) {
            std::vector<int> options;
            for (int ai = 0; ai < task.num_actions(); ++ai)
                if (applicable(walk, task.actions[ai]))
                    options.push_back(ai);
            if (options.empty())
                break;
            int chosen = options[rng.below((int)options.size())];
            macro.steps.push_back(chosen);
            walk = apply_unchecked(walk, task.actions[chosen]);
        }
        if (macro.length() < 2)
            continue;
        ++checked;
        ASSERT_TRUE(macro_applicable(task, s, macro));
        auto states = apply_macro(task, s, macro);
        EXPECT_EQ(states.size(), macro.steps.size());
        EXPECT_EQ(states.back(), apply_sequence(s, macro.steps, task));
        for (std::size_t k = 0; k < states.size(); ++k) {
            EXPECT_EQ(states[k],
                      apply_sequence(s, std::span<const int>(macro.steps).subspan(0, k + 1),
                                     task));
        }
    }
}

TEST(EnhancedAstar, EmptyLibraryReproducesBaselineExactly) {
    for (const char* problem : {"blocksworld/p01.pddl", "blocksworld/p02.pddl"}) {
        GroundTask task = ground_benchmark("blocksworld/domain.pddl", problem);
        SearchLimits limits;
        limits.record_trace = true;
        SearchResult base = astar(task, FFHeuristic(task), limits);
        SearchResult enhanced = enhanced_astar(task, MacroLibrary{}, FFHeuristic(task), limits);
        EXPECT_EQ(base.outcome, enhanced.outcome);
        EXPECT_EQ(base.plan, enhanced.plan);
        EXPECT_EQ(base.expanded, enhanced.expanded);
        EXPECT_EQ(base.generated, enhanced.generated);
        EXPECT_EQ(base.expansion_trace, enhanced.expansion_trace);
    }
}

TEST(EnhancedAstar, MacroReachesGoalFromRootExpansion) {
    GroundTask task = bw2_task();
    MacroLibrary library;
    library.macros.push_back(
        Macro{{task.action_id("pick-up a"), task.action_id("stack a b")}, {}, 1});
    SearchResult result = enhanced_astar(task, library, FFHeuristic(task));
    ASSERT_EQ(result.outcome, Outcome::solved);
    EXPECT_EQ(result.plan, (Plan{{"pick-up a", "stack a b"}}));
    EXPECT_GE(result.macro_applications, 1u);
    // Root expansion generates the goal through the macro; the goal pops next.
    EXPECT_EQ(result.expanded, 2u);
}

TEST(EnhancedAstar, FinalOnlyModeStillSolves) {
    GroundTask task = bw2_task();
    MacroLibrary library;
    library.macros.push_back(
        Macro{{task.action_id("pick-up a"), task.action_id("stack a b")}, {}, 1});
    SearchResult result = enhanced_astar(task, library, FFHeuristic(task), {},
                                         MacroSuccessors::final_only);
    ASSERT_EQ(result.outcome, Outcome::solved);
    EXPECT_EQ(result.plan.cost(), 2);
    EXPECT_TRUE(validate_plan(task, result.plan).valid);
}

TEST(EnhancedAstar, UnsolvableStaysUnsolvableWithMacros) {
    TaskBuilder builder;
    int p = builder.add_atom({"p", {}});
    int q = builder.add_atom({"q", {}});
    int r = builder.add_atom({"r", {}});
    builder.add_action("ab", {p}, {q}, {p});
    builder.add_action("ba", {q}, {p}, {q});
    builder.set_init({p});
    builder.set_goal({r});
    GroundTask task = builder.build();
    MacroLibrary library;
    library.macros.push_back(Macro{{0, 1}, {}, 1});
    SearchResult result = enhanced_astar(task, library, ZeroHeuristic{});
    EXPECT_EQ(result.outcome, Outcome::unsolvable);
}

TEST(ExtractPlan, ExpandsMacroEdgesToPrimitives) {
    GroundTask task = bw2_task();
    MacroLibrary library;
    library.macros.push_back(
        Macro{{task.action_id("pick-up a"), task.action_id("stack a b")}, {}, 1});

    std::vector<SearchNode> arena;
    arena.push_back({task.init, 0, 0, UINT32_MAX, Step{}});  // root
    EXPECT_TRUE(extract_plan(arena, 0, task, library).steps.empty());

    State s1 = apply_unchecked(task.init, task.actions[task.action_id("pick-up b")]);
    arena.push_back({s1, 1, 0, 0, Step{task.action_id("pick-up b"), -1, 0}});
    State s2 = apply_unchecked(s1, task.actions[task.action_id("put-down b")]);
    arena.push_back({s2, 2, 0, 1, Step{task.action_id("put-down b"), -1, 0}});
    auto states = apply_macro(task, s2, library.macros[0]);
    arena.push_back({states[1], 4, 0, 2, Step{-1, 0, 2}});
    EXPECT_EQ(extract_plan(arena, 3, task, library),
              (Plan{{"pick-up b", "put-down b", "pick-up a", "stack a b"}}));

    arena.push_back({states[0], 3, 0, 2, Step{-1, 0, 1}});
    EXPECT_EQ(extract_plan(arena, 4, task, library),
              (Plan{{"pick-up b", "put-down b", "pick-up a"}}));
}

// Soundness and reachability preservation on random tasks with random mined
// libraries.
TEST(EnhancedAstarProperties, SoundAndReachabilityPreserving) {
    TestRng rng(9090);
    int solvable_checked = 0;
    for (int round = 0; round < 150; ++round) {
        RawTask raw = random_raw_task(rng);
        GroundTask task = build_task(raw);

        // Corpus of random walks re-encoded as plans, mined, then bound.
        std::vector<Plan> corpus;
        for (int w = 0; w < 4; ++w) {
            Plan plan;
            State s = task.init;
            for (int step = 0; step < 4; ++step) {
                std::vector<int> options;
                for (int ai = 0; ai < task.num_actions(); ++ai)
                    if (applicable(s, task.actions[ai]))
                        options.push_back(ai);
                if (options.empty())
                    break;
                int chosen = options[rng.below((int)options.size())];
                plan.steps.push_back(task.actions[chosen].signature);
                s = apply_unchecked(s, task.actions[chosen]);
            }
            if (!plan.steps.empty())
                corpus.push_back(std::move(plan));
        }
        MacroLibrary library;
        SequenceDatabase db;
        if (!corpus.empty()) {
            db = build_sequence_db(corpus);
            library = encode_macros(mine_maximal(db, {0.4, 0}), db.dictionary, task);
        }

        SearchResult base = astar(task, FFHeuristic(task));
        SearchResult enhanced = enhanced_astar(task, library, FFHeuristic(task));
        EXPECT_EQ(base.outcome, enhanced.outcome);
        if (enhanced.outcome == Outcome::solved) {
            ++solvable_checked;
            EXPECT_TRUE(validate_plan(task, enhanced.plan).valid);
            SearchResult optimal = astar(task, ZeroHeuristic{});
            EXPECT_GE(enhanced.plan.cost(), optimal.plan.cost());
        }
    }
    EXPECT_GT(solvable_checked, 30);
}

TEST(MacroLibraryFile, WritesHeaderAndValidatesOnRead) {
    GroundTask task = bw2_task();
    MacroLibrary library;
    library.minsup = 0.05;
    library.corpus_id = "bw-train";
    library.macros.push_back(
        Macro{{task.action_id("pick-up a"), task.action_id("stack a b")}, {}, 4});
    std::string text = write_macro_library(library, task, /*with_date=*/false);
    EXPECT_EQ(text,
              "; macroforge macro library\n"
              "; corpus: bw-train\n"
              "; minsup: 0.05\n"
              "pick-up a ; stack a b #SUP: 4\n");

    MacroLoadReport loaded = read_macro_library(text, task);
    ASSERT_EQ(loaded.library.size(), 1u);
    EXPECT_TRUE(loaded.dropped.empty());
    EXPECT_EQ(loaded.library.macros[0].steps, library.macros[0].steps);
    EXPECT_EQ(loaded.library.corpus_id, "bw-train");
    EXPECT_DOUBLE_EQ(loaded.library.minsup, 0.05);

    std::string with_bogus = text + "pick-up z ; stack a b #SUP: 2\n";
    MacroLoadReport partial = read_macro_library(with_bogus, task);
    EXPECT_EQ(partial.library.size(), 1u);
    ASSERT_EQ(partial.dropped.size(), 1u);
    EXPECT_EQ(partial.dropped[0], "pick-up z");
}

}  // namespace
