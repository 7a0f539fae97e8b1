#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "macroforge/pddl.hpp"
#include "macroforge/strips.hpp"

namespace macroforge {

enum class BenchDomain { blocksworld, gripper, ferry };

inline const char* bench_domain_name(BenchDomain d) {
    switch (d) {
    case BenchDomain::blocksworld: return "blocksworld";
    case BenchDomain::gripper: return "gripper";
    case BenchDomain::ferry: return "ferry";
    }
    return "?";
}

inline std::optional<BenchDomain> bench_domain_from_name(const std::string& name) {
    if (name == "blocksworld")
        return BenchDomain::blocksworld;
    if (name == "gripper")
        return BenchDomain::gripper;
    if (name == "ferry")
        return BenchDomain::ferry;
    return std::nullopt;
}

// The bundled domains. benchmarks/<name>/domain.pddl carries the same text;
// a test pins the two copies against each other.
inline std::string domain_pddl(BenchDomain d) {
    switch (d) {
    case BenchDomain::blocksworld:
        return R"((define (domain blocksworld)
  (:requirements :strips)
  (:predicates (clear ?x) (ontable ?x) (handempty) (holding ?x) (on ?x ?y))
  (:action pick-up
    :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (not (ontable ?x)) (not (clear ?x)) (not (handempty)) (holding ?x)))
  (:action put-down
    :parameters (?x)
    :precondition (holding ?x)
    :effect (and (not (holding ?x)) (clear ?x) (handempty) (ontable ?x)))
  (:action stack
    :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (not (holding ?x)) (not (clear ?y)) (clear ?x) (handempty) (on ?x ?y)))
  (:action unstack
    :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (clear ?x)) (not (handempty)) (not (on ?x ?y)))))
)";
    case BenchDomain::gripper:
        return R"((define (domain gripper)
  (:requirements :strips :typing)
  (:types room ball gripper)
  (:predicates (at-robby ?r - room) (at ?b - ball ?r - room)
               (free ?g - gripper) (carry ?b - ball ?g - gripper))
  (:action move
    :parameters (?from - room ?to - room)
    :precondition (at-robby ?from)
    :effect (and (at-robby ?to) (not (at-robby ?from))))
  (:action pick
    :parameters (?b - ball ?r - room ?g - gripper)
    :precondition (and (at ?b ?r) (at-robby ?r) (free ?g))
    :effect (and (carry ?b ?g) (not (at ?b ?r)) (not (free ?g))))
  (:action drop
    :parameters (?b - ball ?r - room ?g - gripper)
    :precondition (and (carry ?b ?g) (at-robby ?r))
    :effect (and (at ?b ?r) (free ?g) (not (carry ?b ?g)))))
)";
    case BenchDomain::ferry:
        return R"((define (domain ferry)
  (:requirements :strips :typing)
  (:types car location)
  (:predicates (at-ferry ?l - location) (at ?c - car ?l - location)
               (empty-ferry) (on ?c - car))
  (:action sail
    :parameters (?from - location ?to - location)
    :precondition (at-ferry ?from)
    :effect (and (at-ferry ?to) (not (at-ferry ?from))))
  (:action board
    :parameters (?c - car ?loc - location)
    :precondition (and (at ?c ?loc) (at-ferry ?loc) (empty-ferry))
    :effect (and (on ?c) (not (at ?c ?loc)) (not (empty-ferry))))
  (:action debark
    :parameters (?c - car ?loc - location)
    :precondition (and (on ?c) (at-ferry ?loc))
    :effect (and (at ?c ?loc) (not (on ?c)) (empty-ferry))))
)";
    }
    return "";
}

struct GenParams {
    int blocks = 5;     // blocksworld
    int balls = 4;      // gripper
    int cars = 3;       // ferry
    int locations = 3;  // ferry
};

struct GeneratedProblem {
    std::string name;
    std::string pddl;
};

namespace gen_detail {

// mt19937_64 is fully specified by the standard and the bound is taken by
// modulo, so generated instances are identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() {
        return engine_();
    }

    int below(int n) {
        return static_cast<int>(next() % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Applies `steps` uniformly random applicable actions starting from `from`.
inline State random_walk(const GroundTask& task, const State& from, Rng& rng, int steps) {
    State s = from;
    std::vector<int> applicable_ids;
    for (int k = 0; k < steps; ++k) {
        applicable_ids.clear();
        for (int ai = 0; ai < task.num_actions(); ++ai) {
            if (applicable(s, task.actions[ai]))
                applicable_ids.push_back(ai);
        }
        if (applicable_ids.empty())
            break;
        s = apply_unchecked(s, task.actions[applicable_ids[rng.below(
                static_cast<int>(applicable_ids.size()))]]);
    }
    return s;
}

// Atoms of `s` whose predicate is in `keep`, as "(pred args)" strings in
// id (= lexicographic) order.
inline std::vector<std::string> project_goal(const GroundTask& task, const State& s,
                                             const std::set<std::string>& keep) {
    std::vector<std::string> out;
    for (int id : s.members()) {
        if (keep.count(task.atoms[id].predicate))
            out.push_back(task.atoms[id].display());
    }
    return out;
}

inline std::string problem_text(const std::string& problem_name, const std::string& domain_name,
                                const std::string& objects_section,
                                const std::vector<std::string>& init_atoms,
                                const std::vector<std::string>& goal_atoms) {
    std::string out = "(define (problem " + problem_name + ")\n";
    out += "  (:domain " + domain_name + ")\n";
    out += "  (:objects " + objects_section + ")\n";
    out += "  (:init";
    for (const auto& atom : init_atoms)
        out += " " + atom;
    out += ")\n";
    out += "  (:goal (and";
    for (const auto& atom : goal_atoms)
        out += " " + atom;
    out += ")))\n";
    return out;
}

// Finishes a walk in a canonical resting position by applying the named
// cleanup action for every atom of `trigger_pred`, e.g. put-down for every
// held block.
inline State settle(const GroundTask& task, State s, const std::string& trigger_pred,
                    const std::function<std::string(const Atom&, const State&)>& cleanup_signature) {
    while (true) {
        int trigger = -1;
        for (int id : s.members()) {
            if (task.atoms[id].predicate == trigger_pred) {
                trigger = id;
                break;
            }
        }
        if (trigger < 0)
            return s;
        int action = task.action_id(cleanup_signature(task.atoms[trigger], s));
        s = apply(s, task.actions[action]);
    }
}

inline std::string find_where(const GroundTask& task, const State& s, const std::string& pred) {
    for (int id : s.members()) {
        if (task.atoms[id].predicate == pred)
            return task.atoms[id].args.back();
    }
    throw std::logic_error("no atom with predicate " + pred);
}

// Walks away from init until the projected goal is not already satisfied
// there, so generated instances require at least one action. A goal can
// still coincide with init after the retry budget; that instance is merely
// trivial, not wrong.
inline std::vector<std::string> walk_to_goal(
    const GroundTask& task, Rng& rng, int steps,
    const std::string& trigger_pred,
    const std::function<std::string(const Atom&, const State&)>& cleanup_signature,
    const std::set<std::string>& goal_preds) {
    State end = task.init;
    for (int attempt = 0; attempt < 20; ++attempt) {
        end = random_walk(task, end, rng, steps);
        end = settle(task, end, trigger_pred, cleanup_signature);
        bool trivial = true;
        for (int id : end.members()) {
            if (goal_preds.count(task.atoms[id].predicate) && !task.init.contains(id)) {
                trivial = false;
                break;
            }
        }
        if (!trivial)
            break;
    }
    return project_goal(task, end, goal_preds);
}

inline GeneratedProblem blocksworld_problem(const Domain& domain, int blocks,
                                            std::uint64_t seed, int index) {
    Rng rng(mix(seed, index));
    std::vector<std::string> names;
    for (int i = 1; i <= blocks; ++i)
        names.push_back("b" + std::to_string(i));

    // Random stacks: shuffled blocks dealt onto the table or an existing top.
    std::vector<int> order(blocks);
    for (int i = 0; i < blocks; ++i)
        order[i] = i;
    for (int i = blocks - 1; i > 0; --i)
        std::swap(order[i], order[rng.below(i + 1)]);
    std::vector<std::vector<int>> stacks;
    for (int b : order) {
        if (stacks.empty() || rng.below(2) == 0)
            stacks.push_back({b});
        else
            stacks[rng.below(static_cast<int>(stacks.size()))].push_back(b);
    }

    std::vector<std::string> init = {"(handempty)"};
    for (const auto& stack : stacks) {
        init.push_back("(ontable " + names[stack[0]] + ")");
        for (std::size_t i = 1; i < stack.size(); ++i)
            init.push_back("(on " + names[stack[i]] + " " + names[stack[i - 1]] + ")");
        init.push_back("(clear " + names[stack.back()] + ")");
    }

    std::string objects;
    for (int i = 0; i < blocks; ++i)
        objects += (i ? " " : "") + names[i];

    std::string problem_name = "blocksworld-n" + std::to_string(blocks) + "-s"
        + std::to_string(seed) + "-p" + std::to_string(index);
    std::string no_goal = problem_text(problem_name, "blocksworld", objects, init, {});
    GroundTask task = ground(domain, parse_problem(no_goal, domain));

    auto goal = walk_to_goal(
        task, rng, blocks + rng.below(3 * blocks + 1), "holding",
        [](const Atom& held, const State&) { return "put-down " + held.args[0]; },
        {"on", "ontable"});
    return {problem_name, problem_text(problem_name, "blocksworld", objects, init, goal)};
}

inline GeneratedProblem gripper_problem(const Domain& domain, int balls,
                                        std::uint64_t seed, int index) {
    Rng rng(mix(seed, index));
    const std::vector<std::string> rooms = {"rooma", "roomb"};
    std::vector<std::string> init = {"(free left)", "(free right)",
                                     "(at-robby " + rooms[rng.below(2)] + ")"};
    std::string ball_names;
    for (int i = 1; i <= balls; ++i) {
        std::string b = "ball" + std::to_string(i);
        ball_names += (i > 1 ? " " : "") + b;
        init.push_back("(at " + b + " " + rooms[rng.below(2)] + ")");
    }
    std::string objects = "rooma roomb - room " + ball_names + " - ball left right - gripper";

    std::string problem_name = "gripper-n" + std::to_string(balls) + "-s"
        + std::to_string(seed) + "-p" + std::to_string(index);
    std::string no_goal = problem_text(problem_name, "gripper", objects, init, {});
    GroundTask task = ground(domain, parse_problem(no_goal, domain));

    auto goal = walk_to_goal(
        task, rng, 2 * balls + rng.below(4 * balls + 1), "carry",
        [&task](const Atom& carried, const State& s) {
            return "drop " + carried.args[0] + " " + find_where(task, s, "at-robby")
                + " " + carried.args[1];
        },
        {"at"});
    return {problem_name, problem_text(problem_name, "gripper", objects, init, goal)};
}

inline GeneratedProblem ferry_problem(const Domain& domain, int cars, int locations,
                                      std::uint64_t seed, int index) {
    Rng rng(mix(seed, index));
    std::vector<std::string> locs, car_names;
    for (int i = 1; i <= locations; ++i)
        locs.push_back("l" + std::to_string(i));
    for (int i = 1; i <= cars; ++i)
        car_names.push_back("c" + std::to_string(i));

    std::vector<std::string> init = {"(empty-ferry)",
                                     "(at-ferry " + locs[rng.below(locations)] + ")"};
    for (const auto& car : car_names)
        init.push_back("(at " + car + " " + locs[rng.below(locations)] + ")");

    std::string objects;
    for (std::size_t i = 0; i < car_names.size(); ++i)
        objects += (i ? " " : "") + car_names[i];
    objects += " - car ";
    for (std::size_t i = 0; i < locs.size(); ++i)
        objects += (i ? " " : "") + locs[i];
    objects += " - location";

    std::string problem_name = "ferry-n" + std::to_string(cars) + "x"
        + std::to_string(locations) + "-s" + std::to_string(seed) + "-p" + std::to_string(index);
    std::string no_goal = problem_text(problem_name, "ferry", objects, init, {});
    GroundTask task = ground(domain, parse_problem(no_goal, domain));

    auto goal = walk_to_goal(
        task, rng, 2 * cars + rng.below(4 * cars + 1), "on",
        [&task](const Atom& aboard, const State& s) {
            return "debark " + aboard.args[0] + " " + find_where(task, s, "at-ferry");
        },
        {"at"});
    return {problem_name, problem_text(problem_name, "ferry", objects, init, goal)};
}

}  // namespace gen_detail

/*
  Generates `count` problems, deterministically in (seed, index) and
  solvable by construction: the goal is the projection of a state actually
  reached by a random walk from the initial state.
*/
inline std::vector<GeneratedProblem> generate_problems(BenchDomain which, const GenParams& params,
                                                       int count, std::uint64_t seed) {
    if (count < 0)
        throw std::invalid_argument("count must be >= 0");
    switch (which) {
    case BenchDomain::blocksworld:
        if (params.blocks < 2)
            throw std::invalid_argument("blocksworld needs at least 2 blocks");
        break;
    case BenchDomain::gripper:
        if (params.balls < 1)
            throw std::invalid_argument("gripper needs at least 1 ball");
        break;
    case BenchDomain::ferry:
        if (params.cars < 1 || params.locations < 2)
            throw std::invalid_argument("ferry needs >= 1 car and >= 2 locations");
        break;
    }

    Domain domain = parse_domain(domain_pddl(which));
    std::vector<GeneratedProblem> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        switch (which) {
        case BenchDomain::blocksworld:
            out.push_back(gen_detail::blocksworld_problem(domain, params.blocks, seed, i));
            break;
        case BenchDomain::gripper:
            out.push_back(gen_detail::gripper_problem(domain, params.balls, seed, i));
            break;
        case BenchDomain::ferry:
            out.push_back(gen_detail::ferry_problem(domain, params.cars, params.locations,
                                                    seed, i));
            break;
        }
    }
    return out;
}

}  // namespace macroforge
