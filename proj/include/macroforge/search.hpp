#pragma once

#include <chrono>
#include <cstdio>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "macroforge/strips.hpp"

namespace macroforge {

// Heuristic value of a state proven unreachable in the delete-free
// relaxation. Such states are pruned, so g + h never overflows.
constexpr int kUnreachable = std::numeric_limits<int>::max();

struct ZeroHeuristic {
    int operator()(const State&) const {
        return 0;
    }
};

/*
  FF-style relaxed-planning-graph heuristic. The graph is built by counted
  fixpoint iteration over the delete-free task; the estimate is the size of
  a relaxed plan extracted backwards from the goal layer.

  Extraction is deterministic: goals are processed latest layer first, in
  atom-id order, and the achiever for an atom is the lowest-id action among
  those that become applicable earliest in the graph. Selected achievers are
  counted once per layer; their preconditions become subgoals at the layer
  where they first appear.
*/
class FFHeuristic {
public:
    explicit FFHeuristic(const GroundTask& task) : task_(&task) {
        consumers_.resize(task.num_atoms());
        achievers_.resize(task.num_atoms());
        for (int ai = 0; ai < task.num_actions(); ++ai) {
            for (int p : task.actions[ai].pre)
                consumers_[p].push_back(ai);
            for (int p : task.actions[ai].add)
                achievers_[p].push_back(ai);
        }
    }

    int operator()(const State& s) const {
        const GroundTask& task = *task_;
        if (task.goal_satisfied(s))
            return 0;

        const int num_atoms = task.num_atoms();
        const int num_actions = task.num_actions();
        std::vector<int> atom_layer(num_atoms, -1);
        std::vector<int> action_layer(num_actions, -1);
        std::vector<int> missing(num_actions);

        std::vector<int> current = s.members();
        for (int p : current)
            atom_layer[p] = 0;
        int goal_remaining = 0;
        for (int g : task.goal) {
            if (atom_layer[g] != 0)
                ++goal_remaining;
        }

        std::vector<int> ready;
        for (int ai = 0; ai < num_actions; ++ai) {
            missing[ai] = static_cast<int>(task.actions[ai].pre.size());
            if (missing[ai] == 0) {
                action_layer[ai] = 0;
                ready.push_back(ai);
            }
        }

        int last_layer = 0;
        for (int layer = 0;; ++layer) {
            for (int p : current) {
                for (int ai : consumers_[p]) {
                    if (--missing[ai] == 0) {
                        action_layer[ai] = layer;
                        ready.push_back(ai);
                    }
                }
            }
            std::vector<int> next;
            for (int ai : ready) {
                for (int p : task.actions[ai].add) {
                    if (atom_layer[p] < 0) {
                        atom_layer[p] = layer + 1;
                        next.push_back(p);
                        if (task.goal_mask.contains(p))
                            --goal_remaining;
                    }
                }
            }
            ready.clear();
            if (goal_remaining == 0) {
                last_layer = layer + 1;
                break;
            }
            if (next.empty())
                return kUnreachable;
            current = std::move(next);
        }

        // Backward extraction.
        std::vector<std::vector<int>> goals_at(last_layer + 1);
        std::vector<char> marked(num_atoms, 0);
        for (int g : task.goal) {
            if (atom_layer[g] > 0) {
                goals_at[atom_layer[g]].push_back(g);
                marked[g] = 1;
            }
        }
        int plan_size = 0;
        std::vector<int> chosen_scratch;
        for (int layer = last_layer; layer >= 1; --layer) {
            std::sort(goals_at[layer].begin(), goals_at[layer].end());
            chosen_scratch.clear();
            for (std::size_t gi = 0; gi < goals_at[layer].size(); ++gi) {
                int atom = goals_at[layer][gi];
                int best = -1;
                for (int ai : achievers_[atom]) {
                    if (action_layer[ai] < 0 || action_layer[ai] >= layer)
                        continue;
                    if (best < 0 || action_layer[ai] < action_layer[best])
                        best = ai;  // achievers_ is id-ascending, so ties keep the lowest id
                }
                if (std::find(chosen_scratch.begin(), chosen_scratch.end(), best)
                    == chosen_scratch.end()) {
                    chosen_scratch.push_back(best);
                    ++plan_size;
                }
                for (int p : task.actions[best].pre) {
                    if (atom_layer[p] > 0 && !marked[p]) {
                        marked[p] = 1;
                        goals_at[atom_layer[p]].push_back(p);
                    }
                }
            }
        }
        return plan_size;
    }

private:
    const GroundTask* task_;
    std::vector<std::vector<int>> consumers_;
    std::vector<std::vector<int>> achievers_;
};

// Convenience form; builds the graph machinery per call. Searches should
// construct one FFHeuristic per task instead.
inline int h_ff(const GroundTask& task, const State& s) {
    return FFHeuristic(task)(s);
}

enum class Outcome { solved, unsolvable, timeout, memory_out };

inline const char* outcome_name(Outcome outcome) {
    switch (outcome) {
    case Outcome::solved: return "solved";
    case Outcome::unsolvable: return "unsolvable";
    case Outcome::timeout: return "timeout";
    case Outcome::memory_out: return "memory-out";
    }
    return "?";
}

struct SearchLimits {
    double timeout_seconds = std::numeric_limits<double>::infinity();
    std::uint64_t max_generated = 0;  // 0 = unlimited; approximates a memory cap
    bool record_trace = false;        // capture the expansion order (tests)
};

struct SearchResult {
    Outcome outcome = Outcome::unsolvable;
    Plan plan;  // meaningful iff outcome == solved
    std::uint64_t expanded = 0;
    std::uint64_t generated = 0;
    double seconds = 0;
    std::uint64_t macro_applications = 0;  // enhanced search only
    std::vector<State> expansion_trace;    // filled when record_trace
};

// One machine-readable line per run: problem,outcome,cost,expanded,generated,seconds.
// The cost field is empty when the run did not solve.
inline std::string result_record(const std::string& problem, const SearchResult& r) {
    char seconds[32];
    std::snprintf(seconds, sizeof seconds, "%.6f", r.seconds);
    std::string cost = r.outcome == Outcome::solved ? std::to_string(r.plan.cost()) : "";
    return problem + "," + outcome_name(r.outcome) + "," + cost + ","
        + std::to_string(r.expanded) + "," + std::to_string(r.generated) + "," + seconds;
}

// Incoming edge of a search node: a primitive action, or the length-k prefix
// of a macro applied at the parent.
struct Step {
    int action = -1;
    int macro = -1;
    int prefix = 0;

    bool is_root() const {
        return action < 0 && macro < 0;
    }
};

struct SearchNode {
    State state;
    int g = 0;
    int h = 0;
    std::uint32_t parent = UINT32_MAX;
    Step step;
};

/*
  Open/closed bookkeeping. `best` indexes both the pending-best g (open) and
  the expanded-best g (closed) per state; entries in the priority queue are
  lazily invalidated when a better g supersedes them. f-ties break toward
  larger g, then toward the smaller generation sequence number, which makes
  expansion order deterministic.
*/
struct Frontier {
    struct Entry {
        int f, g;
        std::uint64_t seq;
        std::uint32_t node;
    };
    struct EntryOrder {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.f != b.f)
                return a.f > b.f;
            if (a.g != b.g)
                return a.g < b.g;
            return a.seq > b.seq;
        }
    };
    struct BestInfo {
        int g;
        std::uint32_t node;
        bool closed;
    };

    std::priority_queue<Entry, std::vector<Entry>, EntryOrder> open;
    std::unordered_map<State, BestInfo, StateHash> best;
    std::uint64_t next_seq = 0;
};

namespace search_detail {

// Duplicate handling shared by the baseline and the macro-enhanced search:
// keep the strictly smaller g, reopening closed states.
template <typename H>
void consider(std::vector<SearchNode>& arena, Frontier& frontier,
              H& heuristic, SearchResult& result, const State& state, int g,
              std::uint32_t parent, Step step) {
    auto it = frontier.best.find(state);
    if (it != frontier.best.end() && g >= it->second.g)
        return;
    int h = heuristic(state);
    if (h >= kUnreachable)
        return;
    auto node_id = static_cast<std::uint32_t>(arena.size());
    arena.push_back({state, g, h, parent, step});
    if (it == frontier.best.end())
        frontier.best.emplace(state, Frontier::BestInfo{g, node_id, false});
    else
        it->second = {g, node_id, false};
    frontier.open.push({g + h, g, frontier.next_seq++, node_id});
    ++result.generated;
}

inline Plan extract_primitive_chain(const std::vector<SearchNode>& arena, std::uint32_t node,
                                    const GroundTask& task) {
    std::vector<std::string> steps;
    for (std::uint32_t n = node; !arena[n].step.is_root(); n = arena[n].parent)
        steps.push_back(task.actions[arena[n].step.action].signature);
    std::reverse(steps.begin(), steps.end());
    return Plan{std::move(steps)};
}

}  // namespace search_detail

/*
  Forward-chaining A* over the ground task. Returns a validated-by-
  construction plan on success; timeouts and the generated-node cap are
  outcomes, not errors.
*/
template <typename H>
SearchResult astar(const GroundTask& task, H&& heuristic, const SearchLimits& limits = {}) {
    auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    SearchResult result;
    std::vector<SearchNode> arena;
    Frontier frontier;

    search_detail::consider(arena, frontier, heuristic, result, task.init, 0,
                            UINT32_MAX, Step{});

    while (!frontier.open.empty()) {
        if (elapsed() > limits.timeout_seconds) {
            result.outcome = Outcome::timeout;
            result.seconds = elapsed();
            return result;
        }
        if (limits.max_generated && result.generated >= limits.max_generated) {
            result.outcome = Outcome::memory_out;
            result.seconds = elapsed();
            return result;
        }

        Frontier::Entry entry = frontier.open.top();
        frontier.open.pop();
        State current = arena[entry.node].state;
        auto it = frontier.best.find(current);
        if (it->second.closed || it->second.g != entry.g || it->second.node != entry.node)
            continue;  // superseded entry
        it->second.closed = true;

        ++result.expanded;
        if (limits.record_trace)
            result.expansion_trace.push_back(current);

        if (task.goal_satisfied(current)) {
            result.outcome = Outcome::solved;
            result.plan = search_detail::extract_primitive_chain(arena, entry.node, task);
            result.seconds = elapsed();
            return result;
        }

        int g = arena[entry.node].g;
        for (int ai = 0; ai < task.num_actions(); ++ai) {
            const GroundAction& action = task.actions[ai];
            if (!applicable(current, action))
                continue;
            search_detail::consider(arena, frontier, heuristic, result,
                                    apply_unchecked(current, action), g + 1, entry.node,
                                    Step{ai, -1, 0});
        }
    }

    result.outcome = Outcome::unsolvable;
    result.seconds = elapsed();
    return result;
}

}  // namespace macroforge
