#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// work on plain string/int sets and never touch the bit-set or miner code
// paths they are checking.

#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "macroforge/mining.hpp"
#include "macroforge/pddl.hpp"
#include "macroforge/strips.hpp"

namespace testsupport {

class TestRng {
public:
    explicit TestRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() {
        return engine_();
    }

    int below(int n) {
        return static_cast<int>(next() % static_cast<std::uint64_t>(n));
    }

    double fraction() {
        return (static_cast<double>(next() % 1000000) + 1) / 1000000.0;  // (0, 1]
    }

private:
    std::mt19937_64 engine_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::string benchmark_file(const std::string& relative) {
    return std::string(MACROFORGE_BENCHMARK_DIR) + "/" + relative;
}

inline macroforge::GroundTask ground_benchmark(const std::string& domain_rel,
                                               const std::string& problem_rel) {
    macroforge::Domain domain = macroforge::parse_domain(slurp(benchmark_file(domain_rel)));
    return macroforge::ground(domain, macroforge::parse_problem(slurp(benchmark_file(problem_rel)),
                                                                domain));
}

inline macroforge::GroundTask bw2_task() {
    return ground_benchmark("blocksworld/domain.pddl", "blocksworld/p01.pddl");
}

inline std::set<std::string> atom_names_of(const macroforge::GroundTask& task,
                                           const macroforge::State& s) {
    std::set<std::string> out;
    for (int id : s.members())
        out.insert(task.atoms[id].signature());
    return out;
}

// ---- random synthetic tasks ----------------------------------------------

// A task described in plain strings, with the pre-canonical add/del lists
// (possibly overlapping) retained for transition-order oracles.
struct RawTask {
    struct Action {
        std::string name;
        std::set<std::string> pre, add, del;
    };
    std::vector<std::string> atoms;
    std::vector<Action> actions;
    std::set<std::string> init, goal;
};

inline RawTask random_raw_task(TestRng& rng, int max_atoms = 10, int max_actions = 8,
                               bool allow_add_del_overlap = true) {
    RawTask raw;
    int num_atoms = 2 + rng.below(max_atoms - 1);
    for (int i = 0; i < num_atoms; ++i)
        raw.atoms.push_back("p" + std::to_string(i));

    auto random_subset = [&](int max_size) {
        std::set<std::string> out;
        int size = rng.below(max_size + 1);
        for (int k = 0; k < size; ++k)
            out.insert(raw.atoms[rng.below(num_atoms)]);
        return out;
    };

    int num_actions = 1 + rng.below(max_actions);
    for (int i = 0; i < num_actions; ++i) {
        RawTask::Action action;
        action.name = "a" + std::to_string(i);
        action.pre = random_subset(3);
        action.add = random_subset(3);
        action.del = random_subset(3);
        if (!allow_add_del_overlap) {
            for (const auto& a : action.add)
                action.del.erase(a);
        }
        raw.actions.push_back(std::move(action));
    }
    raw.init = random_subset(num_atoms / 2 + 1);
    raw.goal = random_subset(2);
    return raw;
}

inline macroforge::GroundTask build_task(const RawTask& raw) {
    macroforge::TaskBuilder builder;
    std::map<std::string, int> ids;
    for (const auto& name : raw.atoms)
        ids[name] = builder.add_atom(macroforge::Atom{name, {}});
    auto to_ids = [&](const std::set<std::string>& names) {
        std::vector<int> out;
        for (const auto& name : names)
            out.push_back(ids.at(name));
        return out;
    };
    for (const auto& action : raw.actions)
        builder.add_action(action.name, to_ids(action.pre), to_ids(action.add),
                           to_ids(action.del));
    builder.set_init(to_ids(raw.init));
    builder.set_goal(to_ids(raw.goal));
    return builder.build();
}

// Naive string-set view of a ground task, for brute-force search oracles
// over instances that came out of the PDDL pipeline.
inline RawTask raw_of(const macroforge::GroundTask& task) {
    RawTask raw;
    for (const auto& atom : task.atoms)
        raw.atoms.push_back(atom.signature());
    for (const auto& action : task.actions) {
        RawTask::Action a;
        a.name = action.signature;
        for (int p : action.pre)
            a.pre.insert(task.atoms[p].signature());
        for (int p : action.add)
            a.add.insert(task.atoms[p].signature());
        for (int p : action.del)
            a.del.insert(task.atoms[p].signature());
        raw.actions.push_back(std::move(a));
    }
    for (int id : task.init.members())
        raw.init.insert(task.atoms[id].signature());
    for (int g : task.goal)
        raw.goal.insert(task.atoms[g].signature());
    return raw;
}

// ---- naive transition / validation oracle ---------------------------------

using NaiveState = std::set<std::string>;

inline bool naive_applicable(const NaiveState& s, const RawTask::Action& a) {
    for (const auto& p : a.pre) {
        if (!s.count(p))
            return false;
    }
    return true;
}

// (s - del) ∪ add on the pre-canonical lists; the delete-then-add order is
// what the production path is checked against.
inline NaiveState naive_apply(const NaiveState& s, const RawTask::Action& a) {
    NaiveState out = s;
    for (const auto& p : a.del)
        out.erase(p);
    for (const auto& p : a.add)
        out.insert(p);
    return out;
}

inline const RawTask::Action* find_action(const RawTask& raw, const std::string& name) {
    for (const auto& a : raw.actions) {
        if (a.name == name)
            return &a;
    }
    return nullptr;
}

inline bool naive_validate(const RawTask& raw, const std::vector<std::string>& steps) {
    NaiveState s = raw.init;
    for (const auto& name : steps) {
        const RawTask::Action* a = find_action(raw, name);
        if (!a || !naive_applicable(s, *a))
            return false;
        s = naive_apply(s, *a);
    }
    for (const auto& g : raw.goal) {
        if (!s.count(g))
            return false;
    }
    return true;
}

// Breadth-first enumeration over the naive transition function. Returns the
// reachable states (up to `cap`, nullopt when the cap is exceeded) and the
// optimal goal distance if a goal state was reached.
struct NaiveSearch {
    std::set<NaiveState> reachable;
    std::optional<int> optimal_cost;
    bool capped = false;
};

inline NaiveSearch naive_bfs(const RawTask& raw, std::size_t cap = 200) {
    NaiveSearch result;
    auto is_goal = [&](const NaiveState& s) {
        for (const auto& g : raw.goal) {
            if (!s.count(g))
                return false;
        }
        return true;
    };
    std::queue<std::pair<NaiveState, int>> queue;
    queue.push({raw.init, 0});
    result.reachable.insert(raw.init);
    while (!queue.empty()) {
        auto [s, dist] = queue.front();
        queue.pop();
        if (is_goal(s) && !result.optimal_cost)
            result.optimal_cost = dist;
        for (const auto& a : raw.actions) {
            if (!naive_applicable(s, a))
                continue;
            NaiveState succ = naive_apply(s, a);
            if (result.reachable.insert(succ).second) {
                if (result.reachable.size() > cap) {
                    result.capped = true;
                    return result;
                }
                queue.push({succ, dist + 1});
            }
        }
    }
    return result;
}

// Delete-free saturation: every atom reachable when deletes are ignored.
inline NaiveState naive_delete_free_fixpoint(const RawTask& raw, const NaiveState& from) {
    NaiveState reached = from;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& a : raw.actions) {
            if (!naive_applicable(reached, a))
                continue;
            for (const auto& p : a.add) {
                if (reached.insert(p).second)
                    changed = true;
            }
        }
    }
    return reached;
}

// ---- miner oracle ----------------------------------------------------------

// Enumerates every contiguous substring (up to max_length when non-zero),
// counts per-sequence support, filters by the threshold, and drops patterns
// contained contiguously in a longer frequent pattern.
inline std::vector<macroforge::Pattern> oracle_mine(const std::vector<std::vector<int>>& seqs,
                                                    int threshold, int max_length = 0) {
    std::map<std::vector<int>, std::set<int>> occurs_in;
    for (std::size_t si = 0; si < seqs.size(); ++si) {
        const auto& seq = seqs[si];
        for (std::size_t start = 0; start < seq.size(); ++start) {
            std::size_t longest = seq.size() - start;
            if (max_length > 0)
                longest = std::min(longest, static_cast<std::size_t>(max_length));
            for (std::size_t len = 1; len <= longest; ++len) {
                std::vector<int> sub(seq.begin() + start, seq.begin() + start + len);
                occurs_in[sub].insert(static_cast<int>(si));
            }
        }
    }
    std::vector<macroforge::Pattern> frequent;
    for (const auto& [items, in] : occurs_in) {
        if (static_cast<int>(in.size()) >= threshold)
            frequent.push_back({items, static_cast<int>(in.size())});
    }
    auto contains_contiguously = [](const std::vector<int>& big, const std::vector<int>& small) {
        if (small.size() > big.size())
            return false;
        for (std::size_t start = 0; start + small.size() <= big.size(); ++start) {
            if (std::equal(small.begin(), small.end(), big.begin() + start))
                return true;
        }
        return false;
    };
    std::vector<macroforge::Pattern> maximal;
    for (const auto& p : frequent) {
        bool contained = false;
        for (const auto& q : frequent) {
            if (q.items.size() > p.items.size() && contains_contiguously(q.items, p.items)) {
                contained = true;
                break;
            }
        }
        if (!contained)
            maximal.push_back(p);
    }
    std::sort(maximal.begin(), maximal.end(),
              [](const macroforge::Pattern& a, const macroforge::Pattern& b) {
                  return a.items < b.items;
              });
    return maximal;
}

inline std::vector<std::vector<int>> random_sequences(TestRng& rng, int max_sequences = 10,
                                                      int max_length = 8, int alphabet = 5) {
    int n = 1 + rng.below(max_sequences);
    std::vector<std::vector<int>> seqs(n);
    for (auto& seq : seqs) {
        int len = 1 + rng.below(max_length);
        for (int i = 0; i < len; ++i)
            seq.push_back(1 + rng.below(alphabet));
    }
    return seqs;
}

inline macroforge::SequenceDatabase db_from_sequences(const std::vector<std::vector<int>>& seqs,
                                                      int alphabet) {
    std::set<std::string> sigs;
    for (int i = 1; i <= alphabet; ++i)
        sigs.insert("item" + std::to_string(i));
    macroforge::SequenceDatabase db;
    db.dictionary = macroforge::ActionDictionary::from_signatures(sigs);
    // "item1" < "item2" < ..., so item k keeps id k for alphabets up to 9.
    db.sequences = seqs;
    for (std::size_t i = 0; i < seqs.size(); ++i)
        db.origins.push_back("seq" + std::to_string(i));
    return db;
}

}  // namespace testsupport
