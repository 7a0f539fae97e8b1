#pragma once

#include <chrono>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

#include "macroforge/mining.hpp"
#include "macroforge/search.hpp"
#include "macroforge/strips.hpp"

namespace macroforge {

// A mined pattern re-bound to a target task: an ordered list of ground
// actions applied as one search step. Macros have at least two steps; a
// one-step macro is just a primitive.
struct Macro {
    std::vector<int> steps;         // ground action ids in the target task
    std::vector<int> source_items;  // mined item ids (empty when read from a file)
    int support = 0;

    int length() const {
        return static_cast<int>(steps.size());
    }
};

struct MacroLibrary {
    std::vector<Macro> macros;
    double minsup = 0;      // provenance
    std::string corpus_id;  // provenance

    std::size_t size() const {
        return macros.size();
    }

    bool empty() const {
        return macros.empty();
    }
};

namespace macro_detail {

inline std::vector<std::string> step_signatures(const Macro& m, const GroundTask& task) {
    std::vector<std::string> sigs;
    sigs.reserve(m.steps.size());
    for (int id : m.steps)
        sigs.push_back(task.actions[id].signature);
    return sigs;
}

// Resolves signature sequences against the task and assembles the library:
// a sequence is kept only if every signature names a ground action of the
// task and it has at least two steps. Order is by descending support, then
// by step signatures; duplicate step sequences keep the higher support.
inline MacroLibrary assemble(std::vector<std::pair<SignaturePattern, std::vector<int>>> entries,
                             const GroundTask& task,
                             std::vector<std::string>* dropped) {
    struct Candidate {
        Macro macro;
        std::vector<std::string> sigs;
    };
    std::vector<Candidate> kept;
    for (auto& [pattern, items] : entries) {
        if (pattern.signatures.size() < 2) {
            if (dropped)
                dropped->push_back(pattern.signatures.empty() ? std::string("<empty>")
                                                              : pattern.signatures[0]);
            continue;
        }
        Macro macro;
        macro.support = pattern.support;
        macro.source_items = items;
        bool resolvable = true;
        for (const auto& sig : pattern.signatures) {
            int id = task.action_id(sig);
            if (id < 0) {
                resolvable = false;
                if (dropped)
                    dropped->push_back(sig);
                break;
            }
            macro.steps.push_back(id);
        }
        if (!resolvable)
            continue;
        kept.push_back({std::move(macro), std::move(pattern.signatures)});
    }

    std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
        if (a.macro.support != b.macro.support)
            return a.macro.support > b.macro.support;
        return a.sigs < b.sigs;
    });

    MacroLibrary library;
    for (auto& candidate : kept) {
        bool duplicate = false;
        for (const auto& existing : library.macros) {
            if (existing.steps == candidate.macro.steps) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate)
            library.macros.push_back(std::move(candidate.macro));
    }
    return library;
}

}  // namespace macro_detail

/*
  Turns mined patterns into macros for a target task. A pattern is encoded
  only when every decoded signature resolves to a ground action of the task;
  partial matches are dropped whole. Length-1 patterns are dropped.
*/
inline MacroLibrary encode_macros(const std::vector<Pattern>& patterns,
                                  const ActionDictionary& dict, const GroundTask& task) {
    std::vector<std::pair<SignaturePattern, std::vector<int>>> entries;
    entries.reserve(patterns.size());
    for (const auto& pattern : patterns) {
        SignaturePattern sp;
        sp.support = pattern.support;
        for (int item : pattern.items)
            sp.signatures.push_back(dict.signature(item));
        entries.emplace_back(std::move(sp), pattern.items);
    }
    return macro_detail::assemble(std::move(entries), task, nullptr);
}

// Same encoding for patterns already decoded to signatures (pattern files).
inline MacroLibrary encode_macros(const std::vector<SignaturePattern>& patterns,
                                  const GroundTask& task,
                                  std::vector<std::string>* dropped = nullptr) {
    std::vector<std::pair<SignaturePattern, std::vector<int>>> entries;
    entries.reserve(patterns.size());
    for (const auto& pattern : patterns)
        entries.emplace_back(pattern, std::vector<int>{});
    return macro_detail::assemble(std::move(entries), task, dropped);
}

// true iff the macro's steps apply in order from s.
inline bool macro_applicable(const GroundTask& task, const State& s, const Macro& m) {
    State current = s;
    for (int id : m.steps) {
        const GroundAction& action = task.actions[id];
        if (!applicable(current, action))
            return false;
        current = apply_unchecked(current, action);
    }
    return true;
}

// The intermediate states s^1..s^n reached by the macro's steps; throws at
// the first inapplicable step.
inline std::vector<State> apply_macro(const GroundTask& task, const State& s, const Macro& m) {
    std::vector<State> states;
    states.reserve(m.steps.size());
    State current = s;
    for (std::size_t k = 0; k < m.steps.size(); ++k) {
        const GroundAction& action = task.actions[m.steps[k]];
        if (!applicable(current, action)) {
            throw InapplicableError("macro inapplicable at step " + std::to_string(k) + ": "
                                    + action.signature,
                                    static_cast<int>(k), missing_preconditions(current, action));
        }
        current = apply_unchecked(current, action);
        states.push_back(current);
    }
    return states;
}

// Which intermediate states become search nodes when a macro fires.
enum class MacroSuccessors { all, final_only };

// Walks the parent chain; a macro edge with prefix k contributes that
// macro's first k primitive actions, so extracted plans contain primitives
// only.
inline Plan extract_plan(const std::vector<SearchNode>& arena, std::uint32_t goal_node,
                         const GroundTask& task, const MacroLibrary& library) {
    std::vector<std::string> steps;
    for (std::uint32_t n = goal_node; !arena[n].step.is_root(); n = arena[n].parent) {
        const Step& step = arena[n].step;
        if (step.macro >= 0) {
            const Macro& macro = library.macros[step.macro];
            for (int k = step.prefix - 1; k >= 0; --k)
                steps.push_back(task.actions[macro.steps[k]].signature);
        } else {
            steps.push_back(task.actions[step.action].signature);
        }
    }
    std::reverse(steps.begin(), steps.end());
    return Plan{std::move(steps)};
}

/*
  Macro-enhanced A*. Node expansion first fires every applicable macro,
  generating its intermediate states with g increased by the number of
  primitive steps taken, then generates the primitive-action successors.
  Open/closed bookkeeping matches the baseline: entries are superseded on a
  strictly smaller cost, and closed states reopen on a strictly smaller
  cost. With an empty library this reproduces the baseline search
  node-for-node.
*/
template <typename H>
SearchResult enhanced_astar(const GroundTask& task, const MacroLibrary& library, H&& heuristic,
                            const SearchLimits& limits = {},
                            MacroSuccessors successors = MacroSuccessors::all) {
    auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    SearchResult result;
    std::vector<SearchNode> arena;
    Frontier frontier;

    search_detail::consider(arena, frontier, heuristic, result, task.init, 0,
                            UINT32_MAX, Step{});

    std::vector<State> macro_states;
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
            continue;
        it->second.closed = true;

        ++result.expanded;
        if (limits.record_trace)
            result.expansion_trace.push_back(current);

        if (task.goal_satisfied(current)) {
            result.outcome = Outcome::solved;
            result.plan = extract_plan(arena, entry.node, task, library);
            result.seconds = elapsed();
            return result;
        }

        int g = arena[entry.node].g;
        for (int mi = 0; mi < static_cast<int>(library.macros.size()); ++mi) {
            const Macro& macro = library.macros[mi];
            macro_states.clear();
            State walk = current;
            bool applicable_here = true;
            for (int id : macro.steps) {
                const GroundAction& action = task.actions[id];
                if (!applicable(walk, action)) {
                    applicable_here = false;
                    break;
                }
                walk = apply_unchecked(walk, action);
                macro_states.push_back(walk);
            }
            if (!applicable_here)
                continue;
            ++result.macro_applications;
            if (successors == MacroSuccessors::all) {
                for (std::size_t k = 0; k < macro_states.size(); ++k) {
                    search_detail::consider(arena, frontier, heuristic, result, macro_states[k],
                                            g + static_cast<int>(k) + 1, entry.node,
                                            Step{-1, mi, static_cast<int>(k) + 1});
                }
            } else {
                search_detail::consider(arena, frontier, heuristic, result, macro_states.back(),
                                        g + macro.length(), entry.node,
                                        Step{-1, mi, macro.length()});
            }
        }

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

/*
  Macro library file: ';' header comments carrying the provenance, then one
  macro per line in the mined-pattern format.
*/
inline std::string write_macro_library(const MacroLibrary& library, const GroundTask& task,
                                       bool with_date = true) {
    char minsup[32];
    std::snprintf(minsup, sizeof minsup, "%g", library.minsup);
    std::string out = "; macroforge macro library\n";
    out += "; corpus: " + (library.corpus_id.empty() ? std::string("-") : library.corpus_id) + "\n";
    out += "; minsup: " + std::string(minsup) + "\n";
    if (with_date) {
        std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
        out += "; date: " + std::string(stamp) + "\n";
    }
    for (const auto& macro : library.macros) {
        auto sigs = macro_detail::step_signatures(macro, task);
        for (std::size_t i = 0; i < sigs.size(); ++i) {
            if (i > 0)
                out += " ; ";
            out += sigs[i];
        }
        out += " #SUP: " + std::to_string(macro.support) + "\n";
    }
    return out;
}

struct MacroLoadReport {
    MacroLibrary library;
    std::vector<std::string> dropped;  // signatures that failed to resolve
};

// Reading validates against the target task; entries that do not resolve
// are reported, not errors.
inline MacroLoadReport read_macro_library(const std::string& text, const GroundTask& task) {
    MacroLoadReport report;
    std::istringstream in(text);
    std::string line;
    auto value_after = [](const std::string& body, std::size_t prefix_len) {
        std::size_t v = body.find_first_not_of(" \t", prefix_len);
        return v == std::string::npos ? std::string() : body.substr(v);
    };
    while (std::getline(in, line)) {
        std::size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos || line[begin] != ';')
            continue;
        std::size_t key = line.find_first_not_of(" \t", begin + 1);
        if (key == std::string::npos)
            continue;
        std::string body = line.substr(key);
        if (body.rfind("corpus:", 0) == 0)
            report.library.corpus_id = value_after(body, 7);
        else if (body.rfind("minsup:", 0) == 0)
            report.library.minsup = std::strtod(value_after(body, 7).c_str(), nullptr);
    }

    std::vector<std::pair<SignaturePattern, std::vector<int>>> entries;
    for (auto& pattern : decode_patterns(text))
        entries.emplace_back(std::move(pattern), std::vector<int>{});
    MacroLibrary assembled = macro_detail::assemble(std::move(entries), task, &report.dropped);
    assembled.minsup = report.library.minsup;
    assembled.corpus_id = report.library.corpus_id;
    report.library = std::move(assembled);
    return report;
}

}  // namespace macroforge
