#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace macroforge {

// A ground proposition: a predicate applied to object constants.
struct Atom {
    std::string predicate;
    std::vector<std::string> args;

    // Canonical form "pred arg1 arg2"; atom and action ids are assigned in
    // lexicographic order of these strings, so equal inputs always produce
    // equal id assignments.
    std::string signature() const {
        std::string s = predicate;
        for (const auto& a : args) {
            s += ' ';
            s += a;
        }
        return s;
    }

    std::string display() const {
        return "(" + signature() + ")";
    }

    bool operator==(const Atom&) const = default;
};

/*
  A set of ground atoms over a task's interned atom universe, stored as a
  fixed-width bit set. States are value types: applying an action returns a
  new state and never mutates the input.
*/
class State {
public:
    State() = default;

    explicit State(int universe_size)
        : num_bits_(universe_size),
          words_((universe_size + 63) / 64, 0) {}

    int universe_size() const {
        return num_bits_;
    }

    bool contains(int atom) const {
        return (words_[atom >> 6] >> (atom & 63)) & 1u;
    }

    void insert(int atom) {
        words_[atom >> 6] |= std::uint64_t(1) << (atom & 63);
    }

    void erase(int atom) {
        words_[atom >> 6] &= ~(std::uint64_t(1) << (atom & 63));
    }

    // true iff this ⊆ other
    bool subset_of(const State& other) const {
        for (std::size_t i = 0; i < words_.size(); ++i) {
            if (words_[i] & ~other.words_[i])
                return false;
        }
        return true;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (std::uint64_t w : words_)
            n += __builtin_popcountll(w);
        return n;
    }

    // Member atom ids in ascending order.
    std::vector<int> members() const {
        std::vector<int> out;
        out.reserve(count());
        for (int i = 0; i < num_bits_; ++i) {
            if (contains(i))
                out.push_back(i);
        }
        return out;
    }

    const std::vector<std::uint64_t>& words() const {
        return words_;
    }

    std::vector<std::uint64_t>& words() {
        return words_;
    }

    bool operator==(const State&) const = default;

private:
    int num_bits_ = 0;
    std::vector<std::uint64_t> words_;
};

struct StateHash {
    std::size_t operator()(const State& s) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::uint64_t w : s.words()) {
            h ^= w;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

/*
  A ground action a = (pre, add, del) over interned atom ids. The id lists
  are sorted; the masks mirror them for word-parallel application. The
  invariant add ∩ del = ∅ holds for every constructed action: the transition
  (s - del) ∪ add makes an atom in both lists an add, so the overlap is
  removed from del at construction time.
*/
struct GroundAction {
    std::string signature;  // "name obj1 obj2 ..."
    std::vector<int> pre;
    std::vector<int> add;
    std::vector<int> del;
    State pre_mask;
    State add_mask;
    State del_mask;
};

struct InapplicableError : std::runtime_error {
    int step_index;                  // -1 when not part of a sequence
    std::vector<int> missing_atoms;  // unmet precondition atom ids

    InapplicableError(const std::string& message, int step, std::vector<int> missing)
        : std::runtime_error(message),
          step_index(step),
          missing_atoms(std::move(missing)) {}
};

// Error while decoding one of the textual file formats (plans, SPMF files,
// pattern files). `line` is 1-based.
struct FormatError : std::runtime_error {
    int line;

    FormatError(const std::string& message, int line_no)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + message),
          line(line_no) {}
};

/*
  A grounded planning instance. Immutable after construction and safe to
  share across concurrent searches.
*/
struct GroundTask {
    std::vector<Atom> atoms;            // id -> atom, lexicographic by signature
    std::vector<GroundAction> actions;  // id -> action, lexicographic by signature
    State init;
    std::vector<int> goal;  // sorted atom ids
    State goal_mask;
    std::unordered_map<std::string, int> atom_ids;
    std::unordered_map<std::string, int> action_ids;

    int num_atoms() const {
        return static_cast<int>(atoms.size());
    }

    int num_actions() const {
        return static_cast<int>(actions.size());
    }

    // -1 when the signature is not interned.
    int atom_id(const std::string& signature) const {
        auto it = atom_ids.find(signature);
        return it == atom_ids.end() ? -1 : it->second;
    }

    int action_id(const std::string& signature) const {
        auto it = action_ids.find(signature);
        return it == action_ids.end() ? -1 : it->second;
    }

    bool goal_satisfied(const State& s) const {
        return goal_mask.subset_of(s);
    }
};

/*
  Accumulates atoms and actions under provisional ids, then builds a
  GroundTask with dense ids in lexicographic signature order. Both the PDDL
  grounder and synthetic tasks in tests go through this, so the id-order
  invariant holds everywhere.
*/
class TaskBuilder {
public:
    // Dedupes by signature; returns the provisional id.
    int add_atom(Atom atom) {
        std::string sig = atom.signature();
        auto it = atom_ids_.find(sig);
        if (it != atom_ids_.end())
            return it->second;
        int id = static_cast<int>(atoms_.size());
        atoms_.push_back(std::move(atom));
        atom_ids_.emplace(std::move(sig), id);
        return id;
    }

    int atom_id(const std::string& signature) const {
        auto it = atom_ids_.find(signature);
        return it == atom_ids_.end() ? -1 : it->second;
    }

    void add_action(const std::string& signature, std::vector<int> pre,
                    std::vector<int> add, std::vector<int> del) {
        if (!action_sigs_.insert(signature).second)
            throw std::invalid_argument("duplicate action signature: " + signature);
        canonicalize(pre);
        canonicalize(add);
        canonicalize(del);
        // del := del - add; see the GroundAction comment.
        std::vector<int> pruned_del;
        std::set_difference(del.begin(), del.end(), add.begin(), add.end(),
                            std::back_inserter(pruned_del));
        actions_.push_back({signature, std::move(pre), std::move(add), std::move(pruned_del)});
    }

    void set_init(std::vector<int> atoms) {
        init_ = std::move(atoms);
    }

    void set_goal(std::vector<int> atoms) {
        goal_ = std::move(atoms);
    }

    GroundTask build() const {
        GroundTask task;
        int n = static_cast<int>(atoms_.size());

        std::vector<int> order(n);
        for (int i = 0; i < n; ++i)
            order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return atoms_[a].signature() < atoms_[b].signature();
        });
        std::vector<int> remap(n);
        task.atoms.reserve(n);
        for (int new_id = 0; new_id < n; ++new_id) {
            remap[order[new_id]] = new_id;
            task.atoms.push_back(atoms_[order[new_id]]);
            task.atom_ids.emplace(task.atoms.back().signature(), new_id);
        }

        std::vector<const ProtoAction*> sorted_actions;
        sorted_actions.reserve(actions_.size());
        for (const auto& a : actions_)
            sorted_actions.push_back(&a);
        std::sort(sorted_actions.begin(), sorted_actions.end(),
                  [](const ProtoAction* a, const ProtoAction* b) {
                      return a->signature < b->signature;
                  });

        task.actions.reserve(actions_.size());
        for (const ProtoAction* proto : sorted_actions) {
            GroundAction action;
            action.signature = proto->signature;
            action.pre = remap_sorted(proto->pre, remap);
            action.add = remap_sorted(proto->add, remap);
            action.del = remap_sorted(proto->del, remap);
            action.pre_mask = mask_of(action.pre, n);
            action.add_mask = mask_of(action.add, n);
            action.del_mask = mask_of(action.del, n);
            task.action_ids.emplace(action.signature, static_cast<int>(task.actions.size()));
            task.actions.push_back(std::move(action));
        }

        std::vector<int> init = remap_sorted(init_, remap);
        task.init = mask_of(init, n);
        task.goal = remap_sorted(goal_, remap);
        task.goal_mask = mask_of(task.goal, n);
        return task;
    }

private:
    struct ProtoAction {
        std::string signature;
        std::vector<int> pre, add, del;
    };

    static void canonicalize(std::vector<int>& ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }

    std::vector<int> remap_sorted(const std::vector<int>& ids, const std::vector<int>& remap) const {
        std::vector<int> out;
        out.reserve(ids.size());
        for (int id : ids) {
            if (id < 0 || id >= static_cast<int>(atoms_.size()))
                throw std::out_of_range("atom id out of range: " + std::to_string(id));
            out.push_back(remap[id]);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    static State mask_of(const std::vector<int>& ids, int universe) {
        State s(universe);
        for (int id : ids)
            s.insert(id);
        return s;
    }

    std::vector<Atom> atoms_;
    std::unordered_map<std::string, int> atom_ids_;
    std::vector<ProtoAction> actions_;
    std::unordered_set<std::string> action_sigs_;
    std::vector<int> init_, goal_;
};

// true iff pre(a) ⊆ s
inline bool applicable(const State& s, const GroundAction& a) {
    return a.pre_mask.subset_of(s);
}

// γ(s, a) = (s - del(a)) ∪ add(a), without the precondition check.
inline State apply_unchecked(const State& s, const GroundAction& a) {
    State result = s;
    auto& words = result.words();
    const auto& del = a.del_mask.words();
    const auto& add = a.add_mask.words();
    for (std::size_t i = 0; i < words.size(); ++i)
        words[i] = (words[i] & ~del[i]) | add[i];
    return result;
}

inline std::vector<int> missing_preconditions(const State& s, const GroundAction& a) {
    std::vector<int> missing;
    for (int p : a.pre) {
        if (!s.contains(p))
            missing.push_back(p);
    }
    return missing;
}

inline State apply(const State& s, const GroundAction& a) {
    if (!applicable(s, a)) {
        throw InapplicableError("inapplicable action: " + a.signature, -1,
                                missing_preconditions(s, a));
    }
    return apply_unchecked(s, a);
}

// Left fold of apply; throws at the first inapplicable step, reporting its
// index.
inline State apply_sequence(const State& s, std::span<const int> action_ids,
                            const GroundTask& task) {
    State current = s;
    for (std::size_t k = 0; k < action_ids.size(); ++k) {
        const GroundAction& a = task.actions[action_ids[k]];
        if (!applicable(current, a)) {
            throw InapplicableError(
                "inapplicable at step " + std::to_string(k) + ": " + a.signature,
                static_cast<int>(k), missing_preconditions(current, a));
        }
        current = apply_unchecked(current, a);
    }
    return current;
}

// A solution candidate: ordered ground-action signatures.
struct Plan {
    std::vector<std::string> steps;

    int cost() const {
        return static_cast<int>(steps.size());
    }

    bool operator==(const Plan&) const = default;
};

struct PlanCheck {
    bool valid;
    std::string message;

    explicit operator bool() const {
        return valid;
    }
};

inline PlanCheck validate_plan(const GroundTask& task, const Plan& plan) {
    State s = task.init;
    for (std::size_t k = 0; k < plan.steps.size(); ++k) {
        int id = task.action_id(plan.steps[k]);
        if (id < 0)
            return {false, "unknown action at step " + std::to_string(k) + ": " + plan.steps[k]};
        const GroundAction& a = task.actions[id];
        if (!applicable(s, a)) {
            std::string msg = "inapplicable at step " + std::to_string(k) + ": " + a.signature
                + "; missing";
            for (int p : missing_preconditions(s, a))
                msg += " " + task.atoms[p].display();
            return {false, msg};
        }
        s = apply_unchecked(s, a);
    }
    if (!task.goal_satisfied(s)) {
        std::string msg = "goal not satisfied; missing";
        for (int g : task.goal) {
            if (!s.contains(g))
                msg += " " + task.atoms[g].display();
        }
        return {false, msg};
    }
    return {true, ""};
}

/*
  Plan file format, bit-exact: one step per line as "(name arg1 ... argk)",
  lowercase with single spaces; lines beginning with ';' are comments; the
  final line is the comment "; cost = <n>".
*/
inline std::string write_plan(const Plan& plan) {
    std::string out;
    for (const auto& step : plan.steps) {
        out += '(';
        out += step;
        out += ")\n";
    }
    out += "; cost = " + std::to_string(plan.cost()) + "\n";
    return out;
}

namespace detail {

inline std::string lowercased(std::string s) {
    for (char& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

}  // namespace detail

inline Plan read_plan(const std::string& text) {
    Plan plan;
    int line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos)
            continue;
        if (line[begin] == ';')
            continue;
        std::size_t end = line.find_last_not_of(" \t\r");
        if (line[begin] != '(' || line[end] != ')')
            throw FormatError("expected a parenthesized plan step", line_no);
        auto tokens = detail::split_ws(line.substr(begin + 1, end - begin - 1));
        if (tokens.empty())
            throw FormatError("empty plan step", line_no);
        std::string sig = detail::lowercased(tokens[0]);
        for (std::size_t i = 1; i < tokens.size(); ++i)
            sig += " " + detail::lowercased(tokens[i]);
        plan.steps.push_back(std::move(sig));
    }
    return plan;
}

}  // namespace macroforge
