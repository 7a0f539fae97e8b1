#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "macroforge/strips.hpp"

namespace macroforge {

struct ParseError : std::runtime_error {
    int line, column;

    ParseError(const std::string& message, int line_no, int column_no)
        : std::runtime_error(std::to_string(line_no) + ":" + std::to_string(column_no)
                             + ": " + message),
          line(line_no),
          column(column_no) {}
};

// A syntactically valid construct outside the :strips/:typing subset.
struct UnsupportedFeatureError : ParseError {
    std::string feature;

    UnsupportedFeatureError(const std::string& feature_name, int line_no, int column_no)
        : ParseError("unsupported feature: " + feature_name, line_no, column_no),
          feature(feature_name) {}
};

struct SemanticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PredicateSchema {
    std::string name;
    std::vector<std::string> params;       // "?x", "?y", ...
    std::vector<std::string> param_types;  // parallel to params

    int arity() const {
        return static_cast<int>(params.size());
    }
};

// An atom over operator parameters and constants; terms starting with '?'
// are variables.
struct AtomTemplate {
    std::string predicate;
    std::vector<std::string> terms;
};

struct OperatorSchema {
    std::string name;
    std::vector<std::string> params;
    std::vector<std::string> param_types;
    std::vector<AtomTemplate> pre;  // positive literals only
    std::vector<AtomTemplate> add;
    std::vector<AtomTemplate> del;
};

struct Domain {
    std::string name;
    bool typing = false;
    std::map<std::string, std::string> type_parent;  // type -> supertype, rooted at "object"
    std::vector<PredicateSchema> predicates;
    std::vector<OperatorSchema> operators;
    std::vector<std::pair<std::string, std::string>> constants;  // (name, type)

    const PredicateSchema* find_predicate(const std::string& predicate_name) const {
        for (const auto& p : predicates) {
            if (p.name == predicate_name)
                return &p;
        }
        return nullptr;
    }

    // true iff `type` equals `ancestor` or derives from it.
    bool type_is_a(const std::string& type, const std::string& ancestor) const {
        if (ancestor == "object")
            return true;
        std::string current = type;
        int hops = 0;
        while (true) {
            if (current == ancestor)
                return true;
            if (current == "object")
                return false;
            auto it = type_parent.find(current);
            if (it == type_parent.end())
                return false;
            current = it->second;
            if (++hops > static_cast<int>(type_parent.size()) + 1)
                throw SemanticError("type hierarchy cycle at: " + type);
        }
    }
};

struct ProblemDef {
    std::string name;
    std::string domain_name;
    std::vector<std::pair<std::string, std::string>> objects;  // (name, type)
    std::vector<Atom> init;
    std::vector<Atom> goal;
};

namespace pddl_detail {

// ---- s-expression reader ----------------------------------------------

struct SExpr {
    bool is_list = false;
    std::string atom;  // lowercased token when !is_list
    std::vector<SExpr> items;
    int line = 0, column = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    struct Token {
        enum Kind { lparen, rparen, symbol, end } kind;
        std::string text;
        int line, column;
    };

    Token next() {
        skip_blank();
        Token t;
        t.line = line_;
        t.column = column_;
        if (pos_ >= text_.size()) {
            t.kind = Token::end;
            return t;
        }
        char c = text_[pos_];
        if (c == '(') {
            advance();
            t.kind = Token::lparen;
            return t;
        }
        if (c == ')') {
            advance();
            t.kind = Token::rparen;
            return t;
        }
        t.kind = Token::symbol;
        while (pos_ < text_.size()) {
            c = text_[pos_];
            if (c == '(' || c == ')' || c == ';' || std::isspace(static_cast<unsigned char>(c)))
                break;
            t.text += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            advance();
        }
        return t;
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_blank() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1, column_ = 1;
};

inline SExpr read_sexpr(Lexer& lexer, const Lexer::Token& first) {
    SExpr node;
    node.line = first.line;
    node.column = first.column;
    if (first.kind == Lexer::Token::symbol) {
        node.atom = first.text;
        return node;
    }
    if (first.kind == Lexer::Token::rparen)
        throw ParseError("unexpected ')'", first.line, first.column);
    if (first.kind == Lexer::Token::end)
        throw ParseError("unexpected end of input", first.line, first.column);
    node.is_list = true;
    while (true) {
        Lexer::Token t = lexer.next();
        if (t.kind == Lexer::Token::rparen)
            return node;
        if (t.kind == Lexer::Token::end) {
            throw ParseError("unbalanced parenthesis: '(' opened here is never closed",
                             first.line, first.column);
        }
        node.items.push_back(read_sexpr(lexer, t));
    }
}

inline SExpr read_top_level(const std::string& text) {
    Lexer lexer(text);
    Lexer::Token t = lexer.next();
    if (t.kind == Lexer::Token::end)
        throw ParseError("empty input", t.line, t.column);
    SExpr root = read_sexpr(lexer, t);
    Lexer::Token rest = lexer.next();
    if (rest.kind != Lexer::Token::end)
        throw ParseError("trailing input after top-level form", rest.line, rest.column);
    return root;
}

// ---- shared walkers -----------------------------------------------------

inline const std::string& expect_symbol(const SExpr& e, const char* what) {
    if (e.is_list)
        throw ParseError(std::string("expected ") + what, e.line, e.column);
    return e.atom;
}

// Parses "?x ?y - type ?z - type2 ..." (or plain names for objects and
// constants). Untyped entries default to "object".
inline void parse_typed_list(const std::vector<SExpr>& items, std::size_t begin,
                             bool require_variables,
                             std::vector<std::string>& names,
                             std::vector<std::string>& types) {
    std::vector<std::string> pending;
    for (std::size_t i = begin; i < items.size(); ++i) {
        const std::string& tok = expect_symbol(items[i], "a name in a typed list");
        if (tok == "-") {
            if (i + 1 >= items.size())
                throw ParseError("missing type after '-'", items[i].line, items[i].column);
            const SExpr& type_expr = items[++i];
            if (type_expr.is_list) {
                // (either t1 t2) and friends
                std::string feature = type_expr.items.empty()
                    ? std::string("()")
                    : type_expr.items[0].atom;
                throw UnsupportedFeatureError(feature + " type", type_expr.line, type_expr.column);
            }
            for (const auto& name : pending) {
                names.push_back(name);
                types.push_back(type_expr.atom);
            }
            pending.clear();
        } else {
            if (require_variables && tok[0] != '?')
                throw ParseError("expected a ?variable, got: " + tok, items[i].line, items[i].column);
            if (!require_variables && tok[0] == '?')
                throw ParseError("unexpected ?variable: " + tok, items[i].line, items[i].column);
            pending.push_back(tok);
        }
    }
    for (const auto& name : pending) {
        names.push_back(name);
        types.push_back("object");
    }
}

inline AtomTemplate parse_atom_template(const SExpr& e) {
    if (!e.is_list || e.items.empty() || e.items[0].is_list)
        throw ParseError("expected an atom (pred term ...)", e.line, e.column);
    AtomTemplate atom;
    atom.predicate = e.items[0].atom;
    for (std::size_t i = 1; i < e.items.size(); ++i)
        atom.terms.push_back(expect_symbol(e.items[i], "an atom argument"));
    return atom;
}

// Connectives outside the strict STRIPS subset become hard errors here,
// never silent drops.
inline void reject_non_strips(const std::string& head, int line, int column) {
    static const std::set<std::string> rejected = {
        "or", "not", "imply", "exists", "forall", "when",
        "=", "either", "increase", "decrease", "assign",
    };
    if (rejected.count(head))
        throw UnsupportedFeatureError(head, line, column);
}

// Precondition / goal: a positive atom or (and atom*).
inline std::vector<AtomTemplate> parse_conjunction(const SExpr& e) {
    std::vector<AtomTemplate> atoms;
    if (!e.is_list)
        throw ParseError("expected a condition", e.line, e.column);
    if (!e.items.empty() && !e.items[0].is_list && e.items[0].atom == "and") {
        for (std::size_t i = 1; i < e.items.size(); ++i) {
            const SExpr& sub = e.items[i];
            if (sub.is_list && !sub.items.empty() && !sub.items[0].is_list)
                reject_non_strips(sub.items[0].atom, sub.line, sub.column);
            atoms.push_back(parse_atom_template(sub));
        }
        return atoms;
    }
    if (e.items.empty())
        return atoms;  // () — empty condition
    reject_non_strips(e.items[0].atom, e.line, e.column);
    atoms.push_back(parse_atom_template(e));
    return atoms;
}

// Effect: a literal or (and literal*), where a literal is an atom or
// (not atom).
inline void parse_effect(const SExpr& e, std::vector<AtomTemplate>& add,
                         std::vector<AtomTemplate>& del) {
    if (!e.is_list || e.items.empty())
        throw ParseError("expected an effect", e.line, e.column);
    const std::string& head = e.items[0].is_list ? std::string() : e.items[0].atom;
    if (head == "and") {
        for (std::size_t i = 1; i < e.items.size(); ++i)
            parse_effect(e.items[i], add, del);
        return;
    }
    if (head == "not") {
        if (e.items.size() != 2)
            throw ParseError("(not ...) takes exactly one atom", e.line, e.column);
        del.push_back(parse_atom_template(e.items[1]));
        return;
    }
    static const std::set<std::string> rejected = {
        "forall", "when", "or", "increase", "decrease", "assign", "=",
    };
    if (rejected.count(head))
        throw UnsupportedFeatureError(head, e.line, e.column);
    add.push_back(parse_atom_template(e));
}

inline void check_requirements(const SExpr& section, Domain& domain) {
    for (std::size_t i = 1; i < section.items.size(); ++i) {
        const std::string& flag = expect_symbol(section.items[i], "a requirement flag");
        if (flag == ":strips")
            continue;
        if (flag == ":typing") {
            domain.typing = true;
            continue;
        }
        throw UnsupportedFeatureError(flag, section.items[i].line, section.items[i].column);
    }
}

inline void check_schema_variables(const OperatorSchema& op,
                                   const std::vector<AtomTemplate>& atoms,
                                   const char* where) {
    for (const auto& atom : atoms) {
        for (const auto& term : atom.terms) {
            if (term[0] != '?')
                continue;
            if (std::find(op.params.begin(), op.params.end(), term) == op.params.end()) {
                throw SemanticError("action " + op.name + ": variable " + term + " in "
                                    + where + " is not a parameter");
            }
        }
    }
}

inline void check_atom_arity(const Domain& domain, const AtomTemplate& atom,
                             const std::string& context) {
    const PredicateSchema* pred = domain.find_predicate(atom.predicate);
    if (!pred)
        throw SemanticError(context + ": unknown predicate (" + atom.predicate + ")");
    if (pred->arity() != static_cast<int>(atom.terms.size())) {
        throw SemanticError(context + ": predicate (" + atom.predicate + ") expects "
                            + std::to_string(pred->arity()) + " arguments, got "
                            + std::to_string(atom.terms.size()));
    }
}

}  // namespace pddl_detail

// Parses a PDDL domain restricted to :strips with optional :typing. Anything
// outside that subset raises ParseError/UnsupportedFeatureError with the
// offending position.
inline Domain parse_domain(const std::string& text) {
    using namespace pddl_detail;
    SExpr root = read_top_level(text);
    if (!root.is_list || root.items.empty() || root.items[0].atom != "define")
        throw ParseError("expected (define (domain ...) ...)", root.line, root.column);

    Domain domain;
    bool saw_name = false;
    for (std::size_t i = 1; i < root.items.size(); ++i) {
        const SExpr& section = root.items[i];
        if (!section.is_list || section.items.empty())
            throw ParseError("expected a (:section ...)", section.line, section.column);
        const std::string& head = expect_symbol(section.items[0], "a section keyword");

        if (head == "domain") {
            if (section.items.size() != 2)
                throw ParseError("(domain name) takes one name", section.line, section.column);
            domain.name = expect_symbol(section.items[1], "the domain name");
            saw_name = true;
        } else if (head == ":requirements") {
            check_requirements(section, domain);
        } else if (head == ":types") {
            std::vector<std::string> names, parents;
            parse_typed_list(section.items, 1, false, names, parents);
            for (std::size_t k = 0; k < names.size(); ++k) {
                if (names[k] == "object")
                    continue;
                domain.type_parent[names[k]] = parents[k];
            }
        } else if (head == ":constants") {
            std::vector<std::string> names, types;
            parse_typed_list(section.items, 1, false, names, types);
            for (std::size_t k = 0; k < names.size(); ++k)
                domain.constants.emplace_back(names[k], types[k]);
        } else if (head == ":predicates") {
            for (std::size_t k = 1; k < section.items.size(); ++k) {
                const SExpr& decl = section.items[k];
                if (!decl.is_list || decl.items.empty())
                    throw ParseError("expected (pred ?arg ...)", decl.line, decl.column);
                PredicateSchema pred;
                pred.name = expect_symbol(decl.items[0], "a predicate name");
                parse_typed_list(decl.items, 1, true, pred.params, pred.param_types);
                if (domain.find_predicate(pred.name))
                    throw SemanticError("duplicate predicate: " + pred.name);
                domain.predicates.push_back(std::move(pred));
            }
        } else if (head == ":action") {
            if (section.items.size() < 2)
                throw ParseError("(:action ...) needs a name", section.line, section.column);
            OperatorSchema op;
            op.name = expect_symbol(section.items[1], "an action name");
            const SExpr* precondition = nullptr;
            const SExpr* effect = nullptr;
            for (std::size_t k = 2; k < section.items.size(); k += 2) {
                const std::string& key = expect_symbol(section.items[k], "an :action keyword");
                if (k + 1 >= section.items.size())
                    throw ParseError("missing value after " + key,
                                     section.items[k].line, section.items[k].column);
                const SExpr& value = section.items[k + 1];
                if (key == ":parameters") {
                    if (!value.is_list)
                        throw ParseError(":parameters expects a list", value.line, value.column);
                    parse_typed_list(value.items, 0, true, op.params, op.param_types);
                } else if (key == ":precondition") {
                    precondition = &value;
                } else if (key == ":effect") {
                    effect = &value;
                } else {
                    throw UnsupportedFeatureError(key, section.items[k].line,
                                                  section.items[k].column);
                }
            }
            {
                std::set<std::string> seen;
                for (const auto& p : op.params) {
                    if (!seen.insert(p).second)
                        throw SemanticError("action " + op.name + ": duplicate parameter " + p);
                }
            }
            if (precondition)
                op.pre = parse_conjunction(*precondition);
            if (effect)
                parse_effect(*effect, op.add, op.del);
            check_schema_variables(op, op.pre, "precondition");
            check_schema_variables(op, op.add, "effect");
            check_schema_variables(op, op.del, "effect");
            for (const auto& other : domain.operators) {
                if (other.name == op.name)
                    throw SemanticError("duplicate action: " + op.name);
            }
            domain.operators.push_back(std::move(op));
        } else if (head == ":functions" || head == ":axiom" || head == ":derived"
                   || head == ":durative-action") {
            throw UnsupportedFeatureError(head, section.items[0].line, section.items[0].column);
        } else {
            throw ParseError("unknown domain section: " + head,
                             section.items[0].line, section.items[0].column);
        }
    }
    if (!saw_name)
        throw ParseError("domain has no (domain name) section", root.line, root.column);

    for (const auto& op : domain.operators) {
        for (const auto& atom : op.pre)
            pddl_detail::check_atom_arity(domain, atom, "action " + op.name);
        for (const auto& atom : op.add)
            pddl_detail::check_atom_arity(domain, atom, "action " + op.name);
        for (const auto& atom : op.del)
            pddl_detail::check_atom_arity(domain, atom, "action " + op.name);
    }
    for (const auto& [type, parent] : domain.type_parent) {
        domain.type_is_a(type, "object");  // throws on a cycle
        (void)parent;
    }
    return domain;
}

inline ProblemDef parse_problem(const std::string& text, const Domain& domain) {
    using namespace pddl_detail;
    SExpr root = read_top_level(text);
    if (!root.is_list || root.items.empty() || root.items[0].atom != "define")
        throw ParseError("expected (define (problem ...) ...)", root.line, root.column);

    ProblemDef problem;
    auto known_object = [&](const std::string& name) {
        for (const auto& [obj, type] : problem.objects) {
            if (obj == name)
                return true;
            (void)type;
        }
        for (const auto& [obj, type] : domain.constants) {
            if (obj == name)
                return true;
            (void)type;
        }
        return false;
    };
    auto ground_atom = [&](const SExpr& e, const char* where) {
        AtomTemplate tmpl = parse_atom_template(e);
        check_atom_arity(domain, tmpl, where);
        Atom atom;
        atom.predicate = tmpl.predicate;
        for (const auto& term : tmpl.terms) {
            if (term[0] == '?')
                throw SemanticError(std::string(where) + ": variable " + term + " in a ground atom");
            if (!known_object(term)) {
                throw SemanticError(std::string(where) + ": undeclared object " + term
                                    + " in (" + tmpl.predicate + ")");
            }
            atom.args.push_back(term);
        }
        return atom;
    };

    for (std::size_t i = 1; i < root.items.size(); ++i) {
        const SExpr& section = root.items[i];
        if (!section.is_list || section.items.empty())
            throw ParseError("expected a (:section ...)", section.line, section.column);
        const std::string& head = expect_symbol(section.items[0], "a section keyword");

        if (head == "problem") {
            if (section.items.size() != 2)
                throw ParseError("(problem name) takes one name", section.line, section.column);
            problem.name = expect_symbol(section.items[1], "the problem name");
        } else if (head == ":domain") {
            if (section.items.size() != 2)
                throw ParseError("(:domain name) takes one name", section.line, section.column);
            problem.domain_name = expect_symbol(section.items[1], "the domain name");
            if (problem.domain_name != domain.name) {
                throw SemanticError("problem is for domain '" + problem.domain_name
                                    + "', parsed domain is '" + domain.name + "'");
            }
        } else if (head == ":requirements") {
            Domain scratch;
            check_requirements(section, scratch);
        } else if (head == ":objects") {
            std::vector<std::string> names, types;
            parse_typed_list(section.items, 1, false, names, types);
            for (std::size_t k = 0; k < names.size(); ++k) {
                if (known_object(names[k]))
                    throw SemanticError("duplicate object: " + names[k]);
                problem.objects.emplace_back(names[k], types[k]);
            }
        } else if (head == ":init") {
            for (std::size_t k = 1; k < section.items.size(); ++k)
                problem.init.push_back(ground_atom(section.items[k], ":init"));
        } else if (head == ":goal") {
            if (section.items.size() != 2)
                throw ParseError("(:goal ...) takes one condition", section.line, section.column);
            for (const auto& tmpl : parse_conjunction(section.items[1])) {
                SExpr fake;  // reuse ground_atom's checks via a rebuilt node
                fake.is_list = true;
                fake.line = section.items[1].line;
                fake.column = section.items[1].column;
                SExpr headnode;
                headnode.atom = tmpl.predicate;
                fake.items.push_back(headnode);
                for (const auto& term : tmpl.terms) {
                    SExpr t;
                    t.atom = term;
                    fake.items.push_back(t);
                }
                problem.goal.push_back(ground_atom(fake, ":goal"));
            }
        } else {
            throw ParseError("unknown problem section: " + head,
                             section.items[0].line, section.items[0].column);
        }
    }
    return problem;
}

/*
  Instantiates every operator schema over all type-compatible object tuples.
  A schema-level overlap (the same template in both add and del) collapses
  into an add. After that, a binding whose ground add and del lists still
  collide is contradictory: the schema implies an inequality between the
  repeated objects, as in stack(x,x), and the binding is skipped.
*/
inline GroundTask ground(const Domain& domain, const ProblemDef& problem) {
    std::vector<std::pair<std::string, std::string>> objects = domain.constants;
    objects.insert(objects.end(), problem.objects.begin(), problem.objects.end());

    TaskBuilder builder;
    std::vector<int> init_ids, goal_ids;
    for (const auto& atom : problem.init)
        init_ids.push_back(builder.add_atom(atom));
    for (const auto& atom : problem.goal)
        goal_ids.push_back(builder.add_atom(atom));
    builder.set_init(init_ids);
    builder.set_goal(goal_ids);

    for (const auto& op : domain.operators) {
        // Drop del templates that are syntactically identical to an add
        // template: (s - del) ∪ add makes them adds for every binding.
        std::vector<AtomTemplate> del_templates;
        for (const auto& d : op.del) {
            bool shadowed = false;
            for (const auto& a : op.add) {
                if (a.predicate == d.predicate && a.terms == d.terms) {
                    shadowed = true;
                    break;
                }
            }
            if (!shadowed)
                del_templates.push_back(d);
        }

        std::vector<std::vector<std::string>> candidates(op.params.size());
        for (std::size_t p = 0; p < op.params.size(); ++p) {
            for (const auto& [obj, type] : objects) {
                if (!domain.typing || domain.type_is_a(type, op.param_types[p]))
                    candidates[p].push_back(obj);
            }
        }

        std::vector<std::string> binding(op.params.size());
        auto instantiate = [&](const AtomTemplate& tmpl) {
            Atom atom;
            atom.predicate = tmpl.predicate;
            for (const auto& term : tmpl.terms) {
                if (term[0] == '?') {
                    std::size_t idx =
                        std::find(op.params.begin(), op.params.end(), term) - op.params.begin();
                    atom.args.push_back(binding[idx]);
                } else {
                    atom.args.push_back(term);
                }
            }
            return atom;
        };

        auto emit = [&]() {
            std::set<std::string> add_sigs;
            for (const auto& tmpl : op.add)
                add_sigs.insert(instantiate(tmpl).signature());
            for (const auto& tmpl : del_templates) {
                if (add_sigs.count(instantiate(tmpl).signature()))
                    return;  // contradictory binding, see the comment above
            }
            std::vector<int> pre, add, del;
            for (const auto& tmpl : op.pre)
                pre.push_back(builder.add_atom(instantiate(tmpl)));
            for (const auto& tmpl : op.add)
                add.push_back(builder.add_atom(instantiate(tmpl)));
            for (const auto& tmpl : del_templates)
                del.push_back(builder.add_atom(instantiate(tmpl)));
            std::string signature = op.name;
            for (const auto& obj : binding)
                signature += " " + obj;
            builder.add_action(signature, std::move(pre), std::move(add), std::move(del));
        };

        auto bind = [&](auto&& self, std::size_t p) -> void {
            if (p == op.params.size()) {
                emit();
                return;
            }
            for (const auto& obj : candidates[p]) {
                binding[p] = obj;
                self(self, p + 1);
            }
        };
        bind(bind, 0);
    }
    return builder.build();
}

}  // namespace macroforge
