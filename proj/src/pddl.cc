#include "hgnplan/pddl.h"

#include "hgnplan/errors.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace hgnplan {

namespace {

struct SExpr {
    std::string atom;  // empty for lists
    std::vector<SExpr> items;
    bool is_list = false;
    std::size_t line = 0;
    std::size_t column = 0;

    bool is_atom() const { return !is_list; }
    bool is_atom(std::string_view s) const { return !is_list && atom == s; }
    std::size_t size() const { return items.size(); }
    const SExpr &operator[](std::size_t i) const { return items[i]; }
};

[[noreturn]] void fail(const SExpr &at, const std::string &msg) {
    throw ParseError(at.line, at.column, msg);
}

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    SExpr read_toplevel() {
        skip_space();
        if (pos_ >= text_.size())
            throw ParseError(line_, column_, "empty input");
        SExpr e = read();
        skip_space();
        if (pos_ < text_.size())
            throw ParseError(line_, column_, "trailing input after top-level expression");
        return e;
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

    void skip_space() {
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

    SExpr read() {
        skip_space();
        if (pos_ >= text_.size())
            throw ParseError(line_, column_, "unexpected end of input");
        SExpr e;
        e.line = line_;
        e.column = column_;
        char c = text_[pos_];
        if (c == ')')
            throw ParseError(line_, column_, "unexpected ')'");
        if (c == '(') {
            e.is_list = true;
            advance();
            while (true) {
                skip_space();
                if (pos_ >= text_.size())
                    throw ParseError(e.line, e.column, "unbalanced '('");
                if (text_[pos_] == ')') {
                    advance();
                    break;
                }
                e.items.push_back(read());
            }
            return e;
        }
        while (pos_ < text_.size()) {
            char d = text_[pos_];
            if (d == '(' || d == ')' || d == ';' || std::isspace(static_cast<unsigned char>(d)))
                break;
            e.atom.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(d))));
            advance();
        }
        return e;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

const std::set<std::string> kSupportedRequirements = {":strips", ":typing", ":action-costs"};

std::vector<TypedName> parse_typed_list(const SExpr &list, std::size_t begin) {
    std::vector<TypedName> result;
    std::vector<std::string> pending;
    for (std::size_t i = begin; i < list.size(); ++i) {
        const SExpr &item = list[i];
        if (item.is_list)
            fail(item, "expected a name in typed list");
        if (item.atom == "-") {
            if (i + 1 >= list.size())
                fail(item, "missing type after '-'");
            const SExpr &type = list[i + 1];
            if (type.is_list) {
                if (type.size() > 0 && type[0].is_atom("either"))
                    throw UnsupportedRequirementError("either");
                fail(type, "expected type name");
            }
            if (pending.empty())
                fail(item, "type annotation without names");
            for (auto &n : pending)
                result.push_back({std::move(n), type.atom});
            pending.clear();
            ++i;
        } else {
            pending.push_back(item.atom);
        }
    }
    for (auto &n : pending)
        result.push_back({std::move(n), "object"});
    return result;
}

Atom parse_atom(const SExpr &e) {
    if (!e.is_list || e.size() == 0 || e[0].is_list)
        fail(e, "expected atom");
    Atom a;
    a.predicate = e[0].atom;
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (e[i].is_list)
            fail(e[i], "nested term in atom (functions are not supported)");
        a.args.push_back(e[i].atom);
    }
    return a;
}

void reject_connective(const SExpr &e) {
    static const std::set<std::string> known = {"or", "imply", "forall", "exists", "when", "=",
                                                "increase", "decrease", "assign", "scale-up",
                                                "scale-down", "probabilistic", "oneof"};
    if (e.is_list && e.size() > 0 && e[0].is_atom() && known.count(e[0].atom)) {
        if (e[0].atom == "=")
            throw UnsupportedRequirementError(":equality");
        throw UnsupportedRequirementError(e[0].atom);
    }
}

// Conjunction of positive atoms; an empty list is the empty conjunction.
std::vector<Atom> parse_condition(const SExpr &e) {
    std::vector<Atom> out;
    if (!e.is_list)
        fail(e, "expected condition");
    if (e.size() == 0)
        return out;
    if (e[0].is_atom("and")) {
        for (std::size_t i = 1; i < e.size(); ++i) {
            auto part = parse_condition(e[i]);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    if (e[0].is_atom("not"))
        throw UnsupportedRequirementError(":negative-preconditions");
    reject_connective(e);
    out.push_back(parse_atom(e));
    return out;
}

double parse_number(const SExpr &e) {
    if (e.is_list)
        throw UnsupportedRequirementError("non-constant action cost");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(e.atom.data(), e.atom.data() + e.atom.size(), v);
    if (ec != std::errc() || ptr != e.atom.data() + e.atom.size())
        throw UnsupportedRequirementError("non-constant action cost '" + e.atom + "'");
    if (v < 0.0)
        fail(e, "negative action cost");
    return v;
}

bool is_total_cost(const SExpr &e) {
    return e.is_list && e.size() == 1 && e[0].is_atom("total-cost");
}

void parse_effect(const SExpr &e, ActionSchema &schema, bool &has_cost) {
    if (!e.is_list)
        fail(e, "expected effect");
    if (e.size() == 0)
        return;
    if (e[0].is_atom("and")) {
        for (std::size_t i = 1; i < e.size(); ++i)
            parse_effect(e[i], schema, has_cost);
        return;
    }
    if (e[0].is_atom("not")) {
        if (e.size() != 2)
            fail(e, "malformed negative effect");
        schema.del.push_back(parse_atom(e[1]));
        return;
    }
    if (e[0].is_atom("increase")) {
        if (e.size() != 3 || !is_total_cost(e[1]))
            throw UnsupportedRequirementError("numeric effect other than (increase (total-cost) c)");
        double c = parse_number(e[2]);
        schema.cost = has_cost ? schema.cost + c : c;
        has_cost = true;
        return;
    }
    reject_connective(e);
    schema.add.push_back(parse_atom(e));
}

ActionSchema parse_action(const SExpr &e, bool action_costs) {
    if (e.size() < 2 || e[1].is_list)
        fail(e, "action without a name");
    ActionSchema schema;
    schema.name = e[1].atom;
    bool has_cost = false;
    for (std::size_t i = 2; i < e.size(); i += 2) {
        const SExpr &key = e[i];
        if (key.is_list)
            fail(key, "expected action keyword");
        if (i + 1 >= e.size())
            fail(key, "missing value for " + key.atom);
        const SExpr &val = e[i + 1];
        if (key.atom == ":parameters") {
            if (!val.is_list)
                fail(val, "expected parameter list");
            schema.params = parse_typed_list(val, 0);
        } else if (key.atom == ":precondition") {
            schema.pre = parse_condition(val);
        } else if (key.atom == ":effect") {
            parse_effect(val, schema, has_cost);
        } else {
            throw UnsupportedRequirementError(key.atom);
        }
    }
    // With :action-costs, PDDL gives actions without an increase effect cost 0.
    if (!has_cost)
        schema.cost = action_costs ? 0.0 : 1.0;
    return schema;
}

void check_atom(const DomainDef &dom, const Atom &a, const SExpr &where,
                const std::set<std::string> &names, const char *what) {
    const PredicateDef *p = dom.find_predicate(a.predicate);
    if (!p)
        throw SemanticError(std::to_string(where.line) + ":" + std::to_string(where.column) +
                            ": unknown predicate '" + a.predicate + "' in " + what);
    if (p->params.size() != a.args.size())
        throw SemanticError("predicate '" + a.predicate + "' expects " +
                            std::to_string(p->params.size()) + " arguments in " + what);
    for (const auto &arg : a.args) {
        if (!names.count(arg))
            throw SemanticError("unknown " + std::string(arg.starts_with("?") ? "variable" : "object") +
                                " '" + arg + "' in " + what);
    }
}

const SExpr &expect_header(const SExpr &root, const char *kind) {
    if (!root.is_list || root.size() < 2 || !root[0].is_atom("define"))
        fail(root, "expected (define ...)");
    const SExpr &head = root[1];
    if (!head.is_list || head.size() != 2 || !head[0].is_atom(kind) || head[1].is_list)
        fail(head, std::string("expected (") + kind + " <name>)");
    return head;
}

}  // namespace

const PredicateDef *DomainDef::find_predicate(std::string_view n) const {
    for (const auto &p : predicates)
        if (p.name == n)
            return &p;
    return nullptr;
}

bool DomainDef::has_type(std::string_view n) const {
    if (n == "object")
        return true;
    return std::any_of(types.begin(), types.end(), [&](const auto &t) { return t.first == n; });
}

bool DomainDef::is_subtype(std::string_view type, std::string_view ancestor) const {
    std::string current(type);
    for (std::size_t guard = 0; guard <= types.size() + 1; ++guard) {
        if (current == ancestor)
            return true;
        if (current == "object")
            return false;
        auto it = std::find_if(types.begin(), types.end(), [&](const auto &t) { return t.first == current; });
        if (it == types.end())
            return false;
        current = it->second;
    }
    return false;
}

std::vector<std::string> DomainDef::fluent_predicates() const {
    std::set<std::string> names;
    for (const auto &s : schemas) {
        for (const auto &a : s.add)
            names.insert(a.predicate);
        for (const auto &a : s.del)
            names.insert(a.predicate);
    }
    return {names.begin(), names.end()};
}

DomainDef parse_domain(std::string_view text) {
    SExpr root = Reader(text).read_toplevel();
    DomainDef dom;
    dom.name = expect_header(root, "domain")[1].atom;

    bool action_costs = false;
    std::vector<std::pair<const SExpr *, std::size_t>> action_nodes;
    for (std::size_t i = 2; i < root.size(); ++i) {
        const SExpr &sec = root[i];
        if (!sec.is_list || sec.size() == 0 || sec[0].is_list)
            fail(sec, "expected domain section");
        const std::string &kw = sec[0].atom;
        if (kw == ":requirements") {
            for (std::size_t j = 1; j < sec.size(); ++j) {
                if (sec[j].is_list)
                    fail(sec[j], "expected requirement flag");
                const std::string &r = sec[j].atom;
                if (!kSupportedRequirements.count(r))
                    throw UnsupportedRequirementError(r);
                if (r == ":action-costs")
                    action_costs = true;
                dom.requirements.push_back(r);
            }
        } else if (kw == ":types") {
            for (auto &t : parse_typed_list(sec, 1)) {
                if (t.name == "object")
                    continue;
                if (dom.has_type(t.name))
                    fail(sec, "duplicate type '" + t.name + "'");
                dom.types.emplace_back(t.name, t.type);
            }
        } else if (kw == ":constants") {
            auto cs = parse_typed_list(sec, 1);
            dom.constants.insert(dom.constants.end(), cs.begin(), cs.end());
        } else if (kw == ":predicates") {
            for (std::size_t j = 1; j < sec.size(); ++j) {
                const SExpr &p = sec[j];
                if (!p.is_list || p.size() == 0 || p[0].is_list)
                    fail(p, "expected predicate declaration");
                if (dom.find_predicate(p[0].atom))
                    fail(p, "duplicate predicate '" + p[0].atom + "'");
                dom.predicates.push_back({p[0].atom, parse_typed_list(p, 1)});
            }
        } else if (kw == ":functions") {
            for (std::size_t j = 1; j < sec.size(); ++j) {
                const SExpr &f = sec[j];
                if (f.is_atom("-") || f.is_atom("number"))
                    continue;
                if (!is_total_cost(f))
                    throw UnsupportedRequirementError(":numeric-fluents");
            }
        } else if (kw == ":action") {
            action_nodes.emplace_back(&sec, i);
        } else {
            throw UnsupportedRequirementError(kw);
        }
    }

    // Types may be referenced before their declaration section in sloppy files,
    // so resolve them once everything has been read.
    for (const auto &[t, parent] : dom.types)
        if (!dom.has_type(parent))
            throw SemanticError("unknown parent type '" + parent + "' of type '" + t + "'");
    auto check_types = [&](const std::vector<TypedName> &names, const SExpr &where) {
        for (const auto &n : names)
            if (!dom.has_type(n.type))
                throw SemanticError(std::to_string(where.line) + ":" + std::to_string(where.column) +
                                    ": unknown type '" + n.type + "'");
    };
    check_types(dom.constants, root);
    for (const auto &p : dom.predicates)
        check_types(p.params, root);

    std::set<std::string> constant_names;
    for (const auto &c : dom.constants)
        constant_names.insert(c.name);

    for (const auto &[node, idx] : action_nodes) {
        ActionSchema schema = parse_action(*node, action_costs);
        for (const auto &s : dom.schemas)
            if (s.name == schema.name)
                fail(*node, "duplicate action '" + schema.name + "'");
        check_types(schema.params, *node);
        std::set<std::string> scope = constant_names;
        for (const auto &p : schema.params) {
            if (!p.name.starts_with("?"))
                fail(*node, "parameter '" + p.name + "' must start with '?'");
            if (!scope.insert(p.name).second)
                fail(*node, "duplicate parameter '" + p.name + "'");
        }
        const std::string ctx = "action '" + schema.name + "'";
        for (const auto *list : {&schema.pre, &schema.add, &schema.del})
            for (const auto &a : *list)
                check_atom(dom, a, *node, scope, ctx.c_str());
        dom.schemas.push_back(std::move(schema));
    }
    return dom;
}

ProblemDef parse_problem(std::string_view text, const DomainDef &dom) {
    SExpr root = Reader(text).read_toplevel();
    ProblemDef prob;
    prob.name = expect_header(root, "problem")[1].atom;

    const SExpr *init_node = nullptr;
    const SExpr *goal_node = nullptr;
    for (std::size_t i = 2; i < root.size(); ++i) {
        const SExpr &sec = root[i];
        if (!sec.is_list || sec.size() == 0 || sec[0].is_list)
            fail(sec, "expected problem section");
        const std::string &kw = sec[0].atom;
        if (kw == ":domain") {
            if (sec.size() != 2 || sec[1].is_list)
                fail(sec, "malformed :domain");
            prob.domain_name = sec[1].atom;
        } else if (kw == ":requirements") {
            for (std::size_t j = 1; j < sec.size(); ++j)
                if (sec[j].is_list || !kSupportedRequirements.count(sec[j].atom))
                    throw UnsupportedRequirementError(sec[j].is_list ? "?" : sec[j].atom);
        } else if (kw == ":objects") {
            auto objs = parse_typed_list(sec, 1);
            prob.objects.insert(prob.objects.end(), objs.begin(), objs.end());
        } else if (kw == ":init") {
            init_node = &sec;
        } else if (kw == ":goal") {
            if (sec.size() != 2)
                fail(sec, "malformed :goal");
            goal_node = &sec;
        } else if (kw == ":metric") {
            // Only (minimize (total-cost)) is meaningful here; anything else is ignored
            // since plan cost is always the sum of action costs.
        } else {
            throw UnsupportedRequirementError(kw);
        }
    }
    if (prob.domain_name != dom.name)
        throw SemanticError("problem '" + prob.name + "' refers to domain '" + prob.domain_name +
                            "' but domain is '" + dom.name + "'");

    std::set<std::string> names;
    for (const auto &c : dom.constants)
        names.insert(c.name);
    for (const auto &o : prob.objects) {
        if (!dom.has_type(o.type))
            throw SemanticError("object '" + o.name + "' has unknown type '" + o.type + "'");
        if (!names.insert(o.name).second)
            throw SemanticError("duplicate object '" + o.name + "'");
    }

    if (init_node) {
        for (std::size_t j = 1; j < init_node->size(); ++j) {
            const SExpr &a = (*init_node)[j];
            if (a.is_list && a.size() == 3 && a[0].is_atom("=") && is_total_cost(a[1]))
                continue;
            if (a.is_list && a.size() > 0 && a[0].is_atom("not"))
                continue;  // closed world: negative literals are redundant
            reject_connective(a);
            Atom atom = parse_atom(a);
            check_atom(dom, atom, a, names, "initial state");
            prob.init.push_back(std::move(atom));
        }
    }
    if (goal_node) {
        prob.goal = parse_condition((*goal_node)[1]);
        for (const auto &g : prob.goal)
            check_atom(dom, g, *goal_node, names, "goal");
    }
    return prob;
}

std::string read_text_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace hgnplan
