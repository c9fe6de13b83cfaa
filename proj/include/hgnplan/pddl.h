#pragma once

// Parser for the STRIPS fragment of PDDL: :strips, :typing and :action-costs
// with constant action costs. Everything else is rejected.

#include <string>
#include <string_view>
#include <vector>

namespace hgnplan {

struct TypedName {
    std::string name;
    std::string type = "object";
};

// Arguments are either variables ("?x") or object/constant names.
struct Atom {
    std::string predicate;
    std::vector<std::string> args;

    bool operator==(const Atom &) const = default;
};

struct PredicateDef {
    std::string name;
    std::vector<TypedName> params;
};

struct ActionSchema {
    std::string name;
    std::vector<TypedName> params;
    std::vector<Atom> pre;
    std::vector<Atom> add;
    std::vector<Atom> del;
    double cost = 1.0;
};

struct DomainDef {
    std::string name;
    std::vector<std::string> requirements;
    // (type, parent) pairs; "object" is the implicit root and not listed.
    std::vector<std::pair<std::string, std::string>> types;
    std::vector<TypedName> constants;
    std::vector<PredicateDef> predicates;
    std::vector<ActionSchema> schemas;

    const PredicateDef *find_predicate(std::string_view name) const;
    bool has_type(std::string_view name) const;
    // True if `type` equals `ancestor` or inherits from it.
    bool is_subtype(std::string_view type, std::string_view ancestor) const;
    // Predicates that occur in some schema's add or delete list.
    std::vector<std::string> fluent_predicates() const;
};

struct ProblemDef {
    std::string name;
    std::string domain_name;
    std::vector<TypedName> objects;
    std::vector<Atom> init;
    std::vector<Atom> goal;
};

DomainDef parse_domain(std::string_view text);
ProblemDef parse_problem(std::string_view text, const DomainDef &dom);

std::string read_text_file(const std::string &path);

}  // namespace hgnplan
