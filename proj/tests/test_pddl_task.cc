#include "doctest.h"
#include "support.h"

#include "hgnplan/errors.h"
#include "hgnplan/generators.h"
#include "hgnplan/heuristics.h"
#include "hgnplan/pddl.h"
#include "hgnplan/task.h"

#include <algorithm>
#include <set>

using namespace hgnplan;
using namespace hgnplan::testing;

namespace {

const char *kTinyDomain = R"((define (domain tiny)
  (:requirements :strips)
  (:predicates (done))
  (:action finish :parameters () :precondition (and) :effect (done))))";

const char *kTinyProblem = R"((define (problem p) (:domain tiny) (:init) (:goal (and))))";

DomainDef gripper_domain() { return parse_domain(domain_text(GeneratorDomain::Gripper)); }

bool has_atom(const ProblemDef &p, const std::string &pred, std::vector<std::string> args) {
    return std::any_of(p.init.begin(), p.init.end(),
                       [&](const Atom &a) { return a.predicate == pred && a.args == args; });
}

}  // namespace

TEST_CASE("minimal domain parses to one predicate and one schema") {
    DomainDef d = parse_domain(kTinyDomain);
    CHECK(d.name == "tiny");
    CHECK(d.predicates.size() == 1);
    REQUIRE(d.schemas.size() == 1);
    CHECK(d.schemas[0].name == "finish");
    CHECK(d.schemas[0].pre.empty());
    CHECK(d.schemas[0].add == std::vector<Atom>{{"done", {}}});
}

TEST_CASE("gripper domain has move, pick and drop with unit costs") {
    DomainDef d = gripper_domain();
    std::vector<std::string> names;
    for (const auto &s : d.schemas) {
        names.push_back(s.name);
        CHECK(s.cost == 1.0);
    }
    CHECK(names == std::vector<std::string>{"move", "pick", "drop"});
    CHECK(d.schemas[1].pre.size() == 3);
    CHECK(d.schemas[1].del.size() == 2);
    CHECK(d.is_subtype("ball", "object"));
    CHECK_FALSE(d.is_subtype("ball", "room"));
}

TEST_CASE("unsupported requirements and constructs are rejected") {
    CHECK_THROWS_AS(parse_domain(R"((define (domain d) (:requirements :strips :probabilistic-effects)
        (:predicates (p)) (:action a :parameters () :precondition (p) :effect (p))))"),
                    UnsupportedRequirementError);
    CHECK_THROWS_AS(parse_domain(R"((define (domain d) (:requirements :strips)
        (:predicates (p)) (:action a :parameters () :precondition (or (p) (p)) :effect (p))))"),
                    UnsupportedRequirementError);
}

TEST_CASE("malformed text reports a position") {
    try {
        parse_domain("(define (domain d)\n  (:predicates (p)");
        FAIL("expected a parse error");
    } catch (const ParseError &e) {
        CHECK(e.line() >= 1);
    }
}

TEST_CASE("problem parsing") {
    SUBCASE("empty init and goal") {
        DomainDef d = parse_domain(kTinyDomain);
        ProblemDef p = parse_problem(kTinyProblem, d);
        CHECK(p.init.empty());
        CHECK(p.goal.empty());
    }
    SUBCASE("gripper with one ball") {
        DomainDef d = gripper_domain();
        ProblemDef p = parse_problem(gen_problem(GeneratorDomain::Gripper, {.balls = 1}, 0), d);
        CHECK(has_atom(p, "at-robby", {"rooma"}));
        CHECK(has_atom(p, "at", {"ball1", "rooma"}));
        CHECK(has_atom(p, "free", {"left"}));
        CHECK(has_atom(p, "free", {"right"}));
    }
    SUBCASE("goal with an unknown predicate") {
        DomainDef d = parse_domain(kTinyDomain);
        CHECK_THROWS_AS(parse_problem("(define (problem p) (:domain tiny) (:init) (:goal (missing)))", d),
                        SemanticError);
    }
    SUBCASE("domain name mismatch") {
        DomainDef d = parse_domain(kTinyDomain);
        CHECK_THROWS_AS(parse_problem("(define (problem p) (:domain other) (:init) (:goal (and)))", d),
                        SemanticError);
    }
}

TEST_CASE("grounding") {
    SUBCASE("0-ary predicates give one action per schema") {
        DomainDef d = parse_domain(kTinyDomain);
        GroundedTask t = ground(d, parse_problem(kTinyProblem, d));
        REQUIRE(t.num_actions() == 1);
        CHECK(t.action(0).name == "(finish)");
        CHECK(t.props() == std::vector<std::string>{"(done)"});
    }
    SUBCASE("gripper with one ball and two rooms") {
        DomainDef d = gripper_domain();
        GroundedTask t = ground(d, parse_problem(gen_problem(GeneratorDomain::Gripper, {.balls = 1}, 0), d));
        // 2 moves, pick and drop for each (room, gripper) pair.
        CHECK(t.num_actions() == 10);
        CHECK(t.num_props() == 8);
        CHECK(std::is_sorted(t.props().begin(), t.props().end()));
        CHECK(t.find_prop("(at ball1 roomb)") >= 0);
        CHECK(t.find_prop("(at ball1 rooma)") >= 0);
        CHECK(t.find_prop("(carry ball1 left)") >= 0);
        CHECK(t.goal() == std::vector<PropId>{t.find_prop("(at ball1 roomb)")});
    }
    SUBCASE("relaxed-unreachable goal still yields a task") {
        const char *dom = R"((define (domain u) (:requirements :strips)
            (:predicates (a) (b) (g))
            (:action step :parameters () :precondition (a) :effect (b))))";
        DomainDef d = parse_domain(dom);
        GroundedTask t = ground(d, parse_problem("(define (problem p) (:domain u) (:init (a)) (:goal (g)))", d));
        CHECK(h_max(t, t.initial_state()).is_infinite());
    }
    SUBCASE("static facts leave preconditions") {
        const char *dom = R"((define (domain s) (:requirements :strips)
            (:predicates (link ?x ?y) (at ?x))
            (:action go :parameters (?x ?y) :precondition (and (at ?x) (link ?x ?y))
               :effect (and (at ?y) (not (at ?x))))))";
        DomainDef d = parse_domain(dom);
        GroundedTask t = ground(d, parse_problem(R"((define (problem p) (:domain s) (:objects l1 l2 l3)
            (:init (at l1) (link l1 l2) (link l2 l3)) (:goal (at l3))))",
                                                 d));
        CHECK(t.num_actions() == 2);
        for (const auto &name : t.props())
            CHECK(name.rfind("(at ", 0) == 0);
        for (const auto &o : t.actions())
            CHECK(o.pre.size() == 1);
    }
    SUBCASE("action limit") {
        DomainDef d = gripper_domain();
        CHECK_THROWS_AS(ground(d, parse_problem(gen_problem(GeneratorDomain::Gripper, {.balls = 3}, 0), d),
                               {.max_actions = 5}),
                        ResourceLimitError);
    }
}

TEST_CASE("grounded names are unique and every action is relaxed-reachable") {
    DomainDef d = gripper_domain();
    GroundedTask t = ground(d, parse_problem(gen_problem(GeneratorDomain::Gripper, {.balls = 3}, 0), d));
    std::set<std::string> names(t.props().begin(), t.props().end());
    CHECK(names.size() == t.num_props());
    State all = t.make_state(std::vector<PropId>{});
    for (PropId p : t.init())
        all.set(p);
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto &o : t.actions())
            if (all.contains_all(o.pre))
                for (PropId p : o.add)
                    if (!all.test(p)) {
                        all.set(p);
                        changed = true;
                    }
    }
    for (const auto &o : t.actions())
        CHECK(all.contains_all(o.pre));
}

TEST_CASE("apply_action") {
    GroundedTask t = GroundedTask::make({"a", "b", "c"}, {{"o1", {0}, {1}, {}, 1.0}, {"o", {0}, {2}, {1}, 1.0}},
                                        {0}, {2});
    State a = t.make_state(std::vector<PropId>{0});
    CHECK(apply_action(a, t.action(0)).ids() == std::vector<PropId>{0, 1});
    State ab = t.make_state(std::vector<PropId>{0, 1});
    CHECK(apply_action(ab, t.action(1)).ids() == std::vector<PropId>{0, 2});
    CHECK_THROWS_AS(apply_action(t.make_state(std::vector<PropId>{}), t.action(0)), PreconditionViolation);
}

TEST_CASE("add wins over delete on the same proposition") {
    GroundedTask t = GroundedTask::make({"a"}, {{"o", {0}, {0}, {0}, 1.0}}, {0}, {0});
    CHECK(apply_action(t.initial_state(), t.action(0)).test(0));
}

TEST_CASE("is_goal") {
    GroundedTask empty_goal = GroundedTask::make({"a", "g"}, {}, {0}, {});
    CHECK(is_goal(empty_goal.make_state(std::vector<PropId>{}), empty_goal));
    GroundedTask t = chain3();
    CHECK(is_goal(t.make_state(std::vector<PropId>{2}), t));
    CHECK_FALSE(is_goal(t.make_state(std::vector<PropId>{0}), t));
}

TEST_CASE("task construction validates its input") {
    CHECK_THROWS_AS(GroundedTask::make({"b", "a"}, {}, {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(GroundedTask::make({"a", "a"}, {}, {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(GroundedTask::make({"a"}, {{"o", {3}, {0}, {}, 1.0}}, {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(GroundedTask::make({"a"}, {}, {1}, {}), std::invalid_argument);
    CHECK_THROWS_AS(GroundedTask::make({"a"}, {{"o", {}, {0}, {}, -1.0}}, {}, {}), std::invalid_argument);
}

TEST_CASE("states are bitsets wider than one word") {
    State s(130);
    s.set(0);
    s.set(64);
    s.set(129);
    CHECK(s.count() == 3);
    CHECK(s.ids() == std::vector<PropId>{0, 64, 129});
    s.reset(64);
    CHECK_FALSE(s.test(64));
    State u = State::from_ids(130, std::vector<PropId>{0, 129});
    CHECK(u == s);
    CHECK(u.hash() == s.hash());
}
