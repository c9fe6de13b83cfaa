#pragma once

#include "hgnplan/pddl.h"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hgnplan {

using PropId = int;
using ActionId = int;

// Fixed-width bitset over proposition ids.
class State {
public:
    State() = default;
    explicit State(std::size_t width);
    static State from_ids(std::size_t width, std::span<const PropId> ids);

    std::size_t width() const { return width_; }
    bool test(PropId p) const {
        return (words_[static_cast<std::size_t>(p) >> 6] >> (static_cast<std::size_t>(p) & 63)) & 1u;
    }
    void set(PropId p) { words_[static_cast<std::size_t>(p) >> 6] |= bit(p); }
    void reset(PropId p) { words_[static_cast<std::size_t>(p) >> 6] &= ~bit(p); }

    bool contains_all(std::span<const PropId> ids) const;
    std::vector<PropId> ids() const;
    std::size_t count() const;
    std::size_t hash() const;

    bool operator==(const State &) const = default;

private:
    static std::uint64_t bit(PropId p) { return std::uint64_t{1} << (static_cast<std::size_t>(p) & 63); }

    std::size_t width_ = 0;
    std::vector<std::uint64_t> words_;
};

struct StateHash {
    std::size_t operator()(const State &s) const { return s.hash(); }
};

struct GroundedAction {
    std::string name;
    std::vector<PropId> pre;
    std::vector<PropId> add;
    std::vector<PropId> del;
    double cost = 1.0;
};

// Propositional STRIPS task <F, O, I, G, c>. Proposition names are unique and
// sorted, so proposition ids follow lexicographic name order.
class GroundedTask {
public:
    GroundedTask() = default;

    // Validates the invariants and sorts/deduplicates pre/add/del/init/goal.
    // Throws std::invalid_argument when names are unsorted or ids are out of range.
    static GroundedTask make(std::vector<std::string> props, std::vector<GroundedAction> actions,
                             std::vector<PropId> init, std::vector<PropId> goal,
                             std::string name = {});

    const std::string &name() const { return name_; }
    std::size_t num_props() const { return props_.size(); }
    std::size_t num_actions() const { return actions_.size(); }
    const std::vector<std::string> &props() const { return props_; }
    const std::string &prop_name(PropId p) const { return props_[static_cast<std::size_t>(p)]; }
    const std::vector<GroundedAction> &actions() const { return actions_; }
    const GroundedAction &action(ActionId a) const { return actions_[static_cast<std::size_t>(a)]; }
    const std::vector<PropId> &init() const { return init_; }
    const std::vector<PropId> &goal() const { return goal_; }

    State initial_state() const;
    State make_state(std::span<const PropId> ids) const;
    // -1 if absent.
    PropId find_prop(std::string_view name) const;
    // Infinity-like +inf when there are no actions.
    double min_action_cost() const;

private:
    std::string name_;
    std::vector<std::string> props_;
    std::vector<GroundedAction> actions_;
    std::vector<PropId> init_;
    std::vector<PropId> goal_;
};

bool is_applicable(const State &s, const GroundedAction &o);
// (s \ Del(o)) ∪ Add(o). Throws PreconditionViolation if Pre(o) is not a subset of s.
State apply_action(const State &s, const GroundedAction &o);
bool is_goal(const State &s, const GroundedTask &t);

struct GroundingOptions {
    std::size_t max_actions = 2'000'000;
    // Strip facts that no action adds or deletes from preconditions, I and G.
    bool remove_static_facts = true;
};

GroundedTask ground(const DomainDef &dom, const ProblemDef &prob, const GroundingOptions &opts = {});

// Convenience: parse + ground from files.
GroundedTask load_task(const std::string &domain_path, const std::string &problem_path,
                       const GroundingOptions &opts = {});

// Debug dump: {"name", "propositions": [...], "actions": [{"name","pre","add","del","cost"}],
// "init": [...], "goal": [...]}.
nlohmann::json to_json(const GroundedTask &t);

}  // namespace hgnplan
