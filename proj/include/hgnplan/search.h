#pragma once

#include "hgnplan/cost.h"
#include "hgnplan/heuristics.h"
#include "hgnplan/task.h"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace hgnplan {

struct SearchLimits {
    double timeout_s = 300.0;
    std::optional<std::size_t> max_expansions;
    // Best-effort bound on the bytes held by the search space.
    std::optional<std::size_t> memory_bytes;
};

enum class SearchStatus { Solved, Timeout, Unsolvable, LimitHit };

std::string to_string(SearchStatus s);

struct SearchResult {
    SearchStatus status = SearchStatus::Unsolvable;
    std::optional<std::vector<ActionId>> plan;
    Cost plan_cost = Cost::infinity();
    std::size_t expansions = 0;
    std::size_t generated = 0;
    std::size_t heuristic_evals = 0;
    double wall_time_s = 0.0;
};

// A* on f = g + h with goal test at pop and reopening of states reached with a
// strictly lower g. Ties on f prefer lower h, then earlier insertion.
SearchResult astar(const GroundedTask &t, Heuristic &h, const SearchLimits &lim = {});

class PlanValidationError : public std::runtime_error {
public:
    enum class Kind { InapplicableAction, GoalNotReached, UnknownAction };
    PlanValidationError(Kind kind, std::size_t step, const std::string &msg)
        : std::runtime_error(msg), kind_(kind), step_(step) {}
    Kind kind() const { return kind_; }
    // Index of the failing action; plan length for GoalNotReached.
    std::size_t step() const { return step_; }

private:
    Kind kind_;
    std::size_t step_;
};

// Total cost of a valid plan from I; throws PlanValidationError describing the first failure.
Cost validate_plan(const GroundedTask &t, std::span<const ActionId> plan);

// {"status", "plan": [names] | null, "plan_cost", "expansions", "generated",
//  "heuristic_evals", "wall_time_s"}
nlohmann::json to_json(const SearchResult &r, const GroundedTask &t);

}  // namespace hgnplan
