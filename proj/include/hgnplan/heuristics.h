#pragma once

#include "hgnplan/cost.h"
#include "hgnplan/task.h"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace hgnplan {

// State evaluator used by search. Implementations may keep per-instance scratch
// buffers, so one instance must not be shared between concurrent searches.
class Heuristic {
public:
    virtual ~Heuristic() = default;
    virtual Cost evaluate(const State &s) = 0;
    virtual std::string name() const = 0;
};

// Precomputed delete-relaxation index for one task, with reusable scratch space.
class DeleteRelaxation {
public:
    explicit DeleteRelaxation(const GroundedTask &t);

    Cost hmax(const State &s);
    Cost hadd(const State &s);
    Cost lmcut(const State &s);

    // Per-proposition h^max/h^add values from the last hmax()/hadd() call.
    const std::vector<double> &prop_costs() const { return prop_cost_; }

private:
    enum class Combine { Max, Sum };
    // Generalized Dijkstra over the relaxed task (including the artificial goal and
    // truth propositions) with action costs `costs`.
    void explore(const State &s, Combine combine, const std::vector<double> &costs);

    const GroundedTask &task_;
    std::size_t n_props_;      // real propositions
    std::size_t goal_prop_;    // artificial: reached once every goal holds
    std::size_t true_prop_;    // artificial: always true, precondition of pre-free actions
    std::size_t goal_action_;  // artificial action G -> goal_prop_, cost 0
    std::vector<std::vector<int>> pre_;
    std::vector<std::vector<int>> add_;
    std::vector<std::vector<int>> pre_of_;    // prop -> actions with it as precondition
    std::vector<std::vector<int>> achievers_; // prop -> actions adding it
    std::vector<double> base_costs_;

    std::vector<double> prop_cost_;
    std::vector<int> unsatisfied_;
    std::vector<double> accumulated_;
    std::vector<double> lm_costs_;
};

Cost h_blind(const GroundedTask &t, const State &s);
Cost h_max(const GroundedTask &t, const State &s);
Cost h_add(const GroundedTask &t, const State &s);
Cost h_lmcut(const GroundedTask &t, const State &s);

// name in {"blind", "hmax", "hadd", "lmcut"}. The task must outlive the heuristic.
std::unique_ptr<Heuristic> make_classic_heuristic(std::string_view name, const GroundedTask &t);

}  // namespace hgnplan
