#include "hgnplan/search.h"

#include <algorithm>
#include <chrono>
#include <queue>
#include <unordered_map>

namespace hgnplan {

std::string to_string(SearchStatus s) {
    switch (s) {
    case SearchStatus::Solved:
        return "solved";
    case SearchStatus::Timeout:
        return "timeout";
    case SearchStatus::Unsolvable:
        return "exhausted-unsolvable";
    case SearchStatus::LimitHit:
        return "limit-hit";
    }
    return "?";
}

namespace {

struct Node {
    State state;
    double g = 0.0;
    Cost h;
    int parent = -1;
    ActionId via = -1;
};

struct OpenEntry {
    double f;
    double h;
    std::size_t seq;
    int node;
    double g;
};

// priority_queue is a max-heap: "less" means "popped later".
struct OpenOrder {
    bool operator()(const OpenEntry &a, const OpenEntry &b) const {
        if (a.f != b.f)
            return a.f > b.f;
        if (a.h != b.h)
            return a.h > b.h;
        return a.seq > b.seq;
    }
};

}  // namespace

SearchResult astar(const GroundedTask &t, Heuristic &h, const SearchLimits &lim) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

    SearchResult result;
    std::vector<Node> nodes;
    std::unordered_map<State, int, StateHash> index;
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
    std::size_t seq = 0;
    const std::size_t state_bytes = sizeof(Node) * 2 + ((t.num_props() + 63) / 64) * 16 + 64;

    auto push = [&](int idx) {
        const Node &n = nodes[static_cast<std::size_t>(idx)];
        double hv = n.h.value();
        open.push({n.g + hv, hv, seq++, idx, n.g});
    };

    State init = t.initial_state();
    nodes.push_back({init, 0.0, h.evaluate(init), -1, -1});
    ++result.heuristic_evals;
    index.emplace(init, 0);
    if (nodes[0].h.is_finite())
        push(0);

    auto finish = [&](SearchStatus st) {
        result.status = st;
        result.wall_time_s = elapsed();
        return result;
    };

    while (!open.empty()) {
        if (elapsed() > lim.timeout_s)
            return finish(SearchStatus::Timeout);
        if (lim.max_expansions && result.expansions >= *lim.max_expansions)
            return finish(SearchStatus::LimitHit);
        if (lim.memory_bytes && nodes.size() * state_bytes > *lim.memory_bytes)
            return finish(SearchStatus::LimitHit);

        OpenEntry top = open.top();
        open.pop();
        if (top.g > nodes[static_cast<std::size_t>(top.node)].g)
            continue;  // stale entry, node was reopened with a lower g

        const int cur = top.node;
        if (is_goal(nodes[static_cast<std::size_t>(cur)].state, t)) {
            std::vector<ActionId> plan;
            for (int n = cur; nodes[static_cast<std::size_t>(n)].parent >= 0; n = nodes[static_cast<std::size_t>(n)].parent)
                plan.push_back(nodes[static_cast<std::size_t>(n)].via);
            std::reverse(plan.begin(), plan.end());
            result.plan_cost = validate_plan(t, plan);
            result.plan = std::move(plan);
            return finish(SearchStatus::Solved);
        }

        ++result.expansions;
        const State state = nodes[static_cast<std::size_t>(cur)].state;
        const double g = nodes[static_cast<std::size_t>(cur)].g;
        for (std::size_t a = 0; a < t.num_actions(); ++a) {
            const GroundedAction &o = t.action(static_cast<ActionId>(a));
            if (!is_applicable(state, o))
                continue;
            State succ = apply_action(state, o);
            ++result.generated;
            const double succ_g = g + o.cost;
            auto it = index.find(succ);
            if (it != index.end()) {
                Node &n = nodes[static_cast<std::size_t>(it->second)];
                if (succ_g < n.g) {
                    n.g = succ_g;
                    n.parent = cur;
                    n.via = static_cast<ActionId>(a);
                    if (n.h.is_finite())
                        push(it->second);
                }
                continue;
            }
            Cost hv = h.evaluate(succ);
            ++result.heuristic_evals;
            const int idx = static_cast<int>(nodes.size());
            index.emplace(succ, idx);
            nodes.push_back({std::move(succ), succ_g, hv, cur, static_cast<ActionId>(a)});
            if (hv.is_finite())
                push(idx);
        }
    }
    return finish(SearchStatus::Unsolvable);
}

Cost validate_plan(const GroundedTask &t, std::span<const ActionId> plan) {
    State s = t.initial_state();
    double cost = 0.0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        ActionId a = plan[i];
        if (a < 0 || static_cast<std::size_t>(a) >= t.num_actions())
            throw PlanValidationError(PlanValidationError::Kind::UnknownAction, i,
                                      "step " + std::to_string(i) + ": unknown action id " + std::to_string(a));
        const GroundedAction &o = t.action(a);
        if (!is_applicable(s, o))
            throw PlanValidationError(PlanValidationError::Kind::InapplicableAction, i,
                                      "step " + std::to_string(i) + ": action " + o.name + " is not applicable");
        s = apply_action(s, o);
        cost += o.cost;
    }
    if (!is_goal(s, t))
        throw PlanValidationError(PlanValidationError::Kind::GoalNotReached, plan.size(),
                                  "plan does not reach the goal");
    return Cost(cost);
}

nlohmann::json to_json(const SearchResult &r, const GroundedTask &t) {
    nlohmann::json j;
    j["status"] = to_string(r.status);
    if (r.plan) {
        std::vector<std::string> names;
        for (ActionId a : *r.plan)
            names.push_back(t.action(a).name);
        j["plan"] = names;
        j["plan_cost"] = r.plan_cost.value();
    } else {
        j["plan"] = nullptr;
        j["plan_cost"] = nullptr;
    }
    j["expansions"] = r.expansions;
    j["generated"] = r.generated;
    j["heuristic_evals"] = r.heuristic_evals;
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

}  // namespace hgnplan
