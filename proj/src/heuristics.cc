#include "hgnplan/heuristics.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

namespace hgnplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Residual action costs below this are treated as exhausted by LM-cut.
constexpr double kZeroCost = 1e-9;

}  // namespace

DeleteRelaxation::DeleteRelaxation(const GroundedTask &t)
    : task_(t),
      n_props_(t.num_props()),
      goal_prop_(t.num_props()),
      true_prop_(t.num_props() + 1),
      goal_action_(t.num_actions()) {
    const std::size_t n_total_props = n_props_ + 2;
    const std::size_t n_total_actions = t.num_actions() + 1;
    pre_.resize(n_total_actions);
    add_.resize(n_total_actions);
    base_costs_.resize(n_total_actions, 0.0);
    for (std::size_t a = 0; a < t.num_actions(); ++a) {
        const auto &o = t.action(static_cast<ActionId>(a));
        pre_[a] = o.pre.empty() ? std::vector<int>{static_cast<int>(true_prop_)} : o.pre;
        add_[a] = o.add;
        base_costs_[a] = o.cost;
    }
    pre_[goal_action_] = t.goal().empty() ? std::vector<int>{static_cast<int>(true_prop_)} : t.goal();
    add_[goal_action_] = {static_cast<int>(goal_prop_)};

    pre_of_.resize(n_total_props);
    achievers_.resize(n_total_props);
    for (std::size_t a = 0; a < n_total_actions; ++a) {
        for (int p : pre_[a])
            pre_of_[static_cast<std::size_t>(p)].push_back(static_cast<int>(a));
        for (int p : add_[a])
            achievers_[static_cast<std::size_t>(p)].push_back(static_cast<int>(a));
    }
    prop_cost_.resize(n_total_props);
    unsatisfied_.resize(n_total_actions);
    accumulated_.resize(n_total_actions);
}

void DeleteRelaxation::explore(const State &s, Combine combine, const std::vector<double> &costs) {
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    std::fill(prop_cost_.begin(), prop_cost_.end(), kInf);
    for (std::size_t a = 0; a < pre_.size(); ++a) {
        unsatisfied_[a] = static_cast<int>(pre_[a].size());
        accumulated_[a] = 0.0;
    }
    auto reach = [&](int p, double c) {
        if (c < prop_cost_[static_cast<std::size_t>(p)]) {
            prop_cost_[static_cast<std::size_t>(p)] = c;
            queue.emplace(c, p);
        }
    };
    for (std::size_t p = 0; p < n_props_; ++p)
        if (s.test(static_cast<PropId>(p)))
            reach(static_cast<int>(p), 0.0);
    reach(static_cast<int>(true_prop_), 0.0);

    while (!queue.empty()) {
        auto [d, p] = queue.top();
        queue.pop();
        if (d > prop_cost_[static_cast<std::size_t>(p)])
            continue;
        for (int a : pre_of_[static_cast<std::size_t>(p)]) {
            auto ai = static_cast<std::size_t>(a);
            if (combine == Combine::Max)
                accumulated_[ai] = std::max(accumulated_[ai], d);
            else
                accumulated_[ai] += d;
            if (--unsatisfied_[ai] == 0) {
                double c = accumulated_[ai] + costs[ai];
                for (int q : add_[ai])
                    reach(q, c);
            }
        }
    }
}

Cost DeleteRelaxation::hmax(const State &s) {
    explore(s, Combine::Max, base_costs_);
    double g = prop_cost_[goal_prop_];
    return g == kInf ? Cost::infinity() : Cost(g);
}

Cost DeleteRelaxation::hadd(const State &s) {
    explore(s, Combine::Sum, base_costs_);
    double g = prop_cost_[goal_prop_];
    return g == kInf ? Cost::infinity() : Cost(g);
}

Cost DeleteRelaxation::lmcut(const State &s) {
    lm_costs_ = base_costs_;
    explore(s, Combine::Max, lm_costs_);
    if (prop_cost_[goal_prop_] == kInf)
        return Cost::infinity();

    const std::size_t n_total_props = prop_cost_.size();
    const std::size_t n_total_actions = pre_.size();
    std::vector<int> supporter(n_total_actions, -1);
    std::vector<std::vector<int>> supported_by(n_total_props);
    std::vector<char> in_goal_zone(n_total_props);
    std::vector<char> reached(n_total_props);
    std::vector<char> in_cut(n_total_actions);
    std::vector<int> stack;
    std::vector<int> cut;

    double total = 0.0;
    while (prop_cost_[goal_prop_] > 0.0) {
        // Justification graph: each reachable action hangs off its costliest
        // precondition, lowest id on ties.
        for (auto &v : supported_by)
            v.clear();
        for (std::size_t a = 0; a < n_total_actions; ++a) {
            int best = -1;
            double best_cost = -1.0;
            for (int p : pre_[a]) {
                double c = prop_cost_[static_cast<std::size_t>(p)];
                if (c > best_cost) {
                    best_cost = c;
                    best = p;
                }
            }
            if (best_cost == kInf)
                best = -1;
            supporter[a] = best;
            if (best >= 0)
                supported_by[static_cast<std::size_t>(best)].push_back(static_cast<int>(a));
        }

        // Goal zone: propositions with a zero-cost justification path to the goal.
        std::fill(in_goal_zone.begin(), in_goal_zone.end(), 0);
        in_goal_zone[goal_prop_] = 1;
        stack.assign(1, static_cast<int>(goal_prop_));
        while (!stack.empty()) {
            int q = stack.back();
            stack.pop_back();
            for (int a : achievers_[static_cast<std::size_t>(q)]) {
                int p = supporter[static_cast<std::size_t>(a)];
                if (p < 0 || lm_costs_[static_cast<std::size_t>(a)] > kZeroCost)
                    continue;
                if (!in_goal_zone[static_cast<std::size_t>(p)]) {
                    in_goal_zone[static_cast<std::size_t>(p)] = 1;
                    stack.push_back(p);
                }
            }
        }

        // Forward from the state without entering the goal zone; edges into it form the cut.
        std::fill(reached.begin(), reached.end(), 0);
        std::fill(in_cut.begin(), in_cut.end(), 0);
        cut.clear();
        stack.clear();
        auto visit = [&](int p) {
            if (!reached[static_cast<std::size_t>(p)]) {
                reached[static_cast<std::size_t>(p)] = 1;
                stack.push_back(p);
            }
        };
        for (std::size_t p = 0; p < n_props_; ++p)
            if (s.test(static_cast<PropId>(p)))
                visit(static_cast<int>(p));
        visit(static_cast<int>(true_prop_));
        while (!stack.empty()) {
            int p = stack.back();
            stack.pop_back();
            for (int a : supported_by[static_cast<std::size_t>(p)]) {
                for (int q : add_[static_cast<std::size_t>(a)]) {
                    if (in_goal_zone[static_cast<std::size_t>(q)]) {
                        if (!in_cut[static_cast<std::size_t>(a)]) {
                            in_cut[static_cast<std::size_t>(a)] = 1;
                            cut.push_back(a);
                        }
                    } else {
                        visit(q);
                    }
                }
            }
        }
        if (cut.empty())
            throw std::logic_error("LM-cut found an empty cut");

        double m = kInf;
        for (int a : cut)
            m = std::min(m, lm_costs_[static_cast<std::size_t>(a)]);
        total += m;
        for (int a : cut) {
            double &c = lm_costs_[static_cast<std::size_t>(a)];
            c -= m;
            if (c < kZeroCost)
                c = 0.0;
        }
        explore(s, Combine::Max, lm_costs_);
    }
    return Cost(total);
}

Cost h_blind(const GroundedTask &t, const State &s) {
    if (is_goal(s, t))
        return Cost(0.0);
    double m = t.min_action_cost();
    return m == kInf ? Cost::infinity() : Cost(m);
}

Cost h_max(const GroundedTask &t, const State &s) {
    return DeleteRelaxation(t).hmax(s);
}

Cost h_add(const GroundedTask &t, const State &s) {
    return DeleteRelaxation(t).hadd(s);
}

Cost h_lmcut(const GroundedTask &t, const State &s) {
    return DeleteRelaxation(t).lmcut(s);
}

namespace {

class BlindHeuristic final : public Heuristic {
public:
    explicit BlindHeuristic(const GroundedTask &t) : task_(t), min_cost_(t.min_action_cost()) {}
    Cost evaluate(const State &s) override {
        if (is_goal(s, task_))
            return Cost(0.0);
        return min_cost_ == kInf ? Cost::infinity() : Cost(min_cost_);
    }
    std::string name() const override { return "blind"; }

private:
    const GroundedTask &task_;
    double min_cost_;
};

class RelaxationHeuristic final : public Heuristic {
public:
    using Method = Cost (DeleteRelaxation::*)(const State &);
    RelaxationHeuristic(const GroundedTask &t, Method m, std::string name)
        : relaxation_(t), method_(m), name_(std::move(name)) {}
    Cost evaluate(const State &s) override { return (relaxation_.*method_)(s); }
    std::string name() const override { return name_; }

private:
    DeleteRelaxation relaxation_;
    Method method_;
    std::string name_;
};

}  // namespace

std::unique_ptr<Heuristic> make_classic_heuristic(std::string_view name, const GroundedTask &t) {
    if (name == "blind")
        return std::make_unique<BlindHeuristic>(t);
    if (name == "hmax")
        return std::make_unique<RelaxationHeuristic>(t, &DeleteRelaxation::hmax, "hmax");
    if (name == "hadd")
        return std::make_unique<RelaxationHeuristic>(t, &DeleteRelaxation::hadd, "hadd");
    if (name == "lmcut")
        return std::make_unique<RelaxationHeuristic>(t, &DeleteRelaxation::lmcut, "lmcut");
    throw std::invalid_argument("unknown heuristic '" + std::string(name) + "'");
}

}  // namespace hgnplan
