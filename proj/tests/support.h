#pragma once

#include "hgnplan/task.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace hgnplan::testing {

constexpr double kInf = std::numeric_limits<double>::infinity();

// props {a,b,g}; o1: {a} -> {b}; o2: {b} -> {g}; I = {a}; G = {g}.
inline GroundedTask chain3(std::vector<PropId> init = {0}) {
    return GroundedTask::make({"a", "b", "g"}, {{"o1", {0}, {1}, {}, 1.0}, {"o2", {1}, {2}, {}, 1.0}}, init, {2},
                              "chain3");
}

// props {a,b,c,g}; o1: {a} -> {b}; o2: {a} -> {c}; o3: {b,c} -> {g}; I = {a}; G = {g}.
inline GroundedTask fork_task() {
    return GroundedTask::make({"a", "b", "c", "g"},
                              {{"o1", {0}, {1}, {}, 1.0}, {"o2", {0}, {2}, {}, 1.0}, {"o3", {1, 2}, {3}, {}, 1.0}},
                              {0}, {3}, "fork");
}

struct RandomTaskParams {
    int max_props = 12;
    int max_actions = 20;
    bool unit_cost = false;
};

inline GroundedTask random_task(std::uint64_t seed, const RandomTaskParams &p = {}) {
    std::mt19937_64 rng(seed);
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int n = uni(3, p.max_props);
    const int m = uni(1, p.max_actions);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i)
        names.push_back("p" + std::string(i < 10 ? "0" : "") + std::to_string(i));
    auto subset = [&](int lo, int hi) {
        std::vector<PropId> s;
        int k = uni(lo, hi);
        for (int i = 0; i < k; ++i)
            s.push_back(uni(0, n - 1));
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    };
    std::vector<GroundedAction> actions;
    for (int a = 0; a < m; ++a) {
        GroundedAction o;
        o.name = "a" + std::to_string(a);
        o.pre = subset(0, 3);
        o.add = subset(1, 2);
        o.del = subset(0, 2);
        o.cost = p.unit_cost ? 1.0 : static_cast<double>(uni(0, 3));
        actions.push_back(std::move(o));
    }
    return GroundedTask::make(names, actions, subset(1, 3), subset(1, 3), "random-" + std::to_string(seed));
}

inline std::vector<State> reachable_states(const GroundedTask &t) {
    std::vector<State> out{t.initial_state()};
    std::unordered_map<State, int, StateHash> seen{{out[0], 0}};
    for (std::size_t i = 0; i < out.size(); ++i)
        for (const auto &o : t.actions())
            if (is_applicable(out[i], o)) {
                State s = apply_action(out[i], o);
                if (seen.emplace(s, 0).second)
                    out.push_back(s);
            }
    return out;
}

// Exact optimal cost-to-go by uniform-cost search from s.
inline double brute_force_hstar(const GroundedTask &t, const State &s0) {
    using Entry = std::pair<double, int>;
    std::vector<State> states{s0};
    std::unordered_map<State, int, StateHash> idx{{s0, 0}};
    std::vector<double> dist{0.0};
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> q;
    q.emplace(0.0, 0);
    while (!q.empty()) {
        auto [d, i] = q.top();
        q.pop();
        if (d > dist[static_cast<std::size_t>(i)])
            continue;
        State s = states[static_cast<std::size_t>(i)];
        if (is_goal(s, t))
            return d;
        for (const auto &o : t.actions()) {
            if (!is_applicable(s, o))
                continue;
            State n = apply_action(s, o);
            double nd = d + o.cost;
            auto it = idx.find(n);
            if (it == idx.end()) {
                idx.emplace(n, static_cast<int>(states.size()));
                states.push_back(n);
                dist.push_back(nd);
                q.emplace(nd, static_cast<int>(states.size()) - 1);
            } else if (nd < dist[static_cast<std::size_t>(it->second)]) {
                dist[static_cast<std::size_t>(it->second)] = nd;
                q.emplace(nd, it->second);
            }
        }
    }
    return kInf;
}

// h* of every reachable state: explicit state graph, then Dijkstra backwards from
// the goal states.
inline std::unordered_map<State, double, StateHash> all_hstar(const GroundedTask &t) {
    std::vector<State> states = reachable_states(t);
    std::unordered_map<State, int, StateHash> idx;
    for (std::size_t i = 0; i < states.size(); ++i)
        idx.emplace(states[i], static_cast<int>(i));
    std::vector<std::vector<std::pair<int, double>>> preds(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
        for (const auto &o : t.actions())
            if (is_applicable(states[i], o))
                preds[static_cast<std::size_t>(idx.at(apply_action(states[i], o)))].emplace_back(static_cast<int>(i),
                                                                                                  o.cost);
    using Entry = std::pair<double, int>;
    std::vector<double> dist(states.size(), kInf);
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> q;
    for (std::size_t i = 0; i < states.size(); ++i)
        if (is_goal(states[i], t)) {
            dist[i] = 0.0;
            q.emplace(0.0, static_cast<int>(i));
        }
    while (!q.empty()) {
        auto [d, i] = q.top();
        q.pop();
        if (d > dist[static_cast<std::size_t>(i)])
            continue;
        for (auto [p, c] : preds[static_cast<std::size_t>(i)])
            if (d + c < dist[static_cast<std::size_t>(p)]) {
                dist[static_cast<std::size_t>(p)] = d + c;
                q.emplace(d + c, p);
            }
    }
    std::unordered_map<State, double, StateHash> out;
    for (std::size_t i = 0; i < states.size(); ++i)
        out.emplace(states[i], dist[i]);
    return out;
}

// h^max / h^add by naive fixpoint iteration over all actions until nothing changes.
inline double fixpoint_heuristic(const GroundedTask &t, const State &s, bool additive) {
    std::vector<double> h(t.num_props(), kInf);
    for (PropId p : s.ids())
        h[static_cast<std::size_t>(p)] = 0.0;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto &o : t.actions()) {
            double c = 0.0;
            for (PropId q : o.pre)
                c = additive ? c + h[static_cast<std::size_t>(q)] : std::max(c, h[static_cast<std::size_t>(q)]);
            if (c == kInf)
                continue;
            c += o.cost;
            for (PropId p : o.add)
                if (c < h[static_cast<std::size_t>(p)]) {
                    h[static_cast<std::size_t>(p)] = c;
                    changed = true;
                }
        }
    }
    double g = 0.0;
    for (PropId p : t.goal())
        g = additive ? g + h[static_cast<std::size_t>(p)] : std::max(g, h[static_cast<std::size_t>(p)]);
    return g;
}

inline double rel_error(double a, double b) {
    if (a == b)
        return 0.0;
    const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / scale;
}

}  // namespace hgnplan::testing
