// End-to-end acceptance checks. Prints one "criterion N: PASS|FAIL ..." line per
// criterion on stdout; diagnostics go to stderr. Exit status is nonzero if any
// selected criterion fails.

#include "model_oracle.h"
#include "support.h"

#include "hgnplan/experiment.h"
#include "hgnplan/generators.h"
#include "hgnplan/heuristics.h"
#include "hgnplan/hypergraph.h"
#include "hgnplan/pddl.h"
#include "hgnplan/search.h"
#include "hgnplan/strips_hgn.h"
#include "hgnplan/training.h"

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace hgnplan;
using namespace hgnplan::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

constexpr int kOracleTasks = 1000;

// Half unit-cost, half with costs in 0..3, so zero-cost actions show up too.
GroundedTask oracle_task(int i) {
    return random_task(static_cast<std::uint64_t>(i) + 10000,
                       {.max_props = 12, .max_actions = 20, .unit_cost = i % 2 == 0});
}

double value_or_inf(Cost c) { return c.is_infinite() ? kInf : c.value(); }

Hypergraph input_for(const GroundedTask &t, const State &s) {
    auto st = std::make_shared<const HypergraphStructure>(build_structure(t));
    return encode_features(st, t, s);
}

Outcome heuristic_oracles() {
    Stopwatch sw;
    std::size_t states = 0, violations = 0;
    for (int i = 0; i < kOracleTasks; ++i) {
        GroundedTask t = oracle_task(i);
        DeleteRelaxation dr(t);
        for (const auto &[s, hstar] : all_hstar(t)) {
            ++states;
            double hmax = value_or_inf(dr.hmax(s));
            double hadd = value_or_inf(dr.hadd(s));
            double lm = value_or_inf(dr.lmcut(s));
            if (!(hmax <= lm && lm <= hstar && hmax <= hadd)) {
                ++violations;
                std::cerr << fmt::format("  {}: hmax {} hadd {} lmcut {} h* {}\n", t.name(), hmax, hadd, lm, hstar);
            }
        }
    }
    double secs = sw.seconds();
    return {violations == 0 && secs < 120.0,
            fmt::format("{} tasks, {} reachable states, {} violations, {:.1f}s", kOracleTasks, states, violations,
                        secs)};
}

Outcome fixtures() {
    auto triple = [](const GroundedTask &t) {
        State s = t.initial_state();
        return std::array<double, 3>{value_or_inf(h_max(t, s)), value_or_inf(h_add(t, s)),
                                     value_or_inf(h_lmcut(t, s))};
    };
    auto c = triple(chain3());
    auto f = triple(fork_task());
    bool ok = c == std::array<double, 3>{2, 2, 2} && f == std::array<double, 3>{2, 3, 3};
    return {ok, fmt::format("CHAIN3 ({}, {}, {}), FORK ({}, {}, {})", c[0], c[1], c[2], f[0], f[1], f[2])};
}

Outcome astar_optimality() {
    std::size_t mismatches = 0, solvable = 0;
    for (int i = 0; i < kOracleTasks; ++i) {
        GroundedTask t = oracle_task(i);
        double opt = brute_force_hstar(t, t.initial_state());
        solvable += opt < kInf;
        for (const char *name : {"lmcut", "blind"}) {
            auto h = make_classic_heuristic(name, t);
            SearchResult r = astar(t, *h);
            double got = value_or_inf(r.plan_cost);
            bool ok = got == opt;
            if (ok && r.plan)
                ok = validate_plan(t, *r.plan) == r.plan_cost;
            if (!ok) {
                ++mismatches;
                std::cerr << fmt::format("  {} {}: astar {} optimal {}\n", t.name(), name, got, opt);
            }
        }
    }
    return {mismatches == 0,
            fmt::format("{} tasks ({} solvable) x 2 heuristics, {} mismatches", kOracleTasks, solvable, mismatches)};
}

// Sign pattern of every activated pre-activation in a forward pass. Central
// differences are only meaningful when the pattern is the same at both ends of the
// step.
std::vector<bool> activation_pattern(const StripsHgnModel &m, const ForwardTrace &tr) {
    std::vector<bool> out;
    auto add = [&](const MlpParams &p, const MlpCache &c) {
        for (std::size_t l = 0; l < c.pre_activations.size() && l < p.layers.size(); ++l)
            if (p.activated(l))
                for (std::size_t r = 0; r < c.pre_activations[l].rows(); ++r)
                    for (double z : c.pre_activations[l].row(r))
                        out.push_back(z > 0.0);
    };
    add(m.encoder.edge, tr.encoder.edge);
    add(m.encoder.vertex, tr.encoder.vertex);
    for (const auto &c : tr.core) {
        add(m.core.edge, c.edge);
        add(m.core.vertex, c.vertex);
        add(m.core.global, c.global);
    }
    for (const auto &c : tr.decoder)
        add(m.decoder, c);
    return out;
}

Outcome gradient_fidelity() {
    Stopwatch sw;
    constexpr double kStep = 1e-5;
    constexpr int kConfigs = 120;
    double worst_entry = 0.0, worst_norm = 0.0;
    std::size_t entries = 0, kinks = 0;
    int failed = 0;
    for (int c = 0; c < kConfigs; ++c) {
        const auto seed = static_cast<std::uint64_t>(c);
        GroundedTask t = random_task(seed + 20000, {.max_props = 6, .max_actions = 8, .unit_cost = c % 3 == 0});
        StripsHgnConfig cfg;
        cfg.latent_width = 4 + static_cast<std::size_t>(c % 5);
        cfg.steps = 1 + static_cast<std::size_t>(c / 5 % 3);
        cfg.arity = arity_of(build_structure(t));
        StripsHgnModel m = random_model(cfg, seed);

        std::mt19937_64 rng(seed);
        auto states = reachable_states(t);
        State s = states[std::uniform_int_distribution<std::size_t>(0, states.size() - 1)(rng)];
        HgnExample ex{input_for(t, s), std::uniform_real_distribution<double>(0.0, 10.0)(rng)};

        StripsHgnModel grads = loss_gradients(m, ex);
        auto params = m.parameters();
        auto g = std::as_const(grads).parameters();
        ForwardTrace base;
        forward(m, ex.input, &base);
        const std::vector<bool> pattern = activation_pattern(m, base);

        // Loss at theta_i = v, and whether the activation pattern matches theta's.
        auto probe = [&](double &theta, double v) {
            double saved = theta;
            theta = v;
            ForwardTrace tr;
            auto out = forward(m, ex.input, &tr);
            theta = saved;
            return std::pair{step_loss(out, ex.target), activation_pattern(m, tr) == pattern};
        };

        double entry = 0.0, diff2 = 0.0, an2 = 0.0, fd2 = 0.0;
        bool config_ok = true;
        for (std::size_t b = 0; b < params.size(); ++b)
            for (std::size_t i = 0; i < params[b].size(); ++i) {
                ++entries;
                double &theta = params[b][i];
                double fd = 0.0;
                bool smooth = false;
                // The prescribed step first; smaller ones only if it straddles a kink.
                for (double h = kStep; h >= 1e-8 && !smooth; h /= 10) {
                    auto [up, up_same] = probe(theta, theta + h);
                    auto [down, down_same] = probe(theta, theta - h);
                    fd = (up - down) / (2 * h);
                    smooth = up_same && down_same;
                    if (!smooth && h == kStep)
                        ++kinks;
                }
                double a = g[b][i];
                double err = std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1.0});
                config_ok = config_ok && smooth;
                entry = std::max(entry, err);
                diff2 += (fd - a) * (fd - a);
                an2 += a * a;
                fd2 += fd * fd;
            }
        double norm = diff2 == 0.0 ? 0.0 : std::sqrt(diff2) / std::sqrt(std::max(an2, fd2));
        if (!config_ok || entry >= 1e-4 || norm >= 1e-4) {
            ++failed;
            std::cerr << fmt::format("  config {}: L={} M={} entry {:.3g} norm {:.3g}{}\n", c, cfg.latent_width,
                                     cfg.steps, entry, norm, config_ok ? "" : " (unresolved kink)");
        }
        worst_entry = std::max(worst_entry, entry);
        worst_norm = std::max(worst_norm, norm);
    }
    double secs = sw.seconds();
    return {failed == 0 && secs < 180.0,
            fmt::format("{} configs, {} entries, worst entry error {:.2e}, worst norm error {:.2e}, "
                        "kink-straddling entries re-checked at a smaller step: {}, {:.1f}s",
                        kConfigs, entries, worst_entry, worst_norm, kinks, secs)};
}

// Every state on an optimal plan with its cost-to-go; mirrors what gen-data emits.
std::vector<HgnExample> plan_examples(const GroundedTask &t) {
    auto h = make_classic_heuristic("lmcut", t);
    SearchResult r = astar(t, *h);
    auto st = std::make_shared<const HypergraphStructure>(build_structure(t));
    std::vector<HgnExample> out;
    State s = t.initial_state();
    double remaining = r.plan_cost.value();
    out.push_back({encode_features(st, t, s), remaining});
    for (ActionId a : *r.plan) {
        s = apply_action(s, t.action(static_cast<std::size_t>(a)));
        remaining -= t.action(static_cast<std::size_t>(a)).cost;
        out.push_back({encode_features(st, t, s), remaining});
    }
    return out;
}

Outcome overfit() {
    Stopwatch sw;
    std::vector<HgnExample> samples = plan_examples(chain3());
    auto fork_samples = plan_examples(fork_task());
    samples.insert(samples.end(), fork_samples.begin(), fork_samples.end());

    TrainConfig cfg;
    cfg.max_epochs = 2000;
    cfg.fold_time_budget_s = 300.0;
    cfg.model.latent_width = 16;
    cfg.model.steps = 5;
    cfg.model.arity = {.n_sender = 2, .n_receiver = 1};
    FoldResult r = train_fold(samples, samples, cfg, 0);

    std::size_t first_below = 0;
    for (std::size_t e = 0; e < r.val_loss_history.size() && first_below == 0; ++e)
        if (r.val_loss_history[e] < 0.05)
            first_below = e + 1;
    double secs = sw.seconds();
    return {r.best_val_loss < 0.05 && secs < 300.0,
            fmt::format("{} samples, best training loss {:.5f} at epoch {} of {}, first < 0.05 at epoch {}, {:.1f}s",
                        samples.size(), r.best_val_loss, r.best_epoch, r.epochs_run, first_below, secs)};
}

struct GripperRun {
    int balls = 0;
    SearchResult hgn, blind;
    double optimal = 0.0;
};

Outcome gripper_reproduction(const std::filesystem::path &work_dir) {
    Stopwatch sw;
    std::filesystem::create_directories(work_dir);
    auto write = [](const std::filesystem::path &p, const std::string &text) {
        std::ofstream out(p);
        out << text;
    };
    const auto domain_path = work_dir / "gripper-domain.pddl";
    write(domain_path, domain_text(GeneratorDomain::Gripper));
    auto problem_path = [&](int n) { return work_dir / fmt::format("gripper-b{}.pddl", n); };
    for (int n = 1; n <= 8; ++n)
        write(problem_path(n), gen_problem(GeneratorDomain::Gripper, {.balls = n}, 0));

    std::vector<TaskSource> train;
    for (int n = 1; n <= 3; ++n)
        train.push_back({domain_path.string(), problem_path(n).string()});
    auto samples = generate_training_data(train);
    write_samples(work_dir / "samples.jsonl", samples);

    TrainConfig cfg;
    cfg.k_folds = 5;
    cfg.resample_to = 60;
    cfg.fold_time_budget_s = 300.0;
    std::vector<DomainDef> doms{parse_domain(domain_text(GeneratorDomain::Gripper))};
    cfg.model.arity = compute_arity_bounds(doms);
    TaskCache cache;
    KFoldResult trained = run_kfold_training({make_examples(samples, cache)}, cfg);
    save_model(trained.model, work_dir / "model.json");
    std::cerr << fmt::format("  {} samples, chosen fold {} (val loss {:.6f}), training {:.0f}s\n", samples.size(),
                             trained.chosen_fold + 1, trained.folds[trained.chosen_fold].best_val_loss, sw.seconds());
    auto model = std::make_shared<const StripsHgnModel>(trained.model);

    std::vector<GripperRun> runs;
    SearchLimits lim{.timeout_s = 60.0};
    for (int n = 4; n <= 8; ++n) {
        GroundedTask t = load_task(domain_path.string(), problem_path(n).string());
        GripperRun run{.balls = n};
        HgnHeuristic hgn(model, t);
        run.hgn = astar(t, hgn, lim);
        run.blind = astar(t, *make_classic_heuristic("blind", t), lim);
        SearchResult opt = astar(t, *make_classic_heuristic("lmcut", t), {.timeout_s = 300.0});
        run.optimal = value_or_inf(opt.plan_cost);
        std::cerr << fmt::format("  {} balls: hgn {} cost {} exp {} | blind {} exp {} | optimal {}\n", n,
                                 to_string(run.hgn.status), value_or_inf(run.hgn.plan_cost), run.hgn.expansions,
                                 to_string(run.blind.status), run.blind.expansions, run.optimal);
        runs.push_back(std::move(run));
    }

    std::size_t solved = 0, fewer = 0;
    std::vector<double> deviations;
    for (const auto &r : runs) {
        bool ok = r.hgn.status == SearchStatus::Solved;
        solved += ok;
        // An unsolved blind search counts as expanding more than a solved hgn search.
        fewer += ok && (r.blind.status != SearchStatus::Solved || r.hgn.expansions < r.blind.expansions);
        deviations.push_back(ok && r.optimal < kInf ? (r.hgn.plan_cost.value() - r.optimal) / r.optimal : kInf);
    }
    std::sort(deviations.begin(), deviations.end());
    double median = deviations[deviations.size() / 2];
    double secs = sw.seconds();
    bool pass = solved == runs.size() && fewer >= 4 && median <= 0.20 && secs < 2700.0;
    return {pass, fmt::format("solved {}/5, fewer expansions than blind on {}/5, median deviation {:.1f}%, {:.0f}s",
                              solved, fewer, 100.0 * median, secs)};
}

Outcome configuration_defaults() {
    std::vector<std::string> wrong;
    auto expect = [&](bool ok, const char *what) {
        if (!ok)
            wrong.push_back(what);
    };
    StripsHgnConfig mc;
    expect(mc.steps == 10, "M");
    expect(mc.latent_width == 32 && mc.mlp_layers == 2, "hidden layers");
    StripsHgnModel m = StripsHgnModel::initialized(mc, 0);
    for (const MlpParams *p : {&m.encoder.edge, &m.encoder.vertex, &m.core.edge, &m.core.vertex, &m.core.global}) {
        expect(p->layers.size() == 2, "update function depth");
        for (std::size_t l = 0; l < p->layers.size(); ++l) {
            expect(p->layers[l].weight.rows() == 32, "update function width");
            expect(p->activated(l), "update function activation");
        }
        expect(p->slope == kDefaultLeakySlope && kDefaultLeakySlope > 0.0, "LeakyReLU");
    }
    expect(m.decoder.layers.size() == 3 && m.decoder.layers.back().weight.rows() == 1 &&
               !m.decoder.activated(2) && m.decoder.activated(1),
           "decoder");
    for (const HgnBlockConfig &b : {encoder_block_config(mc.arity), core_block_config(mc.arity)})
        expect(b.edge_to_vertex == Aggregator::Sum && b.edge_to_global == Aggregator::Sum &&
                   b.vertex_to_global == Aggregator::Sum,
               "sum aggregation");
    TrainConfig tc;
    expect(tc.n_bins == 4, "bins");
    expect(tc.k_folds == 10, "folds");
    expect(tc.learning_rate == 0.001 && tc.weight_decay == 0.00025, "Adam");
    expect(tc.minibatch == 1, "minibatch");
    expect(SearchLimits{}.timeout_s == 300.0 && ExperimentSpec{}.timeout_s == 300.0, "search timeout");
    expect(kDataGenTimeout == 120.0, "data-gen timeout");
    std::string detail = wrong.empty() ? "all defaults match" : "mismatched:";
    for (const auto &w : wrong)
        detail += " " + w + ";";
    return {wrong.empty(), detail};
}

Outcome invariance() {
    double worst = 0.0;
    std::size_t zero_bad = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        GroundedTask t = random_task(seed + 30000, {.max_props = 10, .max_actions = 14});
        StripsHgnConfig cfg;
        cfg.latent_width = 8;
        cfg.steps = 4;
        cfg.arity = arity_of(build_structure(t));
        StripsHgnModel m = random_model(cfg, seed);
        auto states = reachable_states(t);
        std::mt19937_64 rng(seed);
        Hypergraph g = input_for(t, states[rng() % states.size()]);
        std::vector<int> vp(g.structure->n_vertices), ep(g.structure->n_edges());
        std::iota(vp.begin(), vp.end(), 0);
        std::iota(ep.begin(), ep.end(), 0);
        std::shuffle(vp.begin(), vp.end(), rng);
        std::shuffle(ep.begin(), ep.end(), rng);
        auto a = forward(m, g);
        auto b = forward(m, permuted(g, vp, ep));
        for (std::size_t i = 0; i < a.size(); ++i)
            worst = std::max(worst, rel_error(a[i], b[i]));

        StripsHgnModel z = StripsHgnModel::zeros(cfg);
        for (const State &s : states) {
            auto out = forward(z, input_for(t, s));
            zero_bad += std::any_of(out.begin(), out.end(), [](double h) { return h != 0.0; });
        }
    }

    StripsHgnConfig cfg;
    cfg.arity = arity_of(build_structure(fork_task()));
    StripsHgnModel m = random_model(cfg, 99);
    auto path = std::filesystem::temp_directory_path() / "hgnplan-acceptance-model.json";
    save_model(m, path);
    StripsHgnModel back = load_model(path);
    std::filesystem::remove(path);
    auto pa = std::as_const(m).parameters();
    auto pb = std::as_const(back).parameters();
    bool exact = back.config == m.config && pa.size() == pb.size();
    for (std::size_t s = 0; exact && s < pa.size(); ++s)
        exact = pa[s].size() == pb[s].size() &&
                std::memcmp(pa[s].data(), pb[s].data(), pa[s].size() * sizeof(double)) == 0;

    return {worst < 1e-9 && zero_bad == 0 && exact,
            fmt::format("worst relative change {:.2e}, zero-model nonzero outputs {}, round trip {}", worst, zero_bad,
                        exact ? "bit-exact" : "differs")};
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"hgnplan acceptance checks"};
    std::vector<int> selected;
    std::string work_dir = "acceptance-work";
    app.add_option("--criterion,-c", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 8));
    app.add_option("--work-dir", work_dir, "Scratch directory for the Gripper run");
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);
    if (const char *level = std::getenv("HGNPLAN_LOG"))
        spdlog::set_level(spdlog::level::from_str(level));
    if (selected.empty())
        selected = {1, 2, 3, 4, 5, 6, 7, 8};

    const std::map<int, std::function<Outcome()>> criteria{
        {1, heuristic_oracles},
        {2, fixtures},
        {3, astar_optimality},
        {4, gradient_fidelity},
        {5, overfit},
        {6, [&] { return gripper_reproduction(work_dir); }},
        {7, configuration_defaults},
        {8, invariance},
    };
    bool all = true;
    for (int c : std::set<int>(selected.begin(), selected.end())) {
        Outcome o;
        try {
            o = criteria.at(c)();
        } catch (const std::exception &e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")" << std::endl;
    }
    return all ? 0 : 1;
}
