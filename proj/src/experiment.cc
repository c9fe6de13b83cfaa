#include "hgnplan/experiment.h"

#include "hgnplan/heuristics.h"
#include "hgnplan/task.h"

#include <spdlog/spdlog.h>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace hgnplan {

namespace {

GeneratorRef generator_from_json(const nlohmann::json &j) {
    GeneratorRef g;
    g.domain = parse_generator_domain(j.at("domain").get<std::string>());
    g.params.balls = j.value("balls", g.params.balls);
    g.params.locations = j.value("locations", g.params.locations);
    g.params.cars = j.value("cars", g.params.cars);
    g.params.blocks = j.value("blocks", g.params.blocks);
    g.seed = j.value("seed", std::uint64_t{0});
    return g;
}

void parse_problem_list(const nlohmann::json &list, std::vector<ProblemRef> &files, std::vector<GeneratorRef> &gens) {
    for (const auto &e : list) {
        if (e.contains("generate"))
            gens.push_back(generator_from_json(e.at("generate")));
        else
            files.push_back({e.at("domain").get<std::string>(), e.at("problem").get<std::string>()});
    }
}

std::string generated_stem(const GeneratorRef &g, std::uint64_t seed) {
    switch (g.domain) {
    case GeneratorDomain::Gripper:
        return fmt::format("gripper-b{}", g.params.balls);
    case GeneratorDomain::Ferry:
        return fmt::format("ferry-l{}-c{}-s{}", g.params.locations, g.params.cars, seed);
    case GeneratorDomain::Blocksworld:
        return fmt::format("blocksworld-n{}-s{}", g.params.blocks, seed);
    }
    return "problem";
}

std::string opt_str(const std::optional<double> &v) {
    return v ? fmt::format("{}", *v) : std::string();
}

std::optional<double> parse_opt(const std::string &s) {
    if (s.empty())
        return std::nullopt;
    return std::stod(s);
}

}  // namespace

ExperimentSpec experiment_from_json(const nlohmann::json &j) {
    try {
        ExperimentSpec s;
        if (j.contains("train"))
            parse_problem_list(j.at("train"), s.train, s.generate_train);
        parse_problem_list(j.at("test"), s.test, s.generate_test);
        if (j.contains("heuristics"))
            s.heuristics = j.at("heuristics").get<std::vector<std::string>>();
        if (j.contains("model"))
            s.model_path = j.at("model").get<std::string>();
        s.timeout_s = j.value("timeout_s", s.timeout_s);
        if (j.contains("optimal_timeout_s"))
            s.optimal_timeout_s = j.at("optimal_timeout_s").get<double>();
        s.repetitions = j.value("repetitions", s.repetitions);
        s.seed = j.value("seed", s.seed);
        s.work_dir = j.value("work_dir", s.work_dir);
        if (s.heuristics.empty())
            throw std::invalid_argument("experiment lists no heuristics");
        if (s.repetitions < 1)
            throw std::invalid_argument("repetitions must be at least 1");
        return s;
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument(std::string("malformed experiment spec: ") + e.what());
    }
}

ExperimentSpec load_experiment(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open experiment spec " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument("malformed experiment spec " + path.string() + ": " + e.what());
    }
    return experiment_from_json(j);
}

void materialize_problems(ExperimentSpec &spec) {
    if (spec.generate_train.empty() && spec.generate_test.empty())
        return;
    std::filesystem::create_directories(spec.work_dir);
    auto emit = [&](const std::vector<GeneratorRef> &gens, std::vector<ProblemRef> &out, const std::string &tag) {
        for (std::size_t rep = 0; rep < spec.repetitions; ++rep)
            for (const auto &g : gens) {
                const std::uint64_t seed = g.seed + spec.seed + rep;
                const std::string dname(generator_domain_name(g.domain));
                auto dpath = std::filesystem::path(spec.work_dir) / (dname + "-domain.pddl");
                if (!std::filesystem::exists(dpath))
                    std::ofstream(dpath) << domain_text(g.domain);
                auto ppath = std::filesystem::path(spec.work_dir) / (tag + "-" + generated_stem(g, seed) + ".pddl");
                std::ofstream(ppath) << gen_problem(g.domain, g.params, seed);
                ProblemRef ref{dpath.string(), ppath.string()};
                bool dup = std::any_of(out.begin(), out.end(), [&](const ProblemRef &r) {
                    return r.problem_path == ref.problem_path;
                });
                if (!dup)
                    out.push_back(ref);
            }
    };
    emit(spec.generate_train, spec.train, "train");
    emit(spec.generate_test, spec.test, "test");
    spec.generate_train.clear();
    spec.generate_test.clear();
}

std::unique_ptr<Heuristic> make_heuristic(const std::string &name, const GroundedTask &t,
                                          std::shared_ptr<const StripsHgnModel> model) {
    if (name == "hgn") {
        if (!model)
            throw std::invalid_argument("heuristic 'hgn' needs a model file");
        return std::make_unique<HgnHeuristic>(std::move(model), t);
    }
    return make_classic_heuristic(name, t);
}

ResultRow make_row(const GroundedTask &t, const std::string &domain, const std::string &problem,
                   const std::string &heuristic, const SearchResult &r, std::optional<double> optimal_cost) {
    ResultRow row;
    row.domain = domain;
    row.problem = problem;
    row.heuristic = heuristic;
    row.status = to_string(r.status);
    row.expansions = r.expansions;
    row.generated = r.generated;
    row.wall_time_s = r.wall_time_s;
    row.heuristic_evals = r.heuristic_evals;
    row.optimal_cost = optimal_cost;
    if (r.status == SearchStatus::Solved && r.plan) {
        row.plan_cost = validate_plan(t, *r.plan).value();
        if (optimal_cost)
            row.deviation = *row.plan_cost - *optimal_cost;
    }
    return row;
}

std::vector<ResultRow> run_experiment(ExperimentSpec spec) {
    materialize_problems(spec);
    std::set<std::string> train_files;
    for (const auto &p : spec.train)
        train_files.insert(std::filesystem::weakly_canonical(p.problem_path).string());
    for (const auto &p : spec.test)
        if (train_files.count(std::filesystem::weakly_canonical(p.problem_path).string()))
            throw std::invalid_argument("test problem " + p.problem_path + " is also a training problem");

    std::shared_ptr<const StripsHgnModel> model;
    if (std::find(spec.heuristics.begin(), spec.heuristics.end(), "hgn") != spec.heuristics.end()) {
        if (!spec.model_path)
            throw std::invalid_argument("experiment requests 'hgn' but names no model");
        model = std::make_shared<const StripsHgnModel>(load_model(*spec.model_path));
    }

    std::vector<ResultRow> rows;
    for (const auto &p : spec.test) {
        if (!std::filesystem::exists(p.domain_path) || !std::filesystem::exists(p.problem_path))
            throw std::runtime_error("missing problem files " + p.domain_path + " / " + p.problem_path);
        GroundedTask t = load_task(p.domain_path, p.problem_path);
        const auto slash = t.name().find('/');
        const std::string domain = t.name().substr(0, slash);
        const std::string problem = std::filesystem::path(p.problem_path).stem().string();

        std::map<std::string, SearchResult> results;
        std::optional<double> optimal;
        SearchLimits lim;
        lim.timeout_s = spec.timeout_s;
        auto run = [&](const std::string &name) {
            auto h = make_heuristic(name, t, model);
            spdlog::debug("{} with {}", t.name(), name);
            return astar(t, *h, lim);
        };
        SearchLimits opt_lim = lim;
        opt_lim.timeout_s = spec.optimal_timeout_s.value_or(spec.timeout_s);
        if (opt_lim.timeout_s == lim.timeout_s &&
            std::find(spec.heuristics.begin(), spec.heuristics.end(), "lmcut") != spec.heuristics.end()) {
            results.emplace("lmcut", run("lmcut"));
            if (results.at("lmcut").status == SearchStatus::Solved)
                optimal = results.at("lmcut").plan_cost.value();
        } else {
            auto h = make_classic_heuristic("lmcut", t);
            SearchResult r = astar(t, *h, opt_lim);
            if (r.status == SearchStatus::Solved)
                optimal = r.plan_cost.value();
        }
        for (const auto &name : spec.heuristics) {
            if (!results.count(name))
                results.emplace(name, run(name));
            rows.push_back(make_row(t, domain, problem, name, results.at(name), optimal));
            const auto &r = rows.back();
            spdlog::info("{} {} {}: {} expansions={} cost={}", domain, problem, name, r.status, r.expansions,
                         opt_str(r.plan_cost));
        }
    }
    return rows;
}

const char *const kResultColumns =
    "domain,problem,heuristic,status,expansions,generated,plan_cost,optimal_cost,deviation,wall_time_s,"
    "heuristic_evals";

void write_csv(std::ostream &out, const std::vector<ResultRow> &rows) {
    out << kResultColumns << '\n';
    for (const auto &r : rows)
        out << fmt::format("{},{},{},{},{},{},{},{},{},{:.6f},{}\n", r.domain, r.problem, r.heuristic, r.status,
                           r.expansions, r.generated, opt_str(r.plan_cost), opt_str(r.optimal_cost),
                           opt_str(r.deviation), r.wall_time_s, r.heuristic_evals);
}

std::vector<ResultRow> read_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultColumns)
        throw std::invalid_argument("results CSV must start with the header: " + std::string(kResultColumns));
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (!line.empty() && line.back() == ',')
            f.emplace_back();
        if (f.size() != 11)
            throw std::invalid_argument("results CSV row has " + std::to_string(f.size()) + " fields: " + line);
        ResultRow r;
        r.domain = f[0];
        r.problem = f[1];
        r.heuristic = f[2];
        r.status = f[3];
        r.expansions = std::stoull(f[4]);
        r.generated = std::stoull(f[5]);
        r.plan_cost = parse_opt(f[6]);
        r.optimal_cost = parse_opt(f[7]);
        r.deviation = parse_opt(f[8]);
        r.wall_time_s = std::stod(f[9]);
        r.heuristic_evals = std::stoull(f[10]);
        rows.push_back(std::move(r));
    }
    return rows;
}

nlohmann::json to_json(const ResultRow &r) {
    auto opt = [](const std::optional<double> &v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"domain", r.domain},
            {"problem", r.problem},
            {"heuristic", r.heuristic},
            {"status", r.status},
            {"expansions", r.expansions},
            {"generated", r.generated},
            {"plan_cost", opt(r.plan_cost)},
            {"optimal_cost", opt(r.optimal_cost)},
            {"deviation", opt(r.deviation)},
            {"wall_time_s", r.wall_time_s},
            {"heuristic_evals", r.heuristic_evals}};
}

double round_coverage(std::size_t solved, std::size_t total) {
    if (total == 0)
        return 0.0;
    return std::round(100.0 * static_cast<double>(solved) / static_cast<double>(total)) / 100.0;
}

std::vector<ReportEntry> report(const std::vector<ResultRow> &rows) {
    if (rows.empty())
        throw std::invalid_argument("report needs at least one result row");
    // Heuristics in first-appearance order, per domain.
    std::vector<std::string> domains;
    std::map<std::string, std::vector<std::string>> heuristics;
    std::map<std::string, std::set<std::string>> problems;
    std::map<std::tuple<std::string, std::string, std::string>, const ResultRow *> cell;
    for (const auto &r : rows) {
        if (!heuristics.count(r.domain))
            domains.push_back(r.domain);
        auto &hs = heuristics[r.domain];
        if (std::find(hs.begin(), hs.end(), r.heuristic) == hs.end())
            hs.push_back(r.heuristic);
        problems[r.domain].insert(r.problem);
        cell[{r.domain, r.problem, r.heuristic}] = &r;
    }
    auto solved = [](const ResultRow *r) { return r && r->status == "solved"; };

    std::vector<ReportEntry> out;
    for (const auto &d : domains) {
        std::vector<std::string> common;
        for (const auto &p : problems[d]) {
            bool all = true;
            for (const auto &h : heuristics[d]) {
                auto it = cell.find({d, p, h});
                all = all && it != cell.end() && solved(it->second);
            }
            if (all)
                common.push_back(p);
        }
        for (const auto &h : heuristics[d]) {
            ReportEntry e;
            e.domain = d;
            e.heuristic = h;
            std::vector<double> devs;
            for (const auto &p : problems[d]) {
                auto it = cell.find({d, p, h});
                if (it == cell.end())
                    continue;
                ++e.total;
                if (solved(it->second)) {
                    ++e.solved;
                    if (it->second->deviation)
                        devs.push_back(*it->second->deviation);
                }
            }
            e.coverage = round_coverage(e.solved, e.total);
            e.commonly_solved = common.size();
            std::vector<double> exp;
            for (const auto &p : common)
                exp.push_back(static_cast<double>(cell.at({d, p, h})->expansions));
            if (!exp.empty()) {
                double sum = 0.0;
                for (double x : exp)
                    sum += x;
                e.mean_expansions = sum / static_cast<double>(exp.size());
                std::sort(exp.begin(), exp.end());
                const std::size_t n = exp.size();
                e.median_expansions = n % 2 ? exp[n / 2] : 0.5 * (exp[n / 2 - 1] + exp[n / 2]);
            }
            if (!devs.empty()) {
                double sum = 0.0;
                for (double x : devs)
                    sum += x;
                e.mean_deviation = sum / static_cast<double>(devs.size());
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

void write_report(std::ostream &out, const std::vector<ReportEntry> &entries) {
    auto num = [](const std::optional<double> &v, int prec) {
        return v ? fmt::format("{:.{}f}", *v, prec) : std::string("-");
    };
    out << fmt::format("{:<16} {:<10} {:>8} {:>9} {:>7} {:>14} {:>14} {:>9}\n", "domain", "heuristic", "solved",
                       "coverage", "common", "mean_exp", "median_exp", "mean_dev");
    for (const auto &e : entries)
        out << fmt::format("{:<16} {:<10} {:>8} {:>9.2f} {:>7} {:>14} {:>14} {:>9}\n", e.domain, e.heuristic,
                           fmt::format("{}/{}", e.solved, e.total), e.coverage, e.commonly_solved,
                           num(e.mean_expansions, 1), num(e.median_expansions, 1), num(e.mean_deviation, 2));
}

nlohmann::json to_json(const ReportEntry &e) {
    auto opt = [](const std::optional<double> &v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"domain", e.domain},
            {"heuristic", e.heuristic},
            {"total", e.total},
            {"solved", e.solved},
            {"coverage", e.coverage},
            {"commonly_solved", e.commonly_solved},
            {"mean_expansions", opt(e.mean_expansions)},
            {"median_expansions", opt(e.median_expansions)},
            {"mean_deviation", opt(e.mean_deviation)}};
}

}  // namespace hgnplan
