#pragma once

#include "hgnplan/generators.h"
#include "hgnplan/search.h"
#include "hgnplan/strips_hgn.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hgnplan {

struct ProblemRef {
    std::string domain_path;
    std::string problem_path;
};

// Problem files to create before running: one per (params, seed).
struct GeneratorRef {
    GeneratorDomain domain = GeneratorDomain::Gripper;
    ProblemParams params;
    std::uint64_t seed = 0;
};

struct ExperimentSpec {
    std::vector<ProblemRef> train;
    std::vector<ProblemRef> test;
    std::vector<GeneratorRef> generate_train;
    std::vector<GeneratorRef> generate_test;
    std::vector<std::string> heuristics{"blind", "hmax", "hadd", "lmcut"};
    std::optional<std::string> model_path;
    double timeout_s = 300.0;
    // Budget for the LM-cut run that establishes optimal costs; defaults to timeout_s.
    std::optional<double> optimal_timeout_s;
    std::size_t repetitions = 1;
    std::uint64_t seed = 0;
    // Directory receiving generated domain and problem files.
    std::string work_dir = "experiment-problems";
};

ExperimentSpec experiment_from_json(const nlohmann::json &j);
ExperimentSpec load_experiment(const std::filesystem::path &path);

// Writes generated problems (and their domain files) under spec.work_dir and
// appends them to spec.train / spec.test. Repetition r offsets generator seeds by r.
void materialize_problems(ExperimentSpec &spec);

struct ResultRow {
    std::string domain;
    std::string problem;
    std::string heuristic;
    std::string status;
    std::size_t expansions = 0;
    std::size_t generated = 0;
    std::optional<double> plan_cost;
    std::optional<double> optimal_cost;
    std::optional<double> deviation;
    double wall_time_s = 0.0;
    std::size_t heuristic_evals = 0;
};

// Heuristic by name; "hgn" needs a model.
std::unique_ptr<Heuristic> make_heuristic(const std::string &name, const GroundedTask &t,
                                          std::shared_ptr<const StripsHgnModel> model);

ResultRow make_row(const GroundedTask &t, const std::string &domain, const std::string &problem,
                   const std::string &heuristic, const SearchResult &r, std::optional<double> optimal_cost);

// One row per (test problem, heuristic), ordered by problem then heuristic list order.
std::vector<ResultRow> run_experiment(ExperimentSpec spec);

extern const char *const kResultColumns;
void write_csv(std::ostream &out, const std::vector<ResultRow> &rows);
std::vector<ResultRow> read_csv(std::istream &in);
nlohmann::json to_json(const ResultRow &r);

struct ReportEntry {
    std::string domain;
    std::string heuristic;
    std::size_t total = 0;
    std::size_t solved = 0;
    // solved / total to 2 d.p.
    double coverage = 0.0;
    // Over problems of the domain solved by every heuristic.
    std::size_t commonly_solved = 0;
    std::optional<double> mean_expansions;
    std::optional<double> median_expansions;
    // Over solved rows with a known optimal cost.
    std::optional<double> mean_deviation;
};

double round_coverage(std::size_t solved, std::size_t total);
std::vector<ReportEntry> report(const std::vector<ResultRow> &rows);
void write_report(std::ostream &out, const std::vector<ReportEntry> &entries);
nlohmann::json to_json(const ReportEntry &e);

}  // namespace hgnplan
