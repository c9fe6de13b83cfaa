#include "hgnplan/experiment.h"
#include "hgnplan/generators.h"
#include "hgnplan/hgn_block.h"
#include "hgnplan/pddl.h"
#include "hgnplan/search.h"
#include "hgnplan/strips_hgn.h"
#include "hgnplan/task.h"
#include "hgnplan/training.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

using namespace hgnplan;

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("hgnplan");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
    const char *level = std::getenv("HGNPLAN_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

void write_text(const std::string &path, const std::string &text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
}

ArityBounds bounds_for_domains(const std::vector<std::string> &domain_paths) {
    std::vector<DomainDef> doms;
    for (const auto &p : domain_paths)
        doms.push_back(parse_domain(read_text_file(p)));
    return compute_arity_bounds(doms);
}

}  // namespace

int main(int argc, char **argv) {
    setup_logging();
    CLI::App app{"Classical planning with STRIPS-HGN learned heuristics"};
    app.require_subcommand(1);

    // gen-problem
    auto *gp = app.add_subcommand("gen-problem", "Write a random Gripper, Ferry or Blocksworld problem");
    std::string gp_domain = "gripper", gp_out, gp_domain_out;
    ProblemParams gp_params;
    std::uint64_t gp_seed = 0;
    gp->add_option("--domain", gp_domain, "gripper, ferry or blocksworld")->required();
    gp->add_option("--balls", gp_params.balls, "Gripper balls");
    gp->add_option("--locations", gp_params.locations, "Ferry locations");
    gp->add_option("--cars", gp_params.cars, "Ferry cars");
    gp->add_option("--blocks", gp_params.blocks, "Blocksworld blocks");
    gp->add_option("--seed", gp_seed, "Random seed");
    gp->add_option("--out", gp_out, "Problem file (default stdout)");
    gp->add_option("--domain-out", gp_domain_out, "Also write the matching domain file here");

    // gen-data
    auto *gd = app.add_subcommand("gen-data", "Solve problems optimally and write (state, h*) samples");
    std::string gd_domain, gd_out;
    std::vector<std::string> gd_problems;
    double gd_timeout = kDataGenTimeout;
    gd->add_option("--domain", gd_domain, "Domain file")->required()->check(CLI::ExistingFile);
    gd->add_option("--problem", gd_problems, "Problem files")->required()->check(CLI::ExistingFile);
    gd->add_option("--out", gd_out, "JSON-lines samples file")->required();
    gd->add_option("--timeout", gd_timeout, "Per-problem solver timeout in seconds");

    // train
    auto *tr = app.add_subcommand("train", "Train a STRIPS-HGN with stratified k-fold selection");
    std::vector<std::string> tr_samples;
    std::string tr_out, tr_report;
    TrainConfig tc;
    tr->add_option("--samples", tr_samples, "Samples files; samples are grouped by domain file")
        ->required()
        ->check(CLI::ExistingFile);
    tr->add_option("--out", tr_out, "Model file")->required();
    tr->add_option("--report", tr_report, "Per-fold training report (JSON)");
    tr->add_option("--bins", tc.n_bins, "Quantile bins")->capture_default_str();
    tr->add_option("--folds", tc.k_folds, "Folds")->capture_default_str();
    tr->add_option("--lr", tc.learning_rate, "Adam learning rate")->capture_default_str();
    tr->add_option("--weight-decay", tc.weight_decay, "L2 penalty")->capture_default_str();
    tr->add_option("--minibatch", tc.minibatch, "Minibatch size")->capture_default_str();
    tr->add_option("--max-epochs", tc.max_epochs, "Epoch limit per fold")->capture_default_str();
    tr->add_option("--fold-time", tc.fold_time_budget_s, "Training seconds per fold")->capture_default_str();
    tr->add_option("--seed", tc.seed, "Random seed")->capture_default_str();
    tr->add_option("--resample", tc.resample_to, "Resample each domain to this many samples (0 = off)")
        ->capture_default_str();
    tr->add_option("--latent", tc.model.latent_width, "Latent width")->capture_default_str();
    tr->add_option("--steps", tc.model.steps, "Message-passing steps")->capture_default_str();

    // plan
    auto *pl = app.add_subcommand("plan", "Run A* and print the search result as JSON");
    std::string pl_domain, pl_problem, pl_heuristic = "lmcut", pl_model;
    double pl_timeout = 300.0;
    pl->add_option("--domain", pl_domain, "Domain file")->required()->check(CLI::ExistingFile);
    pl->add_option("--problem", pl_problem, "Problem file")->required()->check(CLI::ExistingFile);
    pl->add_option("--heuristic", pl_heuristic, "Heuristic")
        ->check(CLI::IsMember({"blind", "hmax", "hadd", "lmcut", "hgn"}))
        ->capture_default_str();
    pl->add_option("--model", pl_model, "Model file for --heuristic hgn")->check(CLI::ExistingFile);
    pl->add_option("--timeout", pl_timeout, "Search timeout in seconds")->capture_default_str();

    // eval
    auto *ev = app.add_subcommand("eval", "Run an experiment spec and write the results CSV");
    std::string ev_spec, ev_out, ev_json;
    ev->add_option("--spec", ev_spec, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    ev->add_option("--out", ev_out, "Results CSV (default stdout)");
    ev->add_option("--json", ev_json, "Also write the rows as JSON");

    // report
    auto *rp = app.add_subcommand("report", "Summarise a results CSV");
    std::string rp_results, rp_json;
    rp->add_option("--results", rp_results, "Results CSV")->required()->check(CLI::ExistingFile);
    rp->add_option("--json", rp_json, "Also write the summary as JSON");

    // ground
    auto *gr = app.add_subcommand("ground", "Print the grounded task as JSON");
    std::string gr_domain, gr_problem;
    gr->add_option("--domain", gr_domain, "Domain file")->required()->check(CLI::ExistingFile);
    gr->add_option("--problem", gr_problem, "Problem file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gp) {
            GeneratorDomain d = parse_generator_domain(gp_domain);
            write_text(gp_out, gen_problem(d, gp_params, gp_seed));
            if (!gp_domain_out.empty())
                write_text(gp_domain_out, domain_text(d));
        } else if (*gd) {
            std::vector<TaskSource> tasks;
            for (const auto &p : gd_problems)
                tasks.push_back({gd_domain, p});
            auto samples = generate_training_data(tasks, gd_timeout);
            write_samples(gd_out, samples);
            spdlog::info("wrote {} samples to {}", samples.size(), gd_out);
        } else if (*tr) {
            std::vector<TrainingSample> samples;
            for (const auto &f : tr_samples) {
                auto s = read_samples(f);
                samples.insert(samples.end(), s.begin(), s.end());
            }
            std::map<std::string, std::vector<TrainingSample>> by_domain;
            std::vector<std::string> domain_order;
            for (const auto &s : samples) {
                if (!by_domain.count(s.domain_path))
                    domain_order.push_back(s.domain_path);
                by_domain[s.domain_path].push_back(s);
            }
            if (domain_order.empty())
                throw std::invalid_argument("no training samples");
            tc.model.arity = bounds_for_domains(domain_order);
            TaskCache cache;
            std::vector<std::vector<HgnExample>> per_domain;
            for (const auto &d : domain_order)
                per_domain.push_back(make_examples(by_domain[d], cache));
            KFoldResult r = run_kfold_training(per_domain, tc);
            save_model(r.model, tr_out);
            spdlog::info("selected fold {} (val loss {:.6f}); model written to {}", r.chosen_fold + 1,
                         r.folds[r.chosen_fold].best_val_loss, tr_out);
            if (!tr_report.empty())
                write_text(tr_report, to_json(r).dump(2) + "\n");
        } else if (*pl) {
            GroundedTask t = load_task(pl_domain, pl_problem);
            std::shared_ptr<const StripsHgnModel> model;
            if (!pl_model.empty())
                model = std::make_shared<const StripsHgnModel>(load_model(pl_model));
            auto h = make_heuristic(pl_heuristic, t, model);
            SearchLimits lim;
            lim.timeout_s = pl_timeout;
            SearchResult r = astar(t, *h, lim);
            nlohmann::json j = to_json(r, t);
            j["heuristic"] = pl_heuristic;
            j["task"] = t.name();
            std::cout << j.dump(2) << '\n';
        } else if (*ev) {
            auto rows = run_experiment(load_experiment(ev_spec));
            std::ostringstream csv;
            write_csv(csv, rows);
            write_text(ev_out, csv.str());
            if (!ev_json.empty()) {
                nlohmann::json j = nlohmann::json::array();
                for (const auto &r : rows)
                    j.push_back(to_json(r));
                write_text(ev_json, j.dump(2) + "\n");
            }
        } else if (*rp) {
            std::ifstream in(rp_results);
            auto entries = report(read_csv(in));
            write_report(std::cout, entries);
            if (!rp_json.empty()) {
                nlohmann::json j = nlohmann::json::array();
                for (const auto &e : entries)
                    j.push_back(to_json(e));
                write_text(rp_json, j.dump(2) + "\n");
            }
        } else if (*gr) {
            std::cout << to_json(load_task(gr_domain, gr_problem)).dump(2) << '\n';
        }
    } catch (const std::exception &e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
