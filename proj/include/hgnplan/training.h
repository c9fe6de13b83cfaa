#pragma once

#include "hgnplan/strips_hgn.h"
#include "hgnplan/task.h"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hgnplan {

struct TaskSource {
    std::string domain_path;
    std::string problem_path;
};

// (s, h*(s)) for a state of a task identified by its PDDL files.
struct TrainingSample {
    std::string domain_path;
    std::string problem_path;
    // Proposition names, sorted.
    std::vector<std::string> state;
    double target = 0.0;

    bool operator==(const TrainingSample &) const = default;
};

struct TrainConfig {
    std::size_t n_bins = 4;
    std::size_t k_folds = 10;
    double learning_rate = 0.001;
    double weight_decay = 0.00025;
    std::size_t minibatch = 1;
    std::size_t max_epochs = 2000;
    double fold_time_budget_s = 600.0;
    std::uint64_t seed = 0;
    // Stratified resampling of each domain's samples to this size; 0 disables it.
    std::size_t resample_to = 0;
    StripsHgnConfig model;
};

constexpr double kDataGenTimeout = 120.0;

// Solves t optimally (A* with LM-cut) and emits every state on the plan with its
// remaining plan cost, ending with the goal state at 0. Empty if unsolved in time.
std::vector<TrainingSample> samples_from_task(const GroundedTask &t, const TaskSource &src,
                                              double timeout_s = kDataGenTimeout);
std::vector<TrainingSample> generate_training_data(std::span<const TaskSource> tasks,
                                                   double timeout_s = kDataGenTimeout);

void write_samples(const std::filesystem::path &path, std::span<const TrainingSample> samples);
std::vector<TrainingSample> read_samples(const std::filesystem::path &path);
nlohmann::json to_json(const TrainingSample &s);
TrainingSample sample_from_json(const nlohmann::json &j);

// Grounded tasks and their hypergraph structures, loaded once per (domain, problem).
class TaskCache {
public:
    struct Entry {
        std::shared_ptr<const GroundedTask> task;
        std::shared_ptr<const HypergraphStructure> structure;
    };
    const Entry &get(const std::string &domain_path, const std::string &problem_path);
    // Registers an in-memory task under the given key.
    void put(const TaskSource &src, GroundedTask task);

private:
    std::map<std::pair<std::string, std::string>, Entry> entries_;
};

HgnExample make_example(const TaskCache::Entry &e, const TrainingSample &s);
std::vector<HgnExample> make_examples(std::span<const TrainingSample> samples, TaskCache &cache);

// Bin of the sample at rank r is floor(r * n / len); equal targets share the lowest rank.
std::vector<std::size_t> quantile_bins(std::span<const double> targets, std::size_t n);

// Sample indices per fold. Each bin is shuffled and dealt round-robin, the dealing
// position carrying over from one bin to the next.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::size_t> bins, std::size_t k,
                                                       std::uint64_t seed);

// Indices drawn with replacement; each bin receives its largest-remainder share of
// target_size.
std::vector<std::size_t> resample_with_replacement(std::span<const std::size_t> bins, std::size_t target_size,
                                                   std::uint64_t seed);

// Fold i of the result is the union of fold i of every domain.
template <class T>
std::vector<std::vector<T>> merge_domain_folds(const std::vector<std::vector<std::vector<T>>> &per_domain) {
    if (per_domain.empty())
        throw std::invalid_argument("merge_domain_folds needs at least one domain");
    const std::size_t k = per_domain.front().size();
    std::vector<std::vector<T>> merged(k);
    for (const auto &folds : per_domain) {
        if (folds.size() != k)
            throw std::invalid_argument("merge_domain_folds: domains have different fold counts");
        for (std::size_t i = 0; i < k; ++i)
            merged[i].insert(merged[i].end(), folds[i].begin(), folds[i].end());
    }
    return merged;
}

struct FoldResult {
    StripsHgnModel model;
    double best_val_loss = 0.0;
    // 0 means the initial parameters were best.
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    double seconds = 0.0;
    std::vector<double> train_loss_history;
    std::vector<double> val_loss_history;
};

FoldResult train_fold(std::span<const HgnExample> train, std::span<const HgnExample> val, const TrainConfig &cfg,
                      std::uint64_t seed);

struct FoldReport {
    std::size_t fold = 0;
    std::size_t train_size = 0;
    std::size_t val_size = 0;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    double seconds = 0.0;
};

struct KFoldResult {
    StripsHgnModel model;
    std::size_t chosen_fold = 0;
    std::vector<FoldReport> folds;
};

nlohmann::json to_json(const KFoldResult &r);

// One example list per domain. Folds are built per domain and merged.
KFoldResult run_kfold_training(const std::vector<std::vector<HgnExample>> &per_domain, const TrainConfig &cfg);

}  // namespace hgnplan
