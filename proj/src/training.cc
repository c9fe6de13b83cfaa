#include "hgnplan/training.h"

#include "hgnplan/errors.h"
#include "hgnplan/heuristics.h"
#include "hgnplan/search.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <random>

namespace hgnplan {

std::vector<TrainingSample> samples_from_task(const GroundedTask &t, const TaskSource &src, double timeout_s) {
    auto h = make_classic_heuristic("lmcut", t);
    SearchLimits lim;
    lim.timeout_s = timeout_s;
    SearchResult r = astar(t, *h, lim);
    if (r.status != SearchStatus::Solved) {
        spdlog::warn("no optimal plan for {} ({}), skipping", t.name(), to_string(r.status));
        return {};
    }
    std::vector<State> states{t.initial_state()};
    std::vector<double> costs;
    for (ActionId a : *r.plan) {
        states.push_back(apply_action(states.back(), t.action(a)));
        costs.push_back(t.action(a).cost);
    }
    std::vector<TrainingSample> out;
    double remaining = r.plan_cost.value();
    for (std::size_t i = 0; i < states.size(); ++i) {
        TrainingSample s{src.domain_path, src.problem_path, {}, std::max(remaining, 0.0)};
        for (PropId p : states[i].ids())
            s.state.push_back(t.prop_name(p));
        out.push_back(std::move(s));
        if (i < costs.size())
            remaining -= costs[i];
    }
    return out;
}

std::vector<TrainingSample> generate_training_data(std::span<const TaskSource> tasks, double timeout_s) {
    std::vector<TrainingSample> out;
    for (const auto &src : tasks) {
        GroundedTask t = load_task(src.domain_path, src.problem_path);
        auto s = samples_from_task(t, src, timeout_s);
        spdlog::info("{}: {} samples", t.name(), s.size());
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

nlohmann::json to_json(const TrainingSample &s) {
    return {{"domain", s.domain_path}, {"problem", s.problem_path}, {"state", s.state}, {"target", s.target}};
}

TrainingSample sample_from_json(const nlohmann::json &j) {
    TrainingSample s;
    s.domain_path = j.at("domain").get<std::string>();
    s.problem_path = j.at("problem").get<std::string>();
    s.state = j.at("state").get<std::vector<std::string>>();
    s.target = j.at("target").get<double>();
    if (s.target < 0.0)
        throw std::invalid_argument("sample target must be nonnegative");
    std::sort(s.state.begin(), s.state.end());
    return s;
}

void write_samples(const std::filesystem::path &path, std::span<const TrainingSample> samples) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write samples file " + path.string());
    for (const auto &s : samples)
        out << to_json(s).dump() << '\n';
}

std::vector<TrainingSample> read_samples(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open samples file " + path.string());
    std::vector<TrainingSample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            out.push_back(sample_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception &e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad sample: " + e.what());
        }
    }
    return out;
}

const TaskCache::Entry &TaskCache::get(const std::string &domain_path, const std::string &problem_path) {
    auto key = std::make_pair(domain_path, problem_path);
    auto it = entries_.find(key);
    if (it != entries_.end())
        return it->second;
    auto task = std::make_shared<const GroundedTask>(load_task(domain_path, problem_path));
    auto st = std::make_shared<const HypergraphStructure>(build_structure(*task));
    return entries_.emplace(key, Entry{task, st}).first->second;
}

void TaskCache::put(const TaskSource &src, GroundedTask task) {
    auto t = std::make_shared<const GroundedTask>(std::move(task));
    auto st = std::make_shared<const HypergraphStructure>(build_structure(*t));
    entries_[{src.domain_path, src.problem_path}] = Entry{t, st};
}

HgnExample make_example(const TaskCache::Entry &e, const TrainingSample &s) {
    std::vector<PropId> ids;
    for (const auto &name : s.state) {
        PropId p = e.task->find_prop(name);
        if (p < 0)
            throw std::invalid_argument("sample mentions unknown proposition " + name + " of " + e.task->name());
        ids.push_back(p);
    }
    return {encode_features(e.structure, *e.task, e.task->make_state(ids)), s.target};
}

std::vector<HgnExample> make_examples(std::span<const TrainingSample> samples, TaskCache &cache) {
    std::vector<HgnExample> out;
    out.reserve(samples.size());
    for (const auto &s : samples)
        out.push_back(make_example(cache.get(s.domain_path, s.problem_path), s));
    return out;
}

std::vector<std::size_t> quantile_bins(std::span<const double> targets, std::size_t n) {
    if (n < 1 || targets.empty())
        throw std::invalid_argument("quantile_bins needs n >= 1 and at least one target");
    const std::size_t len = targets.size();
    std::vector<std::size_t> order(len);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
    std::vector<std::size_t> bins(len);
    std::size_t rank = 0;
    for (std::size_t r = 0; r < len; ++r) {
        if (r == 0 || targets[order[r]] != targets[order[r - 1]])
            rank = r;
        bins[order[r]] = rank * n / len;
    }
    return bins;
}

namespace {

std::map<std::size_t, std::vector<std::size_t>> group_by_bin(std::span<const std::size_t> bins) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < bins.size(); ++i)
        groups[bins[i]].push_back(i);
    return groups;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::size_t> bins, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2)
        throw std::invalid_argument("stratified_kfold needs k >= 2");
    if (k > bins.size())
        throw std::invalid_argument("stratified_kfold: k = " + std::to_string(k) + " exceeds the " +
                                    std::to_string(bins.size()) + " samples");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (auto &[bin, idx] : group_by_bin(bins)) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i : idx)
            folds[pos++ % k].push_back(i);
    }
    for (auto &f : folds)
        std::sort(f.begin(), f.end());
    return folds;
}

std::vector<std::size_t> resample_with_replacement(std::span<const std::size_t> bins, std::size_t target_size,
                                                   std::uint64_t seed) {
    if (bins.empty())
        throw std::invalid_argument("cannot resample an empty sample set");
    if (target_size < 1)
        throw std::invalid_argument("resample target size must be at least 1");
    auto groups = group_by_bin(bins);
    const double total = static_cast<double>(bins.size());

    struct Quota {
        std::size_t bin;
        std::size_t count;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto &[bin, idx] : groups) {
        const double exact = static_cast<double>(idx.size()) * static_cast<double>(target_size) / total;
        const auto base = static_cast<std::size_t>(exact);
        quotas.push_back({bin, base, exact - static_cast<double>(base)});
        assigned += base;
    }
    std::vector<std::size_t> by_remainder(quotas.size());
    std::iota(by_remainder.begin(), by_remainder.end(), 0);
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
    for (std::size_t i = 0; assigned < target_size; ++i, ++assigned)
        ++quotas[by_remainder[i % by_remainder.size()]].count;

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> out;
    out.reserve(target_size);
    for (const auto &q : quotas) {
        const auto &idx = groups.at(q.bin);
        std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
        for (std::size_t c = 0; c < q.count; ++c)
            out.push_back(idx[pick(rng)]);
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

FoldResult train_fold(std::span<const HgnExample> train, std::span<const HgnExample> val, const TrainConfig &cfg,
                      std::uint64_t seed) {
    if (train.empty() || val.empty())
        throw std::invalid_argument("train_fold needs nonempty training and validation sets");
    if (cfg.minibatch < 1)
        throw std::invalid_argument("minibatch size must be at least 1");
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

    FoldResult res;
    StripsHgnModel model = StripsHgnModel::initialized(cfg.model, seed);
    StripsHgnModel grads = StripsHgnModel::zeros(cfg.model);
    auto params = model.parameters();
    std::vector<std::span<const double>> grad_views;
    for (auto g : grads.parameters())
        grad_views.emplace_back(g);
    AdamState adam;
    std::mt19937_64 rng(derive_seed(seed, 0x5eed));

    res.best_val_loss = loss(model, val);
    res.model = model;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<HgnExample> batch;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (elapsed() > cfg.fold_time_budget_s)
            break;
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < order.size(); b += cfg.minibatch) {
            batch.clear();
            for (std::size_t i = b; i < std::min(order.size(), b + cfg.minibatch); ++i)
                batch.push_back(train[order[i]]);
            for (auto g : grads.parameters())
                std::fill(g.begin(), g.end(), 0.0);
            epoch_loss += loss_and_gradients(model, batch, grads) * static_cast<double>(batch.size());
            adam_step(params, grad_views, adam, cfg.learning_rate, cfg.weight_decay);
        }
        res.train_loss_history.push_back(epoch_loss / static_cast<double>(train.size()));
        const double v = loss(model, val);
        res.val_loss_history.push_back(v);
        res.epochs_run = epoch;
        if (v < res.best_val_loss) {
            res.best_val_loss = v;
            res.best_epoch = epoch;
            res.model = model;
        }
    }
    res.seconds = elapsed();
    res.model.metadata["seed"] = seed;
    res.model.metadata["best_epoch"] = res.best_epoch;
    res.model.metadata["best_val_loss"] = res.best_val_loss;
    return res;
}

KFoldResult run_kfold_training(const std::vector<std::vector<HgnExample>> &per_domain, const TrainConfig &cfg) {
    if (per_domain.empty())
        throw std::invalid_argument("run_kfold_training needs at least one domain");
    std::vector<HgnExample> all;
    std::vector<std::vector<std::vector<std::size_t>>> domain_folds;
    for (std::size_t d = 0; d < per_domain.size(); ++d) {
        std::vector<HgnExample> examples = per_domain[d];
        if (examples.empty())
            throw std::invalid_argument("domain " + std::to_string(d) + " has no training samples");
        auto targets_of = [](const std::vector<HgnExample> &ex) {
            std::vector<double> t;
            for (const auto &e : ex)
                t.push_back(e.target);
            return t;
        };
        if (cfg.resample_to > 0) {
            auto bins = quantile_bins(targets_of(examples), cfg.n_bins);
            auto picks = resample_with_replacement(bins, cfg.resample_to, derive_seed(cfg.seed, 100 + d));
            std::vector<HgnExample> resampled;
            for (std::size_t i : picks)
                resampled.push_back(examples[i]);
            examples = std::move(resampled);
        }
        auto bins = quantile_bins(targets_of(examples), cfg.n_bins);
        auto folds = stratified_kfold(bins, cfg.k_folds, derive_seed(cfg.seed, 200 + d));
        const std::size_t offset = all.size();
        for (auto &f : folds)
            for (auto &i : f)
                i += offset;
        all.insert(all.end(), examples.begin(), examples.end());
        domain_folds.push_back(std::move(folds));
    }
    auto folds = merge_domain_folds(domain_folds);

    KFoldResult out;
    double best = 0.0;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        std::vector<HgnExample> train, val;
        std::vector<char> in_val(all.size(), 0);
        for (std::size_t j : folds[i])
            in_val[j] = 1;
        for (std::size_t j = 0; j < all.size(); ++j)
            (in_val[j] ? val : train).push_back(all[j]);
        FoldResult r = train_fold(train, val, cfg, derive_seed(cfg.seed, 300 + i));
        spdlog::info("fold {}/{}: best val loss {:.6f} at epoch {} of {} ({:.1f}s)", i + 1, folds.size(),
                     r.best_val_loss, r.best_epoch, r.epochs_run, r.seconds);
        out.folds.push_back({i, train.size(), val.size(), r.best_val_loss, r.best_epoch, r.epochs_run, r.seconds});
        if (i == 0 || r.best_val_loss < best) {
            best = r.best_val_loss;
            out.chosen_fold = i;
            out.model = std::move(r.model);
        }
    }
    out.model.metadata["chosen_fold"] = out.chosen_fold;
    out.model.metadata["train_config"] = {{"n_bins", cfg.n_bins},
                                          {"k_folds", cfg.k_folds},
                                          {"learning_rate", cfg.learning_rate},
                                          {"weight_decay", cfg.weight_decay},
                                          {"minibatch", cfg.minibatch},
                                          {"max_epochs", cfg.max_epochs},
                                          {"fold_time_budget_s", cfg.fold_time_budget_s},
                                          {"seed", cfg.seed},
                                          {"resample_to", cfg.resample_to}};
    return out;
}

nlohmann::json to_json(const KFoldResult &r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto &f : r.folds)
        folds.push_back({{"fold", f.fold},
                         {"train_size", f.train_size},
                         {"val_size", f.val_size},
                         {"best_val_loss", f.best_val_loss},
                         {"best_epoch", f.best_epoch},
                         {"epochs_run", f.epochs_run},
                         {"seconds", f.seconds}});
    return {{"chosen_fold", r.chosen_fold}, {"folds", folds}};
}

}  // namespace hgnplan
