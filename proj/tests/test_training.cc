#include "doctest.h"
#include "model_oracle.h"
#include "support.h"

#include "hgnplan/training.h"

#include <filesystem>
#include <map>
#include <set>

using namespace hgnplan;
using namespace hgnplan::testing;

namespace {

std::vector<std::size_t> bin_counts(std::span<const std::size_t> bins, std::span<const std::size_t> members) {
    std::vector<std::size_t> c;
    for (std::size_t i : members) {
        if (bins[i] >= c.size())
            c.resize(bins[i] + 1, 0);
        ++c[bins[i]];
    }
    return c;
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.model.latent_width = 4;
    cfg.model.steps = 2;
    cfg.model.arity = {2, 1};
    cfg.max_epochs = 3;
    cfg.k_folds = 2;
    cfg.n_bins = 2;
    return cfg;
}

std::vector<HgnExample> fixture_examples(TaskCache &cache) {
    cache.put({"chain3", "p"}, chain3());
    cache.put({"fork", "p"}, fork_task());
    std::vector<TrainingSample> samples = samples_from_task(chain3(), {"chain3", "p"});
    auto more = samples_from_task(fork_task(), {"fork", "p"});
    samples.insert(samples.end(), more.begin(), more.end());
    return make_examples(samples, cache);
}

}  // namespace

TEST_CASE("samples along the optimal CHAIN3 plan") {
    auto s = samples_from_task(chain3(), {"d.pddl", "p.pddl"});
    REQUIRE(s.size() == 3);
    CHECK(s[0].state == std::vector<std::string>{"a"});
    CHECK(s[0].target == 2.0);
    CHECK(s[1].state == std::vector<std::string>{"a", "b"});
    CHECK(s[1].target == 1.0);
    CHECK(s[2].state == std::vector<std::string>{"a", "b", "g"});
    CHECK(s[2].target == 0.0);
    CHECK(s[0].domain_path == "d.pddl");
    CHECK(s[0].problem_path == "p.pddl");
}

TEST_CASE("samples of trivial and unsolvable tasks") {
    auto goal = samples_from_task(chain3({2}), {"d", "p"});
    REQUIRE(goal.size() == 1);
    CHECK(goal[0].target == 0.0);
    CHECK(samples_from_task(chain3({}), {"d", "p"}).empty());
}

TEST_CASE("sample targets equal brute-force cost-to-go") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        GroundedTask t = random_task(seed);
        for (const auto &s : samples_from_task(t, {"d", "p"})) {
            std::vector<PropId> ids;
            for (const auto &n : s.state)
                ids.push_back(t.find_prop(n));
            CHECK(s.target == brute_force_hstar(t, t.make_state(ids)));
        }
    }
}

TEST_CASE("samples file round trip") {
    auto s = samples_from_task(fork_task(), {"dom.pddl", "prob.pddl"});
    auto path = std::filesystem::temp_directory_path() / "hgnplan-test-samples.jsonl";
    write_samples(path, s);
    CHECK(read_samples(path) == s);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(sample_from_json({{"domain", "d"}, {"problem", "p"}, {"state", nlohmann::json::array()}, {"target", -1.0}}),
                    std::invalid_argument);
}

TEST_CASE("examples built from samples") {
    TaskCache cache;
    cache.put({"chain3", "p"}, chain3());
    TrainingSample s{"chain3", "p", {"a", "b"}, 1.0};
    HgnExample ex = make_example(cache.get("chain3", "p"), s);
    CHECK(ex.target == 1.0);
    CHECK(ex.input.vertices(1, 0) == 1.0);
    CHECK(ex.input.vertices(2, 0) == 0.0);
    CHECK(ex.input.vertices(2, 1) == 1.0);
    TrainingSample bad{"chain3", "p", {"zzz"}, 1.0};
    CHECK_THROWS_AS(make_example(cache.get("chain3", "p"), bad), std::invalid_argument);
}

TEST_CASE("quantile bins") {
    std::vector<double> t{0, 1, 2, 3};
    CHECK(quantile_bins(t, 2) == std::vector<std::size_t>{0, 0, 1, 1});
    CHECK(quantile_bins(t, 1) == std::vector<std::size_t>{0, 0, 0, 0});
    std::vector<double> same{5, 5, 5};
    CHECK(quantile_bins(same, 3) == std::vector<std::size_t>{0, 0, 0});
    std::vector<double> shuffled{3, 0, 2, 1};
    CHECK(quantile_bins(shuffled, 2) == std::vector<std::size_t>{1, 0, 1, 0});
    std::vector<double> ties{0, 1, 1, 1, 2, 3, 4, 5};
    // ranks 0, 1, 1, 1, 4, 5, 6, 7 with n = 4
    CHECK(quantile_bins(ties, 4) == std::vector<std::size_t>{0, 0, 0, 0, 2, 2, 3, 3});
}

TEST_CASE("quantile bins are monotone in the target") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> t(1 + rng() % 40);
        for (double &x : t)
            x = static_cast<double>(rng() % 10);
        std::size_t n = 1 + rng() % 6;
        auto b = quantile_bins(t, n);
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(b[i] < n);
            for (std::size_t j = 0; j < t.size(); ++j)
                if (t[i] < t[j])
                    CHECK(b[i] <= b[j]);
                else if (t[i] == t[j])
                    CHECK(b[i] == b[j]);
        }
    }
}

TEST_CASE("stratified k-fold") {
    std::vector<std::size_t> bins{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    auto folds = stratified_kfold(bins, 5, 3);
    REQUIRE(folds.size() == 5);
    for (const auto &f : folds)
        CHECK(bin_counts(bins, f) == std::vector<std::size_t>{1, 1});
    CHECK(stratified_kfold(bins, 5, 3) == folds);

    std::set<std::size_t> seen;
    for (const auto &f : folds)
        seen.insert(f.begin(), f.end());
    CHECK(seen.size() == bins.size());

    std::vector<std::size_t> uneven{0, 0, 0, 1, 1, 2, 2, 2, 2, 3, 3};
    auto f3 = stratified_kfold(uneven, 3, 9);
    std::size_t lo = uneven.size(), hi = 0, total = 0;
    for (const auto &f : f3) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
        total += f.size();
    }
    CHECK(total == uneven.size());
    CHECK(hi - lo <= 1);
    CHECK_THROWS_AS(stratified_kfold(bins, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(stratified_kfold(bins, 11, 0), std::invalid_argument);
}

TEST_CASE("stratified resampling") {
    std::vector<double> targets;
    for (int i = 0; i < 20; ++i)
        targets.push_back(i % 7);
    auto bins = quantile_bins(targets, 4);
    auto picks = resample_with_replacement(bins, 60, 5);
    CHECK(picks.size() == 60);
    auto before = bin_counts(bins, [&] {
        std::vector<std::size_t> all(20);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }());
    auto after = bin_counts(bins, picks);
    REQUIRE(after.size() == before.size());
    for (std::size_t b = 0; b < before.size(); ++b) {
        CHECK(after[b] + 1 >= 3 * before[b]);
        CHECK(after[b] <= 3 * before[b] + 1);
    }
    CHECK(resample_with_replacement(bins, 60, 5) == picks);

    std::vector<std::size_t> one(6, 0);
    auto same_size = resample_with_replacement(one, 6, 2);
    CHECK(same_size.size() == 6);
    for (std::size_t i : same_size)
        CHECK(i < 6);
}

TEST_CASE("merging per-domain folds") {
    std::vector<std::vector<std::vector<int>>> two{{{1, 2, 3}, {4, 5, 6}}, {{7, 8, 9, 10, 11}, {12, 13, 14, 15, 16}}};
    auto merged = merge_domain_folds(two);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].size() == 8);
    CHECK(merged[1].size() == 8);
    std::vector<std::vector<std::vector<int>>> single{{{1}, {2, 3}}};
    CHECK(merge_domain_folds(single) == single[0]);
    std::vector<std::vector<std::vector<int>>> mismatch{{{1}, {2}}, {{3}}};
    CHECK_THROWS_AS(merge_domain_folds(mismatch), std::invalid_argument);
}

TEST_CASE("zero epochs return the initial model") {
    TaskCache cache;
    auto ex = fixture_examples(cache);
    TrainConfig cfg = small_config();
    cfg.max_epochs = 0;
    FoldResult r = train_fold(ex, ex, cfg, 4);
    CHECK(r.best_epoch == 0);
    CHECK(r.epochs_run == 0);
    StripsHgnModel init = StripsHgnModel::initialized(cfg.model, 4);
    CHECK(r.best_val_loss == loss(init, ex));
    CHECK(forward(r.model, ex[0].input) == forward(init, ex[0].input));
}

TEST_CASE("training is deterministic and keeps the best validation epoch") {
    TaskCache cache;
    auto ex = fixture_examples(cache);
    TrainConfig cfg = small_config();
    cfg.max_epochs = 20;
    cfg.minibatch = 2;
    FoldResult a = train_fold(ex, ex, cfg, 8);
    FoldResult b = train_fold(ex, ex, cfg, 8);
    auto pa = std::as_const(a.model).parameters();
    auto pb = std::as_const(b.model).parameters();
    for (std::size_t s = 0; s < pa.size(); ++s)
        CHECK(std::equal(pa[s].begin(), pa[s].end(), pb[s].begin()));
    REQUIRE(a.val_loss_history.size() == 20);
    double best = *std::min_element(a.val_loss_history.begin(), a.val_loss_history.end());
    CHECK(a.best_val_loss == std::min(best, loss(StripsHgnModel::initialized(cfg.model, 8), ex)));
    CHECK(loss(a.model, ex) == a.best_val_loss);
    CHECK(a.val_loss_history.back() < a.val_loss_history.front());
}

TEST_CASE("a repeated single sample is fitted") {
    TaskCache cache;
    cache.put({"fork", "p"}, fork_task());
    std::vector<TrainingSample> one(4, TrainingSample{"fork", "p", {"a"}, 3.0});
    auto ex = make_examples(one, cache);
    TrainConfig cfg = small_config();
    cfg.max_epochs = 300;
    FoldResult r = train_fold(ex, ex, cfg, 1);
    CHECK(r.best_val_loss < 0.05);
}

TEST_CASE("k-fold training selects a fold deterministically") {
    TaskCache cache;
    auto ex = fixture_examples(cache);
    std::vector<HgnExample> doubled = ex;
    doubled.insert(doubled.end(), ex.begin(), ex.end());
    TrainConfig cfg = small_config();
    KFoldResult a = run_kfold_training({doubled}, cfg);
    KFoldResult b = run_kfold_training({doubled}, cfg);
    REQUIRE(a.folds.size() == 2);
    CHECK(a.chosen_fold == b.chosen_fold);
    double best = std::min(a.folds[0].best_val_loss, a.folds[1].best_val_loss);
    CHECK(a.folds[a.chosen_fold].best_val_loss == best);
    if (a.folds[0].best_val_loss == a.folds[1].best_val_loss)
        CHECK(a.chosen_fold == 0);
    for (const auto &f : a.folds)
        CHECK(f.train_size + f.val_size == doubled.size());
    CHECK(a.model.metadata["chosen_fold"] == a.chosen_fold);
    CHECK(a.model.metadata["train_config"]["k_folds"] == 2);
    nlohmann::json j = to_json(a);
    CHECK(j["folds"].size() == 2);
}

TEST_CASE("k-fold training with resampling and two domains") {
    TaskCache cache;
    cache.put({"chain3", "p"}, chain3());
    cache.put({"fork", "p"}, fork_task());
    auto s1 = samples_from_task(chain3(), {"chain3", "p"});
    auto s2 = samples_from_task(fork_task(), {"fork", "p"});
    TrainConfig cfg = small_config();
    cfg.resample_to = 6;
    cfg.max_epochs = 1;
    KFoldResult r = run_kfold_training({make_examples(s1, cache), make_examples(s2, cache)}, cfg);
    for (const auto &f : r.folds) {
        CHECK(f.train_size + f.val_size == 12);
        CHECK(f.val_size == 6);
    }
}

TEST_CASE("training defaults") {
    TrainConfig cfg;
    CHECK(cfg.n_bins == 4);
    CHECK(cfg.k_folds == 10);
    CHECK(cfg.learning_rate == 0.001);
    CHECK(cfg.weight_decay == 0.00025);
    CHECK(cfg.minibatch == 1);
    CHECK(kDataGenTimeout == 120.0);
}
