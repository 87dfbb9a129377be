#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "diffcls/classifier.hpp"
#include "diffcls/diffusion.hpp"
#include "diffcls/gaussian_world.hpp"
#include "diffcls/rng.hpp"
#include "diffcls/stats.hpp"
#include "diffcls/weighting.hpp"

using namespace diffcls;

namespace {

GaussianWorld easy_world() {
  GaussianWorld world;
  world.means = {{5.0, 0.0}, {-5.0, 0.0}, {0.0, 5.0}};
  world.std_dev = 1.0;
  return world;
}

// Denoiser with a constant planted squared error per class: class k's output
// misses x0 by a vector of squared norm miss2[k], regardless of (t, x_t).
class PlantedErrorModel : public ScoreModel {
 public:
  explicit PlantedErrorModel(std::vector<double> miss2) : miss2_(std::move(miss2)) {}

  Vec denoise(const Vec& x_t, double, const Condition& cond) const override {
    Vec out(x_t.size(), 0.0);
    out[0] = std::sqrt(miss2_.at(static_cast<std::size_t>(cond.class_id)));
    return out;
  }

 private:
  std::vector<double> miss2_;
};

ClassifierConfig constant_weight_config() {
  ClassifierConfig config;
  std::array<double, kNumBuckets> ones{};
  ones.fill(1.0);
  config.weighting = WeightingSpec::learned_table(ones);
  return config;
}

std::array<double, 20> flat_table(double value) {
  std::array<double, 20> t{};
  t.fill(value);
  return t;
}

}  // namespace

TEST_CASE("config validation") {
  ClassifierConfig config;
  config.validate();
  SUBCASE("min above max") {
    config.min_scores = 100;
    config.max_scores = 50;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  }
  SUBCASE("cutoff out of range") {
    config.cutoff_pval = 0.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.cutoff_pval = 1.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  }
  SUBCASE("pruning requires shared noise") {
    config.noise_mode = NoiseMode::Independent;
    config.pruning = true;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.pruning = false;
    config.validate();
  }
  SUBCASE("min_scores below 1 is rejected") {
    config.min_scores = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  }
}

TEST_CASE("score_round shares one (t, x_t) across candidates and records the pairing") {
  const GaussianWorld world = easy_world();
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(3);
  const Vec x0{4.5, 0.5};
  Rng rng(99);
  const WeightingSpec weighting = WeightingSpec::heuristic(7.0);
  const Round round = score_round(x0, label_set, model, weighting, sched, rng);

  REQUIRE(round.errors.size() == 3);
  CHECK(round.t >= 0.0);
  CHECK(round.t <= 1.0);
  CHECK(round.w == doctest::Approx(std::exp(-7.0 * round.t)).epsilon(1e-13));
  // Recompute every candidate's error from the recorded draw: all three must
  // reproduce exactly, proving a single x_t was reused.
  const ScheduleEval e = sched.eval(round.t);
  Vec x_t(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    x_t[i] = e.alpha * x0[i] + e.sigma * round.noise_draw[i];
  }
  for (const auto& [cls, err] : round.errors) {
    NoisedObservation obs;
    obs.data = x_t;
    obs.time = round.t;
    const Vec xhat = posterior_mean_denoise(world, sched, Condition{cls, ""}, obs);
    CHECK(err == doctest::Approx(squared_error_score(x0, xhat)).epsilon(1e-12));
  }
  // Errors are keyed by ascending class id.
  CHECK(round.errors[0].first == 0);
  CHECK(round.errors[1].first == 1);
  CHECK(round.errors[2].first == 2);
}

TEST_CASE("aggregate_weighted is the mean of weighted per-round errors") {
  ScoresLedger ledger;
  Round r1;
  r1.t = 0.0;
  r1.w = 1.0;
  r1.errors = {{0, 1.0}};
  Round r2;
  r2.t = 0.5;
  r2.w = 0.0301973834223185;  // exp(-3.5)
  r2.errors = {{0, 2.0}};
  ledger.rounds = {r1, r2};
  CHECK(aggregate_weighted(ledger, 0) == doctest::Approx(0.5301973834223185).epsilon(1e-14));
  CHECK_THROWS_AS(aggregate_weighted(ledger, 1), std::invalid_argument);
}

TEST_CASE("shared-noise pairing slashes the variance of score differences") {
  // Near-tied candidates — the regime where elimination decisions live.
  // Compare Var(err_A - err_B) per round under shared noise against
  // independent draws: the common (t, x_t) cancels the noise-driven part of
  // both scores, which independent draws pay for twice.
  GaussianWorld world;
  world.means = {{4.0, 0.0}, {5.0, 0.0}};
  world.std_dev = 1.0;
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(2);
  const Vec x0{4.2, 0.3};
  const WeightingSpec weighting = WeightingSpec::heuristic(7.0);

  const int n = 3000;
  PairedAccumulator shared_diffs;
  Rng rng_shared(1);
  for (int i = 0; i < n; ++i) {
    const Round round = score_round(x0, label_set, model, weighting, sched, rng_shared);
    shared_diffs.add(round.w * (round.errors[1].second - round.errors[0].second));
  }
  PairedAccumulator indep_diffs;
  Rng rng_a(2), rng_b(3);
  const auto only = [&](int cls) { return std::vector<Condition>{Condition{cls, ""}}; };
  for (int i = 0; i < n; ++i) {
    const Round ra = score_round(x0, only(0), model, weighting, sched, rng_a);
    const Round rb = score_round(x0, only(1), model, weighting, sched, rng_b);
    indep_diffs.add(rb.w * rb.errors[0].second - ra.w * ra.errors[0].second);
  }
  CHECK(shared_diffs.count() == n);
  CHECK(indep_diffs.count() == n);
  // Means agree (both unbiased for the same quantity)...
  CHECK(std::fabs(shared_diffs.mean() - indep_diffs.mean()) <
        0.5 * std::fabs(indep_diffs.mean()) + 0.5);
  // ...but the paired variance is several times smaller.
  CHECK(shared_diffs.variance() < 0.25 * indep_diffs.variance());
}

TEST_CASE("classify_shared and classify_naive agree with a brute-force replay") {
  const GaussianWorld world = easy_world();
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(3);
  const Vec x0{-4.0, 0.7};
  ClassifierConfig config;
  config.pruning = false;

  SUBCASE("shared: ledger reproduces final scores; calls = K * rounds") {
    Rng rng(123);
    ScoresLedger ledger;
    const Prediction pred = classify_shared(x0, label_set, model, config, 40, rng, &ledger);
    CHECK(pred.model_calls == 3 * 40);
    CHECK(pred.rounds_used == 40);
    REQUIRE(ledger.rounds.size() == 40);
    REQUIRE(pred.final_scores.size() == 3);
    for (const auto& [cls, score] : pred.final_scores) {
      CHECK(score == doctest::Approx(aggregate_weighted(ledger, cls)).epsilon(1e-12));
    }
    // Winner is the arg-min of the final scores.
    const auto best = std::min_element(
        pred.final_scores.begin(), pred.final_scores.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    CHECK(pred.class_id == best->first);
    CHECK(pred.class_id == 1);
    CHECK(pred.eliminations.empty());
  }

  SUBCASE("naive: every class gets its own independent rounds") {
    Rng rng(123);
    ScoresLedger ledger;
    const Prediction pred = classify_naive(x0, label_set, model, config, 30, rng, &ledger);
    CHECK(pred.model_calls == 3 * 30);
    REQUIRE(ledger.rounds.size() == 3 * 30);
    // Each recorded round names exactly one candidate.
    for (const Round& r : ledger.rounds) CHECK(r.errors.size() == 1);
    for (const auto& [cls, score] : pred.final_scores) {
      CHECK(score == doctest::Approx(aggregate_weighted(ledger, cls)).epsilon(1e-12));
    }
    CHECK(pred.class_id == 1);
  }
}

TEST_CASE("identical seeds reproduce identical runs; different seeds differ") {
  const GaussianWorld world = easy_world();
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(3);
  const Vec x0{0.3, 4.6};
  ClassifierConfig config;

  Rng r1(7), r2(7), r3(8);
  ScoresLedger l1, l2, l3;
  const Prediction p1 = classify_pruned(x0, label_set, model, config, r1, &l1);
  const Prediction p2 = classify_pruned(x0, label_set, model, config, r2, &l2);
  const Prediction p3 = classify_pruned(x0, label_set, model, config, r3, &l3);
  CHECK(p1.class_id == p2.class_id);
  CHECK(p1.model_calls == p2.model_calls);
  CHECK(p1.rounds_used == p2.rounds_used);
  REQUIRE(l1.rounds.size() == l2.rounds.size());
  for (std::size_t i = 0; i < l1.rounds.size(); ++i) {
    CHECK(l1.rounds[i].t == l2.rounds[i].t);
    CHECK(l1.rounds[i].noise_draw == l2.rounds[i].noise_draw);
    CHECK(l1.rounds[i].errors == l2.rounds[i].errors);
  }
  // A different seed draws different noise.
  REQUIRE_FALSE(l3.rounds.empty());
  CHECK(l1.rounds[0].t != l3.rounds[0].t);
}

TEST_CASE("pruning trace on a planted two-class problem") {
  // Class 0 always scores 0, class 1 always scores 1; with constant weights
  // the paired differences are a constant +1, so the one-sided p-value is 0
  // at the first eligible check: class 1 exits exactly at round min_scores.
  const PlantedErrorModel model({0.0, 1.0});
  const auto label_set = make_label_set(2);
  ClassifierConfig config = constant_weight_config();
  config.min_scores = 20;
  config.max_scores = 2000;
  Rng rng(5);
  ScoresLedger ledger;
  const Prediction pred = classify_pruned({0.0}, label_set, model, config, rng, &ledger);
  CHECK(pred.class_id == 0);
  CHECK(pred.rounds_used == 20);
  CHECK(pred.model_calls == 40);
  REQUIRE(pred.eliminations.size() == 1);
  CHECK(pred.eliminations[0].class_id == 1);
  CHECK(pred.eliminations[0].round == 20);
  REQUIRE(pred.final_scores.size() == 1);
  CHECK(pred.final_scores[0].first == 0);
  // After the elimination the ledger stops (single survivor ends the loop).
  CHECK(ledger.rounds.size() == 20);
  CHECK(ledger.rounds.back().errors.size() == 2);
}

TEST_CASE("min_scores of one defers elimination to the first testable round") {
  // A paired t-test needs two differences, so the planted loser exits at
  // round 2, not round 1.
  const PlantedErrorModel model({0.0, 1.0});
  const auto label_set = make_label_set(2);
  ClassifierConfig config = constant_weight_config();
  config.min_scores = 1;
  Rng rng(5);
  const Prediction pred = classify_pruned({0.0}, label_set, model, config, rng);
  REQUIRE(pred.eliminations.size() == 1);
  CHECK(pred.eliminations[0].round == 2);
  CHECK(pred.model_calls == 4);
}

TEST_CASE("two-sided pruning eliminates the planted loser as well") {
  const PlantedErrorModel model({0.0, 1.0});
  const auto label_set = make_label_set(2);
  ClassifierConfig config = constant_weight_config();
  config.ttest_side = TestSide::TwoSided;
  Rng rng(5);
  const Prediction pred = classify_pruned({0.0}, label_set, model, config, rng);
  CHECK(pred.class_id == 0);
  CHECK(pred.rounds_used == 20);
  REQUIRE(pred.eliminations.size() == 1);
  CHECK(pred.eliminations[0].class_id == 1);
}

TEST_CASE("indistinguishable candidates survive to the round budget") {
  // Both classes always score identically: differences are all zero, p = 1,
  // nothing can be eliminated, and the tie resolves to the lowest id.
  const PlantedErrorModel model({1.0, 1.0});
  const auto label_set = make_label_set(2);
  ClassifierConfig config = constant_weight_config();
  config.min_scores = 5;
  config.max_scores = 60;
  Rng rng(5);
  const Prediction pred = classify_pruned({0.0}, label_set, model, config, rng);
  CHECK(pred.eliminations.empty());
  CHECK(pred.rounds_used == 60);
  CHECK(pred.model_calls == 120);
  CHECK(pred.class_id == 0);  // exact tie -> lowest class id
  REQUIRE(pred.final_scores.size() == 2);
  CHECK(pred.final_scores[0].second == doctest::Approx(pred.final_scores[1].second));
}

TEST_CASE("single-candidate label sets take no rounds at all") {
  const PlantedErrorModel model({3.0});
  const auto label_set = make_label_set(1);
  ClassifierConfig config;
  Rng rng(1);
  const Prediction pred = classify_pruned({0.0}, label_set, model, config, rng);
  CHECK(pred.class_id == 0);
  CHECK(pred.rounds_used == 0);
  CHECK(pred.model_calls == 0);
  CHECK(pred.final_scores.empty());
  CHECK(pred.eliminations.empty());
}

TEST_CASE("the running best is never eliminated and wrong classes go first") {
  // Three classes with planted gaps; the two losers must be pruned and the
  // winner must survive with a full history.
  const PlantedErrorModel model({0.5, 1.5, 4.0});
  const auto label_set = make_label_set(3);
  ClassifierConfig config = constant_weight_config();
  config.min_scores = 10;
  Rng rng(2);
  ScoresLedger ledger;
  const Prediction pred = classify_pruned({0.0}, label_set, model, config, rng, &ledger);
  CHECK(pred.class_id == 0);
  REQUIRE(pred.eliminations.size() == 2);
  for (const Elimination& e : pred.eliminations) {
    CHECK(e.class_id != 0);
    CHECK(e.round == 10);
  }
  // Later rounds only carry the survivor set.
  CHECK(ledger.rounds.front().errors.size() == 3);
  CHECK(ledger.rounds.back().errors.size() == 3);  // all pruned in one sweep
  CHECK(pred.rounds_used == 10);
}

TEST_CASE("pruned accuracy matches unpruned accuracy on a real world") {
  const GaussianWorld world = easy_world();
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(3);

  Rng data_rng(substream_seed(99, "dataset", 0));
  const LabeledDataset ds = sample_dataset(world, 150, data_rng);

  ClassifierConfig pruned_config;
  pruned_config.min_scores = 20;
  pruned_config.max_scores = 400;
  pruned_config.seed = 17;
  ClassifierConfig full_config = pruned_config;
  full_config.pruning = false;

  const auto pruned = run_dataset(ds.examples, label_set, model, pruned_config, 2);
  const auto full = run_dataset(ds.examples, label_set, model, full_config, 2);
  int agree = 0, pruned_correct = 0, full_correct = 0;
  double pruned_calls = 0.0, full_calls = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    agree += pruned.predictions[i].class_id == full.predictions[i].class_id;
    pruned_correct += pruned.predictions[i].class_id == ds.labels[i];
    full_correct += full.predictions[i].class_id == ds.labels[i];
    pruned_calls += static_cast<double>(pruned.predictions[i].model_calls);
    full_calls += static_cast<double>(full.predictions[i].model_calls);
  }
  // Same detections, far fewer calls.
  CHECK(agree >= 147);  // >= 98% agreement
  CHECK(std::abs(pruned_correct - full_correct) <= 3);
  CHECK(pruned_calls < 0.5 * full_calls);
}

TEST_CASE("run_dataset is deterministic across worker counts") {
  const GaussianWorld world = easy_world();
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(3);
  Rng data_rng(4);
  const LabeledDataset ds = sample_dataset(world, 40, data_rng);
  ClassifierConfig config;
  config.seed = 21;
  const auto serial = run_dataset(ds.examples, label_set, model, config, 1, true);
  const auto parallel = run_dataset(ds.examples, label_set, model, config, 4, true);
  REQUIRE(serial.predictions.size() == parallel.predictions.size());
  for (std::size_t i = 0; i < serial.predictions.size(); ++i) {
    CHECK(serial.predictions[i].class_id == parallel.predictions[i].class_id);
    CHECK(serial.predictions[i].model_calls == parallel.predictions[i].model_calls);
    CHECK(serial.predictions[i].final_scores == parallel.predictions[i].final_scores);
    REQUIRE(serial.ledgers[i].rounds.size() == parallel.ledgers[i].rounds.size());
    for (std::size_t r = 0; r < serial.ledgers[i].rounds.size(); ++r) {
      CHECK(serial.ledgers[i].rounds[r].noise_draw == parallel.ledgers[i].rounds[r].noise_draw);
    }
  }
}

TEST_CASE("classify_example dispatch honors noise mode and pruning flags") {
  const GaussianWorld world = easy_world();
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(3);
  const Vec x0{4.0, 0.0};
  ClassifierConfig config;
  config.max_scores = 30;

  SUBCASE("shared + pruning = successive elimination") {
    Rng a(3), b(3);
    const Prediction via_dispatch = classify_example(x0, label_set, model, config, a);
    const Prediction direct = classify_pruned(x0, label_set, model, config, b);
    CHECK(via_dispatch.class_id == direct.class_id);
    CHECK(via_dispatch.model_calls == direct.model_calls);
  }
  SUBCASE("shared without pruning = fixed shared rounds at max_scores") {
    config.pruning = false;
    Rng a(3), b(3);
    const Prediction via_dispatch = classify_example(x0, label_set, model, config, a);
    const Prediction direct = classify_shared(x0, label_set, model, config, 30, b);
    CHECK(via_dispatch.model_calls == 90);
    CHECK(via_dispatch.class_id == direct.class_id);
    CHECK(via_dispatch.final_scores == direct.final_scores);
  }
  SUBCASE("independent without pruning = naive at max_scores per class") {
    config.pruning = false;
    config.noise_mode = NoiseMode::Independent;
    Rng a(3), b(3);
    const Prediction via_dispatch = classify_example(x0, label_set, model, config, a);
    const Prediction direct = classify_naive(x0, label_set, model, config, 30, b);
    CHECK(via_dispatch.model_calls == 90);
    CHECK(via_dispatch.class_id == direct.class_id);
    CHECK(via_dispatch.final_scores == direct.final_scores);
  }
  SUBCASE("independent + pruning is rejected") {
    config.noise_mode = NoiseMode::Independent;
    config.pruning = true;
    Rng a(3);
    CHECK_THROWS_AS(classify_example(x0, label_set, model, config, a),
                    std::invalid_argument);
  }
}

TEST_CASE("efficiency_curve covers all strategies with exact budgets") {
  const GaussianWorld world = easy_world();
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(3);
  Rng data_rng(8);
  const LabeledDataset ds = sample_dataset(world, 30, data_rng);
  ClassifierConfig base;
  base.seed = 5;

  const auto rows = efficiency_curve(ds, label_set, model, base, {20, 5, 20, -3, 10}, 2);
  // Budgets deduplicate/sort to {5, 10, 20}; three strategies.
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const bool ordered = rows[i].strategy < rows[i + 1].strategy ||
                         (rows[i].strategy == rows[i + 1].strategy &&
                          rows[i].budget < rows[i + 1].budget);
    CHECK(ordered);
  }
  for (const EfficiencyRow& row : rows) {
    CHECK(row.accuracy >= 0.0);
    CHECK(row.accuracy <= 1.0);
    if (row.strategy == "naive" || row.strategy == "shared") {
      CHECK(row.mean_calls == doctest::Approx(3.0 * row.budget).epsilon(1e-12));
    } else {
      CHECK(row.strategy == "pruned");
      CHECK(row.mean_calls <= 3.0 * row.budget + 1e-9);
    }
  }
}

TEST_CASE("bucketize_ledger mirrors the recorded rounds") {
  const PlantedErrorModel model({0.25, 2.25});
  const auto label_set = make_label_set(2);
  ClassifierConfig config;
  config.pruning = false;
  Rng rng(12);
  ScoresLedger ledger;
  classify_shared({0.0}, label_set, model, config, 50, rng, &ledger);
  const auto bucketed = bucketize_ledger(ledger, 2);
  REQUIRE(bucketed.size() == 2);
  std::int64_t total = 0;
  for (int b = 0; b < kNumBuckets; ++b) {
    CHECK(bucketed[0].count[static_cast<std::size_t>(b)] ==
          bucketed[1].count[static_cast<std::size_t>(b)]);
    total += bucketed[0].count[static_cast<std::size_t>(b)];
    if (bucketed[0].count[static_cast<std::size_t>(b)] > 0) {
      CHECK(bucketed[0].mean[static_cast<std::size_t>(b)] ==
            doctest::Approx(0.25).epsilon(1e-12));
      CHECK(bucketed[1].mean[static_cast<std::size_t>(b)] ==
            doctest::Approx(2.25).epsilon(1e-12));
    }
  }
  CHECK(total == 50);
}

TEST_CASE("learned weights plug back into classification unchanged by scaling") {
  // Scaling a learned table by a positive constant scales every class's
  // aggregate by the same factor, so predictions cannot change.
  const GaussianWorld world = easy_world();
  const NoiseSchedule sched = NoiseSchedule::cosine();
  const PosteriorMeanDenoiser model(world, sched);
  const auto label_set = make_label_set(3);
  Rng data_rng(14);
  const LabeledDataset ds = sample_dataset(world, 25, data_rng);

  ClassifierConfig c1;
  c1.pruning = false;
  c1.max_scores = 40;
  c1.seed = 33;
  c1.weighting = WeightingSpec::learned_table(flat_table(0.7));
  ClassifierConfig c10 = c1;
  c10.weighting = WeightingSpec::learned_table(flat_table(7.0));

  const auto r1 = run_dataset(ds.examples, label_set, model, c1, 1);
  const auto r10 = run_dataset(ds.examples, label_set, model, c10, 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(r1.predictions[i].class_id == r10.predictions[i].class_id);
    REQUIRE(r1.predictions[i].final_scores.size() ==
            r10.predictions[i].final_scores.size());
    for (std::size_t k = 0; k < r1.predictions[i].final_scores.size(); ++k) {
      CHECK(r10.predictions[i].final_scores[k].second ==
            doctest::Approx(10.0 * r1.predictions[i].final_scores[k].second).epsilon(1e-10));
    }
  }
}
