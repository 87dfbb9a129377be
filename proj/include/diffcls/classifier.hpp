#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "diffcls/diffusion.hpp"
#include "diffcls/gaussian_world.hpp"
#include "diffcls/rng.hpp"
#include "diffcls/stats.hpp"
#include "diffcls/weighting.hpp"

namespace diffcls {

enum class NoiseMode { Shared, Independent };

struct ClassifierConfig {
  int min_scores = 20;
  int max_scores = 2000;
  double cutoff_pval = 2e-3;
  WeightingSpec weighting = WeightingSpec::heuristic();
  NoiseSchedule schedule = NoiseSchedule::cosine();
  NoiseMode noise_mode = NoiseMode::Shared;
  bool pruning = true;
  TestSide ttest_side = TestSide::OneSided;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// One scoring round: a single (t, x_t) draw and the squared error of every
// candidate that was still alive. noise_draw is retained so the pairing can
// be audited by recomputation.
struct Round {
  double t = 0.0;
  double w = 0.0;
  Vec noise_draw;
  std::vector<std::pair<int, double>> errors;  // (class_id, squared error), ascending ids
};

struct ScoresLedger {
  std::vector<Round> rounds;
};

struct Elimination {
  int class_id = 0;
  int round = 0;  // 1-based round index at which the class was removed
};

struct Prediction {
  int class_id = 0;
  int rounds_used = 0;
  std::int64_t model_calls = 0;
  std::vector<std::pair<int, double>> final_scores;  // surviving classes only
  std::vector<Elimination> eliminations;
};

// Draws one t ~ U([0,1]) and one x_t, then scores every candidate against the
// identical (t, x_t). Candidate evaluation order follows the given order;
// recorded errors are sorted by class_id.
Round score_round(const Vec& x0, const std::vector<Condition>& candidates,
                  const ScoreModel& model, const WeightingSpec& weighting,
                  const NoiseSchedule& schedule, Rng& rng);

// Mean of w_t * error over the rounds in which class_id has a score.
double aggregate_weighted(const ScoresLedger& ledger, int class_id);

// Baseline estimator: every (class, sample) pair gets its own independent
// (t, x_t). Model calls = K * n_per_class.
Prediction classify_naive(const Vec& x0, const std::vector<Condition>& label_set,
                          const ScoreModel& model, const ClassifierConfig& config,
                          int n_per_class, Rng& rng, ScoresLedger* ledger = nullptr);

// Shared-noise estimator: n_rounds rounds over the full label set, each round
// reusing one (t, x_t) across all classes. Model calls = K * n_rounds.
Prediction classify_shared(const Vec& x0, const std::vector<Condition>& label_set,
                           const ScoreModel& model, const ClassifierConfig& config,
                           int n_rounds, Rng& rng, ScoresLedger* ledger = nullptr);

// Successive-elimination classification: shared-noise rounds over the
// surviving candidates; after every round the running best is recomputed and,
// once min_scores rounds have accumulated, any candidate whose paired t-test
// against the best falls under cutoff_pval is eliminated. The current best is
// never eliminated. Stops when one candidate remains or max_scores rounds are
// spent.
Prediction classify_pruned(const Vec& x0, const std::vector<Condition>& label_set,
                           const ScoreModel& model, const ClassifierConfig& config, Rng& rng,
                           ScoresLedger* ledger = nullptr);

// Dispatch on (noise_mode, pruning): Shared+pruning -> classify_pruned;
// Shared alone -> classify_shared with max_scores rounds; Independent alone ->
// classify_naive with max_scores per class. Independent+pruning is rejected
// (pruning requires paired rounds).
Prediction classify_example(const Vec& x0, const std::vector<Condition>& label_set,
                            const ScoreModel& model, const ClassifierConfig& config, Rng& rng,
                            ScoresLedger* ledger = nullptr);

struct RunDatasetResult {
  std::vector<Prediction> predictions;
  std::vector<ScoresLedger> ledgers;  // filled only when keep_ledgers is set
};

// Classifies every example, parallelized over examples. Episode i owns a
// generator seeded from (config.seed, "episode", i), so output is
// deterministic regardless of worker count or scheduling.
RunDatasetResult run_dataset(const std::vector<Vec>& examples,
                             const std::vector<Condition>& label_set, const ScoreModel& model,
                             const ClassifierConfig& config, int workers = 1,
                             bool keep_ledgers = false);

struct EfficiencyRow {
  std::string strategy;  // "naive", "shared", or "pruned"
  int budget = 0;        // scores per class: n_per_class, n_rounds, or max_scores
  double accuracy = 0.0;
  double mean_calls = 0.0;
};

// Accuracy-versus-calls table across the three strategies. Non-positive
// budgets are dropped; rows come back sorted by (strategy, budget). Episode
// seeds depend only on the example index, so strategies see common random
// numbers.
std::vector<EfficiencyRow> efficiency_curve(const LabeledDataset& dataset,
                                            const std::vector<Condition>& label_set,
                                            const ScoreModel& model,
                                            const ClassifierConfig& base,
                                            const std::vector<int>& budgets, int workers = 1);

// Per-class bucketed raw squared errors from one episode's ledger; the
// feature grid row consumed by the weight learner.
std::vector<BucketedScores> bucketize_ledger(const ScoresLedger& ledger, int num_classes);

}  // namespace diffcls
