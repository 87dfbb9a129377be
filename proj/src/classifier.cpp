#include "diffcls/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace diffcls {

void ClassifierConfig::validate() const {
  if (min_scores < 1 || min_scores > max_scores) {
    throw std::invalid_argument("ClassifierConfig: need 1 <= min_scores <= max_scores");
  }
  if (!(cutoff_pval > 0.0 && cutoff_pval < 1.0)) {
    throw std::invalid_argument("ClassifierConfig: cutoff_pval must lie in (0, 1)");
  }
  if (noise_mode == NoiseMode::Independent && pruning) {
    throw std::invalid_argument(
        "ClassifierConfig: pruning requires shared noise (paired rounds); "
        "independent noise cannot be pruned");
  }
  weighting.validate();
}

namespace {

void require_labels(const std::vector<Condition>& label_set) {
  if (label_set.empty()) {
    throw std::invalid_argument("classification requires a nonempty label set");
  }
}

int argmin_class(const std::vector<std::pair<int, double>>& scores) {
  int best = scores.front().first;
  double best_score = scores.front().second;
  for (const auto& [cls, score] : scores) {
    if (score < best_score || (score == best_score && cls < best)) {
      best_score = score;
      best = cls;
    }
  }
  return best;
}

}  // namespace

Round score_round(const Vec& x0, const std::vector<Condition>& candidates,
                  const ScoreModel& model, const WeightingSpec& weighting,
                  const NoiseSchedule& schedule, Rng& rng) {
  if (candidates.empty()) {
    throw std::invalid_argument("score_round: candidate set must be nonempty");
  }
  Round round;
  round.t = rng.uniform();
  const NoisedObservation noised = sample_forward(x0, round.t, schedule, rng);
  round.noise_draw = noised.noise_draw;
  round.w = weight(weighting, schedule, round.t);
  round.errors.reserve(candidates.size());
  for (const Condition& cond : candidates) {
    const Vec x_hat = model.denoise(noised.data, round.t, cond);
    round.errors.emplace_back(cond.class_id, squared_error_score(x0, x_hat));
  }
  std::sort(round.errors.begin(), round.errors.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return round;
}

double aggregate_weighted(const ScoresLedger& ledger, int class_id) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const Round& round : ledger.rounds) {
    for (const auto& [cls, err] : round.errors) {
      if (cls == class_id) {
        sum += round.w * err;
        n += 1;
      }
    }
  }
  if (n == 0) {
    throw std::invalid_argument("aggregate_weighted: class " + std::to_string(class_id) +
                                " has no scores");
  }
  return sum / static_cast<double>(n);
}

Prediction classify_naive(const Vec& x0, const std::vector<Condition>& label_set,
                          const ScoreModel& model, const ClassifierConfig& config,
                          int n_per_class, Rng& rng, ScoresLedger* ledger) {
  require_labels(label_set);
  if (n_per_class < 1) {
    throw std::invalid_argument("classify_naive: n_per_class must be >= 1");
  }
  Prediction pred;
  pred.final_scores.reserve(label_set.size());
  for (const Condition& cond : label_set) {
    double sum = 0.0;
    for (int j = 0; j < n_per_class; ++j) {
      std::vector<Condition> one{cond};
      Round round = score_round(x0, one, model, config.weighting, config.schedule, rng);
      sum += round.w * round.errors.front().second;
      if (ledger) ledger->rounds.push_back(std::move(round));
    }
    pred.final_scores.emplace_back(cond.class_id, sum / static_cast<double>(n_per_class));
  }
  std::sort(pred.final_scores.begin(), pred.final_scores.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  pred.class_id = argmin_class(pred.final_scores);
  pred.rounds_used = n_per_class;
  pred.model_calls = static_cast<std::int64_t>(label_set.size()) * n_per_class;
  return pred;
}

Prediction classify_shared(const Vec& x0, const std::vector<Condition>& label_set,
                           const ScoreModel& model, const ClassifierConfig& config,
                           int n_rounds, Rng& rng, ScoresLedger* ledger) {
  require_labels(label_set);
  if (n_rounds < 1) {
    throw std::invalid_argument("classify_shared: n_rounds must be >= 1");
  }
  // Recorded errors come back sorted by class_id; align the running sums with
  // that order regardless of the label set's order.
  std::vector<Condition> candidates = label_set;
  std::sort(candidates.begin(), candidates.end(),
            [](const Condition& a, const Condition& b) { return a.class_id < b.class_id; });
  std::vector<double> sums(candidates.size(), 0.0);
  for (int j = 0; j < n_rounds; ++j) {
    Round round = score_round(x0, candidates, model, config.weighting, config.schedule, rng);
    for (std::size_t k = 0; k < round.errors.size(); ++k) {
      sums[k] += round.w * round.errors[k].second;
    }
    if (ledger) ledger->rounds.push_back(std::move(round));
  }
  Prediction pred;
  pred.final_scores.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    pred.final_scores.emplace_back(candidates[k].class_id, sums[k] / n_rounds);
  }
  pred.class_id = argmin_class(pred.final_scores);
  pred.rounds_used = n_rounds;
  pred.model_calls = static_cast<std::int64_t>(label_set.size()) * n_rounds;
  return pred;
}

Prediction classify_pruned(const Vec& x0, const std::vector<Condition>& label_set,
                           const ScoreModel& model, const ClassifierConfig& config, Rng& rng,
                           ScoresLedger* ledger) {
  require_labels(label_set);
  config.validate();

  // Candidates stay sorted by class_id; histories hold per-round weighted
  // scores, aligned across survivors (every survivor has scored every round).
  std::vector<Condition> candidates = label_set;
  std::sort(candidates.begin(), candidates.end(),
            [](const Condition& a, const Condition& b) { return a.class_id < b.class_id; });
  std::vector<std::vector<double>> history(candidates.size());
  std::vector<double> sums(candidates.size(), 0.0);

  Prediction pred;
  int n = 0;
  std::size_t best_idx = 0;
  while (candidates.size() > 1 && n < config.max_scores) {
    Round round = score_round(x0, candidates, model, config.weighting, config.schedule, rng);
    pred.model_calls += static_cast<std::int64_t>(candidates.size());
    n += 1;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const double weighted = round.w * round.errors[k].second;
      history[k].push_back(weighted);
      sums[k] += weighted;
    }
    if (ledger) ledger->rounds.push_back(std::move(round));

    best_idx = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      if (sums[k] < sums[best_idx]) best_idx = k;
    }

    // A paired t-test needs at least two differences, so elimination can
    // never fire before round 2 even when min_scores is 1.
    if (n >= std::max(config.min_scores, 2)) {
      std::vector<std::size_t> keep;
      keep.reserve(candidates.size());
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (k == best_idx) {
          keep.push_back(k);
          continue;
        }
        PairedAccumulator diffs;
        for (int j = 0; j < n; ++j) {
          diffs.add(history[k][static_cast<std::size_t>(j)] -
                    history[best_idx][static_cast<std::size_t>(j)]);
        }
        if (paired_ttest_pvalue(diffs, config.ttest_side) < config.cutoff_pval) {
          pred.eliminations.push_back({candidates[k].class_id, n});
        } else {
          keep.push_back(k);
        }
      }
      if (keep.size() < candidates.size()) {
        std::vector<Condition> next_candidates;
        std::vector<std::vector<double>> next_history;
        std::vector<double> next_sums;
        next_candidates.reserve(keep.size());
        next_history.reserve(keep.size());
        next_sums.reserve(keep.size());
        for (std::size_t k : keep) {
          if (k == best_idx) best_idx = next_candidates.size();
          next_candidates.push_back(std::move(candidates[k]));
          next_history.push_back(std::move(history[k]));
          next_sums.push_back(sums[k]);
        }
        candidates = std::move(next_candidates);
        history = std::move(next_history);
        sums = std::move(next_sums);
      }
    }
  }

  pred.rounds_used = n;
  pred.final_scores.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    pred.final_scores.emplace_back(candidates[k].class_id,
                                   n > 0 ? sums[k] / n : 0.0);
  }
  pred.class_id = n > 0 ? candidates[best_idx].class_id : candidates.front().class_id;
  if (n == 0) {
    // Single-candidate label set: the loop never ran; report zero work.
    pred.final_scores.clear();
  }
  return pred;
}

Prediction classify_example(const Vec& x0, const std::vector<Condition>& label_set,
                            const ScoreModel& model, const ClassifierConfig& config, Rng& rng,
                            ScoresLedger* ledger) {
  config.validate();
  if (config.noise_mode == NoiseMode::Independent) {
    return classify_naive(x0, label_set, model, config, config.max_scores, rng, ledger);
  }
  if (config.pruning) {
    return classify_pruned(x0, label_set, model, config, rng, ledger);
  }
  return classify_shared(x0, label_set, model, config, config.max_scores, rng, ledger);
}

namespace {

// Runs fn(i) for i in [0, n) across `workers` threads. Any exception is
// rethrown on the calling thread.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const int usable = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (usable == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(usable));
  for (int w = 0; w < usable; ++w) {
    threads.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      }
    });
  }
  for (std::thread& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

RunDatasetResult run_dataset(const std::vector<Vec>& examples,
                             const std::vector<Condition>& label_set, const ScoreModel& model,
                             const ClassifierConfig& config, int workers, bool keep_ledgers) {
  config.validate();
  require_labels(label_set);
  RunDatasetResult result;
  result.predictions.resize(examples.size());
  if (keep_ledgers) result.ledgers.resize(examples.size());
  parallel_for(examples.size(), workers, [&](std::size_t i) {
    Rng rng(substream_seed(config.seed, "episode", i));
    ScoresLedger* ledger = keep_ledgers ? &result.ledgers[i] : nullptr;
    result.predictions[i] = classify_example(examples[i], label_set, model, config, rng, ledger);
  });
  return result;
}

std::vector<EfficiencyRow> efficiency_curve(const LabeledDataset& dataset,
                                            const std::vector<Condition>& label_set,
                                            const ScoreModel& model,
                                            const ClassifierConfig& base,
                                            const std::vector<int>& budgets, int workers) {
  if (dataset.size() == 0) {
    throw std::invalid_argument("efficiency_curve: dataset must be nonempty");
  }
  require_labels(label_set);

  std::vector<int> usable_budgets;
  for (int b : budgets) {
    if (b > 0) usable_budgets.push_back(b);
  }
  std::sort(usable_budgets.begin(), usable_budgets.end());
  usable_budgets.erase(std::unique(usable_budgets.begin(), usable_budgets.end()),
                       usable_budgets.end());

  auto run_strategy = [&](const std::string& strategy, int budget) {
    ClassifierConfig config = base;
    config.max_scores = budget;
    if (strategy == "naive") {
      config.noise_mode = NoiseMode::Independent;
      config.pruning = false;
      config.min_scores = 1;
    } else if (strategy == "shared") {
      config.noise_mode = NoiseMode::Shared;
      config.pruning = false;
      config.min_scores = 1;
    } else {
      config.noise_mode = NoiseMode::Shared;
      config.pruning = true;
      config.min_scores = std::min(base.min_scores, budget);
    }
    const RunDatasetResult run = run_dataset(dataset.examples, label_set, model, config, workers);
    std::int64_t correct = 0;
    double total_calls = 0.0;
    for (std::size_t i = 0; i < run.predictions.size(); ++i) {
      if (run.predictions[i].class_id == dataset.labels[i]) correct += 1;
      total_calls += static_cast<double>(run.predictions[i].model_calls);
    }
    EfficiencyRow row;
    row.strategy = strategy;
    row.budget = budget;
    row.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
    row.mean_calls = total_calls / static_cast<double>(dataset.size());
    return row;
  };

  std::vector<EfficiencyRow> rows;
  for (const std::string& strategy : {std::string("naive"), std::string("pruned"),
                                      std::string("shared")}) {
    for (int budget : usable_budgets) {
      rows.push_back(run_strategy(strategy, budget));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const EfficiencyRow& a, const EfficiencyRow& b) {
    return a.strategy != b.strategy ? a.strategy < b.strategy : a.budget < b.budget;
  });
  return rows;
}

std::vector<BucketedScores> bucketize_ledger(const ScoresLedger& ledger, int num_classes) {
  if (num_classes <= 0) {
    throw std::invalid_argument("bucketize_ledger: num_classes must be positive");
  }
  std::vector<BucketedScores> out(static_cast<std::size_t>(num_classes));
  for (const Round& round : ledger.rounds) {
    for (const auto& [cls, err] : round.errors) {
      if (cls < 0 || cls >= num_classes) {
        throw std::invalid_argument("bucketize_ledger: class id outside [0, num_classes)");
      }
      out[static_cast<std::size_t>(cls)].add(round.t, err);
    }
  }
  return out;
}

}  // namespace diffcls
