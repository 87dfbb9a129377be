#pragma once

#include <array>
#include <string>
#include <vector>

#include "diffcls/binding.hpp"
#include "diffcls/calibration.hpp"
#include "diffcls/classifier.hpp"
#include "diffcls/gaussian_world.hpp"
#include "diffcls/weighting.hpp"

namespace diffcls {

// Shortest round-trippable decimal rendering of a double ("%.17g" trimmed).
std::string format_double(double v);

// World file: UTF-8 JSON {"dim": int, "std": float, "means": [[...], ...],
// "seed": int}.
void write_world(const GaussianWorld& world, const std::string& path);
GaussianWorld read_world(const std::string& path);

// Dataset file: CSV with header "label,f0,...,f{d-1}".
void write_dataset(const LabeledDataset& dataset, const std::string& path);
LabeledDataset read_dataset(const std::string& path);

// Learned weighting table: 20 decimal lines.
void write_weights(const std::array<double, kNumBuckets>& v, const std::string& path);
std::array<double, kNumBuckets> read_weights(const std::string& path);

// Per-example prediction records, one JSON object per line: example index,
// true label (null when unknown), predicted class, rounds, model calls,
// elimination trace, surviving per-class weighted mean scores.
void write_predictions(const std::vector<Prediction>& predictions,
                       const std::vector<int>& labels, const std::string& path);

struct PredictionRecord {
  int example = 0;
  int label = -1;  // -1 when the dataset was unlabeled
  Prediction prediction;
};
std::vector<PredictionRecord> read_predictions(const std::string& path);

// Round-by-round scores dump: CSV "round,t,w_t,class_id,sq_error". Ledgers
// are concatenated; the round column restarts at 0 for each episode.
void write_scores_csv(const std::vector<ScoresLedger>& ledgers, const std::string& path);

// Efficiency table: CSV "strategy,budget,accuracy,mean_calls".
void write_efficiency_csv(const std::vector<EfficiencyRow>& rows, const std::string& path);

// Reliability report: JSON {"bins": [{"lo","hi","mean_conf","accuracy",
// "count"}...], "ece"}.
void write_reliability(const ReliabilityReport& report, const std::string& path);

// Binding examples, one JSON object per line: {"scene": {...}, "positive":
// str, "negative": str, "task": str}.
void write_binding_examples(const std::vector<BinaryExample>& examples, const std::string& path);
std::vector<BinaryExample> read_binding_examples(const std::string& path);

// Evaluation summary for a binding run.
void write_binding_evaluation(const BinaryEvaluation& eval, const std::string& task_name,
                              std::uint64_t seed, const std::string& path);

}  // namespace diffcls
