// Command-line front end: world/dataset generation, classification runs,
// efficiency benchmarks, calibration, and binding-task generation/evaluation.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "diffcls/binding.hpp"
#include "diffcls/calibration.hpp"
#include "diffcls/classifier.hpp"
#include "diffcls/diffusion.hpp"
#include "diffcls/gaussian_world.hpp"
#include "diffcls/io.hpp"
#include "diffcls/rng.hpp"
#include "diffcls/weighting.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace diffcls;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("DIFFCLS_OUT");
  return env != nullptr && *env != '\0' ? env : ".";
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(now - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Wall-clock goes to a sidecar log (and stdout), never into the data
// artifacts, so identical runs stay byte-identical.
void write_timing(const std::string& out_dir, const std::string& command, double ms) {
  std::ofstream log(out_dir + "/timing.log", std::ios::trunc);
  log << command << " wall_ms " << format_double(ms) << "\n";
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open \"" + path + "\" for writing");
  out << j.dump(2) << "\n";
}

WeightingSpec parse_weighting_flag(const std::string& text) {
  if (text == "simple") return WeightingSpec::simple();
  if (text == "vdm") return WeightingSpec::vdm();
  if (text == "heuristic") return WeightingSpec::heuristic();
  const std::string heuristic_prefix = "heuristic:";
  if (text.rfind(heuristic_prefix, 0) == 0) {
    const std::string lambda_text = text.substr(heuristic_prefix.size());
    char* end = nullptr;
    const double lambda = std::strtod(lambda_text.c_str(), &end);
    if (end == lambda_text.c_str() || *end != '\0' || !(lambda > 0.0)) {
      throw std::invalid_argument("--weighting heuristic:<lambda> needs a positive number, got \"" +
                                  lambda_text + "\"");
    }
    return WeightingSpec::heuristic(lambda);
  }
  const std::string learned_prefix = "learned:";
  if (text.rfind(learned_prefix, 0) == 0) {
    return WeightingSpec::learned_table(read_weights(text.substr(learned_prefix.size())));
  }
  throw std::invalid_argument("unknown weighting \"" + text +
                              "\"; expected simple | vdm | heuristic:<lambda> | learned:<path>");
}

std::string weighting_description(const WeightingSpec& spec) {
  switch (spec.kind) {
    case WeightingKind::Simple:
      return "simple";
    case WeightingKind::VDM:
      return "vdm";
    case WeightingKind::Heuristic:
      return "heuristic:" + format_double(spec.heuristic_lambda);
    case WeightingKind::Learned:
      return "learned";
  }
  return "unknown";
}

std::vector<std::string> read_label_names(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file \"" + path + "\"");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

// ---------------------------------------------------------------------------
// gen-world

struct GenWorldArgs {
  int classes = 2;
  int dim = 2;
  double std_dev = 1.0;
  double separation = 4.0;
  int n = 100;
  std::uint64_t seed = 0;
  std::string out;
};

void run_gen_world(const GenWorldArgs& args) {
  Timer timer;
  GaussianWorld world;
  Rng world_rng(substream_seed(args.seed, "world", 0));
  world.means = generate_separated_means(args.classes, args.dim,
                                         args.separation * args.std_dev, world_rng);
  world.std_dev = args.std_dev;
  world.seed = args.seed;
  write_world(world, args.out + "/world.json");

  Rng data_rng(substream_seed(args.seed, "dataset", 0));
  const LabeledDataset dataset = sample_dataset(world, args.n, data_rng);
  write_dataset(dataset, args.out + "/dataset.csv");

  json config;
  config["command"] = "gen-world";
  config["classes"] = args.classes;
  config["dim"] = args.dim;
  config["std"] = args.std_dev;
  config["separation"] = args.separation;
  config["n"] = args.n;
  config["seed"] = args.seed;
  write_json_file(config, args.out + "/config.json");

  const double ms = timer.elapsed_ms();
  write_timing(args.out, "gen-world", ms);
  std::cout << "wrote world.json (" << args.classes << " classes, dim " << args.dim
            << ") and dataset.csv (" << args.n << " rows) to " << args.out << " in "
            << format_double(ms) << " ms\n";
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
  std::string world_path;
  std::string dataset_path;
  std::string labels_path;
  std::string prompt_template = "A photo of a {}";
  std::string weighting = "heuristic:7";
  int min_scores = 20;
  int max_scores = 2000;
  double cutoff_pval = 2e-3;
  std::string noise_mode = "shared";
  std::string pruning = "on";
  std::string ttest_side = "one";
  std::uint64_t seed = 0;
  int workers = 1;
  int max_examples = 4096;
  bool scores_csv = false;
  std::string out;
};

ClassifierConfig config_from_flags(const std::string& weighting, int min_scores, int max_scores,
                                   double cutoff_pval, const std::string& noise_mode,
                                   const std::string& pruning, const std::string& ttest_side,
                                   std::uint64_t seed) {
  ClassifierConfig config;
  config.weighting = parse_weighting_flag(weighting);
  config.min_scores = min_scores;
  config.max_scores = max_scores;
  config.cutoff_pval = cutoff_pval;
  config.noise_mode = noise_mode == "independent" ? NoiseMode::Independent : NoiseMode::Shared;
  config.pruning = pruning == "on";
  config.ttest_side = ttest_side == "two" ? TestSide::TwoSided : TestSide::OneSided;
  config.seed = seed;
  config.validate();
  return config;
}

json config_echo(const ClassifierConfig& config, const std::string& weighting_flag) {
  json j;
  j["weighting"] = weighting_flag;
  j["min_scores"] = config.min_scores;
  j["max_scores"] = config.max_scores;
  j["cutoff_pval"] = config.cutoff_pval;
  j["noise_mode"] = config.noise_mode == NoiseMode::Independent ? "independent" : "shared";
  j["pruning"] = config.pruning ? "on" : "off";
  j["ttest_side"] = config.ttest_side == TestSide::TwoSided ? "two" : "one";
  j["schedule"] = config.schedule.family();
  j["seed"] = config.seed;
  return j;
}

void run_classify(const ClassifyArgs& args) {
  Timer timer;
  const GaussianWorld world = read_world(args.world_path);
  LabeledDataset dataset = read_dataset(args.dataset_path);
  if (static_cast<int>(dataset.size()) > args.max_examples) {
    dataset.examples.resize(static_cast<std::size_t>(args.max_examples));
    dataset.labels.resize(static_cast<std::size_t>(args.max_examples));
  }
  for (const Vec& x : dataset.examples) {
    if (static_cast<int>(x.size()) != world.dim()) {
      throw std::invalid_argument("dataset dimension " + std::to_string(x.size()) +
                                  " does not match world dimension " +
                                  std::to_string(world.dim()));
    }
  }
  std::vector<std::string> names;
  if (!args.labels_path.empty()) names = read_label_names(args.labels_path);
  const std::vector<Condition> label_set =
      make_label_set(world.num_classes(), names, args.prompt_template);

  ClassifierConfig config =
      config_from_flags(args.weighting, args.min_scores, args.max_scores, args.cutoff_pval,
                        args.noise_mode, args.pruning, args.ttest_side, args.seed);
  const PosteriorMeanDenoiser model(world, config.schedule);

  const RunDatasetResult result = run_dataset(dataset.examples, label_set, model, config,
                                              args.workers, args.scores_csv);
  write_predictions(result.predictions, dataset.labels, args.out + "/predictions.jsonl");
  if (args.scores_csv) {
    write_scores_csv(result.ledgers, args.out + "/scores.csv");
  }

  const std::size_t n = result.predictions.size();
  std::int64_t correct = 0;
  std::vector<std::int64_t> calls;
  calls.reserve(n);
  double call_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.predictions[i].class_id == dataset.labels[i]) correct += 1;
    calls.push_back(result.predictions[i].model_calls);
    call_sum += static_cast<double>(result.predictions[i].model_calls);
  }
  std::sort(calls.begin(), calls.end());
  json report;
  report["command"] = "classify";
  report["config"] = config_echo(config, args.weighting);
  report["config"]["prompt_template"] = args.prompt_template;
  report["config"]["workers"] = args.workers;
  report["config"]["max_examples"] = args.max_examples;
  report["n_examples"] = n;
  if (n == 0) {
    report["accuracy"] = nullptr;
    report["mean_model_calls"] = nullptr;
    report["median_model_calls"] = nullptr;
  } else {
    report["accuracy"] = static_cast<double>(correct) / static_cast<double>(n);
    report["mean_model_calls"] = call_sum / static_cast<double>(n);
    report["median_model_calls"] =
        n % 2 == 1 ? static_cast<double>(calls[n / 2])
                   : 0.5 * static_cast<double>(calls[n / 2 - 1] + calls[n / 2]);
  }
  report["zero_shot"] = config.weighting.zero_shot();
  report["seed"] = args.seed;
  write_json_file(report, args.out + "/report.json");

  const double ms = timer.elapsed_ms();
  write_timing(args.out, "classify", ms);
  std::cout << "classified " << n << " examples";
  if (n > 0) {
    std::cout << ", accuracy " << format_double(report["accuracy"].get<double>())
              << ", mean calls " << format_double(report["mean_model_calls"].get<double>());
  }
  std::cout << " (" << format_double(ms) << " ms)\n";
}

// ---------------------------------------------------------------------------
// efficiency

struct EfficiencyArgs {
  std::string world_path;
  std::string dataset_path;
  std::string weighting = "heuristic:7";
  int min_scores = 20;
  double cutoff_pval = 2e-3;
  std::vector<int> budgets = {10, 20, 50, 100, 200, 500, 1000, 2000};
  std::uint64_t seed = 0;
  int workers = 1;
  int max_examples = 4096;
  std::string out;
};

void run_efficiency(const EfficiencyArgs& args) {
  Timer timer;
  const GaussianWorld world = read_world(args.world_path);
  LabeledDataset dataset = read_dataset(args.dataset_path);
  if (static_cast<int>(dataset.size()) > args.max_examples) {
    dataset.examples.resize(static_cast<std::size_t>(args.max_examples));
    dataset.labels.resize(static_cast<std::size_t>(args.max_examples));
  }
  for (const Vec& x : dataset.examples) {
    if (static_cast<int>(x.size()) != world.dim()) {
      throw std::invalid_argument("dataset dimension does not match world dimension");
    }
  }
  const std::vector<Condition> label_set = make_label_set(world.num_classes());

  ClassifierConfig base = config_from_flags(args.weighting, args.min_scores,
                                            /*max_scores=*/std::max(args.min_scores, 1),
                                            args.cutoff_pval, "shared", "on", "one", args.seed);
  const PosteriorMeanDenoiser model(world, base.schedule);
  const std::vector<EfficiencyRow> rows =
      efficiency_curve(dataset, label_set, model, base, args.budgets, args.workers);
  write_efficiency_csv(rows, args.out + "/efficiency.csv");

  json config;
  config["command"] = "efficiency";
  config["weighting"] = args.weighting;
  config["min_scores"] = args.min_scores;
  config["cutoff_pval"] = args.cutoff_pval;
  config["budgets"] = args.budgets;
  config["seed"] = args.seed;
  config["max_examples"] = args.max_examples;
  write_json_file(config, args.out + "/config.json");

  const double ms = timer.elapsed_ms();
  write_timing(args.out, "efficiency", ms);
  std::cout << "wrote efficiency.csv with " << rows.size() << " rows to " << args.out << " ("
            << format_double(ms) << " ms)\n";
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
  std::string predictions_path;
  std::string method = "temperature";
  double split = 0.2;
  std::uint64_t seed = 0;
  std::string out;
};

void run_calibrate(const CalibrateArgs& args) {
  Timer timer;
  if (!(args.split > 0.0 && args.split < 1.0)) {
    throw std::invalid_argument("--split must lie strictly between 0 and 1");
  }
  const std::vector<PredictionRecord> records = read_predictions(args.predictions_path);
  if (records.size() < 2) {
    throw std::invalid_argument("calibration needs at least two prediction records");
  }
  bool pruned_run = false;
  for (const PredictionRecord& rec : records) {
    if (!rec.prediction.eliminations.empty()) pruned_run = true;
    if (rec.label < 0) {
      throw std::invalid_argument(
          "calibration needs labeled predictions (run classify on a labeled dataset)");
    }
  }
  if (args.method == "temperature" && pruned_run) {
    throw std::invalid_argument(
        "temperature scaling needs the full per-class score estimates and is not compatible "
        "with the class pruning method; calibrate a --pruning off run, or use --method platt");
  }

  // Seeded shuffle; the first `split` fraction fits the calibrator, the rest
  // is scored for the reliability reports.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(substream_seed(args.seed, "split", 0));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::size_t n_fit = static_cast<std::size_t>(args.split * static_cast<double>(order.size()));
  n_fit = std::max<std::size_t>(1, std::min(n_fit, order.size() - 1));

  std::vector<double> conf;
  std::vector<double> base_conf;
  std::vector<bool> correct;
  json fitted;
  if (args.method == "temperature") {
    std::vector<ScoredExample> fit_set;
    for (std::size_t i = 0; i < n_fit; ++i) {
      const PredictionRecord& rec = records[order[i]];
      fit_set.push_back({rec.prediction.final_scores, rec.label});
    }
    const TemperatureModel model = fit_temperature(fit_set);
    fitted["tau"] = model.tau;
    auto predicted_prob = [](const PredictionRecord& rec, double tau) {
      const auto probs = score_softmax_probs(rec.prediction.final_scores, tau);
      for (const auto& [cls, p] : probs) {
        if (cls == rec.prediction.class_id) return p;
      }
      throw std::runtime_error("prediction record lacks a score for its own predicted class");
    };
    for (std::size_t i = n_fit; i < order.size(); ++i) {
      const PredictionRecord& rec = records[order[i]];
      conf.push_back(predicted_prob(rec, model.tau));
      base_conf.push_back(predicted_prob(rec, 1.0));
      correct.push_back(rec.prediction.class_id == rec.label);
    }
  } else {
    std::vector<CallCountOutcome> fit_set;
    for (std::size_t i = 0; i < n_fit; ++i) {
      const PredictionRecord& rec = records[order[i]];
      fit_set.push_back({rec.prediction.model_calls, rec.prediction.class_id == rec.label});
    }
    const PlattModel model = fit_platt(fit_set);
    fitted["tau"] = model.tau;
    fitted["beta"] = model.beta;
    const PlattModel baseline{2000.0, 0.0};
    for (std::size_t i = n_fit; i < order.size(); ++i) {
      const PredictionRecord& rec = records[order[i]];
      conf.push_back(platt_confidence(model, rec.prediction.model_calls));
      base_conf.push_back(platt_confidence(baseline, rec.prediction.model_calls));
      correct.push_back(rec.prediction.class_id == rec.label);
    }
  }

  const ReliabilityReport calibrated = reliability_and_ece(conf, correct);
  const ReliabilityReport baseline = reliability_and_ece(base_conf, correct);
  write_reliability(calibrated, args.out + "/calibrated_reliability.json");
  write_reliability(baseline, args.out + "/baseline_reliability.json");

  json summary;
  summary["command"] = "calibrate";
  summary["method"] = args.method;
  summary["predictions"] = args.predictions_path;
  summary["split"] = args.split;
  summary["seed"] = args.seed;
  summary["n_fit"] = n_fit;
  summary["n_eval"] = order.size() - n_fit;
  summary["model"] = fitted;
  summary["ece_calibrated"] = calibrated.ece;
  summary["ece_baseline"] = baseline.ece;
  write_json_file(summary, args.out + "/calibration.json");

  const double ms = timer.elapsed_ms();
  write_timing(args.out, "calibrate", ms);
  std::cout << args.method << " calibration: ECE " << format_double(calibrated.ece)
            << " (baseline " << format_double(baseline.ece) << ") over " << order.size() - n_fit
            << " held-out examples (" << format_double(ms) << " ms)\n";
}

// ---------------------------------------------------------------------------
// binding-gen

struct BindingArgs {
  std::string task;
  int n = 1000;
  std::uint64_t seed = 0;
  bool evaluate = false;
  int rounds = 64;
  double scorer_std = 0.25;
  std::string out;
};

std::string task_file_stem(const BindingTask& task) {
  const std::string a = kAttributeNames[static_cast<std::size_t>(task.a)];
  const std::string b = kAttributeNames[static_cast<std::size_t>(task.b)];
  switch (task.kind) {
    case BindingTaskKind::Control:
      return a;
    case BindingTaskKind::Binding:
      return a + "_given_" + b;
    case BindingTaskKind::Pair:
      return a + "_and_" + b;
  }
  return "task";
}

void run_binding(const BindingArgs& args) {
  Timer timer;
  const BindingTask task = BindingTask::parse(args.task);
  const std::vector<BinaryExample> examples = generate_binding_examples(task, args.n, args.seed);
  const std::string examples_path = args.out + "/binding_" + task_file_stem(task) + ".jsonl";
  write_binding_examples(examples, examples_path);

  json config;
  config["command"] = "binding-gen";
  config["task"] = task.name();
  config["n"] = args.n;
  config["seed"] = args.seed;
  config["evaluate"] = args.evaluate;
  if (args.evaluate) {
    config["rounds"] = args.rounds;
    config["scorer_std"] = args.scorer_std;
  }
  write_json_file(config, args.out + "/config.json");

  if (args.evaluate) {
    const ClaimSceneScorer scorer(args.scorer_std, args.rounds);
    const BinaryEvaluation eval = evaluate_binary(examples, scorer, args.seed);
    write_binding_evaluation(eval, task.name(), args.seed, args.out + "/binding_eval.json");
    std::cout << "task " << task.name() << ": accuracy " << format_double(eval.accuracy)
              << " over " << eval.n << " examples, two-sided binomial p "
              << format_double(eval.p_value) << "\n";
  }

  const double ms = timer.elapsed_ms();
  write_timing(args.out, "binding-gen", ms);
  std::cout << "wrote " << examples.size() << " examples to " << examples_path << " ("
            << format_double(ms) << " ms)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot classification with a conditional denoiser: scores classes by "
               "re-weighted denoising error, with shared-noise rounds, successive-elimination "
               "pruning, calibration, and a synthetic attribute-binding harness."};
  app.require_subcommand(1);
  const std::string out_default = default_out_dir();

  GenWorldArgs gen_args;
  gen_args.out = out_default;
  CLI::App* gen = app.add_subcommand("gen-world", "Generate a Gaussian world and dataset");
  gen->add_option("--classes", gen_args.classes, "Number of classes")->required();
  gen->add_option("--dim", gen_args.dim, "Feature dimension")->required();
  gen->add_option("--std", gen_args.std_dev, "Within-class standard deviation")->capture_default_str();
  gen->add_option("--separation", gen_args.separation,
                  "Minimum pairwise mean distance, in units of --std")
      ->required();
  gen->add_option("--n", gen_args.n, "Dataset size")->required();
  gen->add_option("--seed", gen_args.seed, "Root seed")->capture_default_str();
  gen->add_option("--out", gen_args.out, "Output directory")->capture_default_str();

  ClassifyArgs cls_args;
  cls_args.out = out_default;
  CLI::App* cls = app.add_subcommand("classify", "Classify a dataset against a world");
  cls->add_option("--world", cls_args.world_path, "World JSON file")->required();
  cls->add_option("--dataset", cls_args.dataset_path, "Dataset CSV file")->required();
  cls->add_option("--labels", cls_args.labels_path, "Optional class-name file, one per line");
  cls->add_option("--prompt-template", cls_args.prompt_template,
                  "Prompt template; {} is replaced by the class name")->capture_default_str();
  cls->add_option("--weighting", cls_args.weighting,
                  "simple | vdm | heuristic:<lambda> | learned:<path>")->capture_default_str();
  cls->add_option("--min-scores", cls_args.min_scores, "Rounds before pruning can start")->capture_default_str();
  cls->add_option("--max-scores", cls_args.max_scores, "Round budget per example")->capture_default_str();
  cls->add_option("--cutoff-pval", cls_args.cutoff_pval, "Elimination p-value threshold")->capture_default_str();
  cls->add_option("--noise-mode", cls_args.noise_mode, "shared | independent")->capture_default_str()
      ->check(CLI::IsMember({"shared", "independent"}));
  cls->add_option("--pruning", cls_args.pruning, "on | off")->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));
  cls->add_option("--ttest-side", cls_args.ttest_side, "one | two")->capture_default_str()
      ->check(CLI::IsMember({"one", "two"}));
  cls->add_option("--seed", cls_args.seed, "Root seed")->capture_default_str();
  cls->add_option("--workers", cls_args.workers, "Worker threads")->capture_default_str();
  cls->add_option("--max-examples", cls_args.max_examples, "Cap on examples per run")->capture_default_str();
  cls->add_flag("--scores-csv", cls_args.scores_csv, "Also dump per-round scores.csv");
  cls->add_option("--out", cls_args.out, "Output directory")->capture_default_str();

  EfficiencyArgs eff_args;
  eff_args.out = out_default;
  CLI::App* eff = app.add_subcommand("efficiency",
                                     "Accuracy-versus-calls table for all three strategies");
  eff->add_option("--world", eff_args.world_path, "World JSON file")->required();
  eff->add_option("--dataset", eff_args.dataset_path, "Dataset CSV file")->required();
  eff->add_option("--weighting", eff_args.weighting,
                  "simple | vdm | heuristic:<lambda> | learned:<path>")->capture_default_str();
  eff->add_option("--min-scores", eff_args.min_scores, "Rounds before pruning can start")->capture_default_str();
  eff->add_option("--cutoff-pval", eff_args.cutoff_pval, "Elimination p-value threshold")->capture_default_str();
  eff->add_option("--budgets", eff_args.budgets, "Scores-per-class budgets")->capture_default_str()
      ->delimiter(',');
  eff->add_option("--seed", eff_args.seed, "Root seed")->capture_default_str();
  eff->add_option("--workers", eff_args.workers, "Worker threads")->capture_default_str();
  eff->add_option("--max-examples", eff_args.max_examples, "Cap on examples per run")->capture_default_str();
  eff->add_option("--out", eff_args.out, "Output directory")->capture_default_str();

  CalibrateArgs cal_args;
  cal_args.out = out_default;
  CLI::App* cal = app.add_subcommand("calibrate", "Fit and report confidence calibration");
  cal->add_option("--predictions", cal_args.predictions_path,
                  "predictions.jsonl from a classify run")
      ->required();
  cal->add_option("--method", cal_args.method, "temperature | platt")->capture_default_str()
      ->check(CLI::IsMember({"temperature", "platt"}));
  cal->add_option("--split", cal_args.split, "Held-out fraction used to fit the calibrator")->capture_default_str();
  cal->add_option("--seed", cal_args.seed, "Root seed for the split shuffle")->capture_default_str();
  cal->add_option("--out", cal_args.out, "Output directory")->capture_default_str();

  BindingArgs bind_args;
  bind_args.out = out_default;
  CLI::App* bind = app.add_subcommand("binding-gen",
                                      "Generate (and optionally evaluate) binding tasks");
  bind->add_option("--task", bind_args.task,
                   "Attr (control) | Target|Given (binding) | A,B (pair)")
      ->required();
  bind->add_option("--n", bind_args.n, "Number of examples")->capture_default_str();
  bind->add_option("--seed", bind_args.seed, "Root seed")->capture_default_str();
  bind->add_flag("--evaluate", bind_args.evaluate, "Score the examples with the engine");
  bind->add_option("--rounds", bind_args.rounds, "Scoring rounds per example")->capture_default_str();
  bind->add_option("--scorer-std", bind_args.scorer_std, "Scorer prior standard deviation")->capture_default_str();
  bind->add_option("--out", bind_args.out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  std::string out_dir = ".";
  try {
    if (gen->parsed()) out_dir = gen_args.out;
    if (cls->parsed()) out_dir = cls_args.out;
    if (eff->parsed()) out_dir = eff_args.out;
    if (cal->parsed()) out_dir = cal_args.out;
    if (bind->parsed()) out_dir = bind_args.out;
    fs::create_directories(out_dir);
    fs::remove(out_dir + "/FAILED");

    if (gen->parsed()) run_gen_world(gen_args);
    if (cls->parsed()) run_classify(cls_args);
    if (eff->parsed()) run_efficiency(eff_args);
    if (cal->parsed()) run_calibrate(cal_args);
    if (bind->parsed()) run_binding(bind_args);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream marker(out_dir + "/FAILED", std::ios::trunc);
    marker << e.what() << "\n";
    return 1;
  }
}
