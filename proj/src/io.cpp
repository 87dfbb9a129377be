#include "diffcls/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace diffcls {

namespace {

using nlohmann::json;

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open \"" + path + "\" for writing");
  }
  return out;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open \"" + path + "\" for reading");
  }
  return in;
}

json parse_json_file(const std::string& path) {
  std::ifstream in = open_for_read(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

double parse_double(const std::string& text, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw std::runtime_error(context + ": \"" + text + "\" is not a number");
  }
  return v;
}

long parse_long(const std::string& text, const std::string& context) {
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0') {
    throw std::runtime_error(context + ": \"" + text + "\" is not an integer");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

json scene_to_json(const Scene& scene) {
  json objects = json::array();
  for (const ObjectSpec& obj : scene.objects) {
    objects.push_back({{"shape", to_string(obj.shape)},
                       {"color", to_string(obj.color)},
                       {"size", to_string(obj.size)},
                       {"position", to_string(obj.position)}});
  }
  return json{{"objects", objects}};
}

template <std::size_t N>
int lookup_name(const std::array<const char*, N>& names, const std::string& value,
                const std::string& context) {
  for (std::size_t i = 0; i < N; ++i) {
    if (value == names[i]) return static_cast<int>(i);
  }
  throw std::runtime_error(context + ": unknown value \"" + value + "\"");
}

Scene scene_from_json(const json& j) {
  Scene scene;
  const auto& objects = j.at("objects");
  if (!objects.is_array() || objects.size() != 2) {
    throw std::runtime_error("scene: expected exactly two objects");
  }
  for (std::size_t i = 0; i < 2; ++i) {
    ObjectSpec& obj = scene.objects[i];
    obj.shape = static_cast<Shape>(
        lookup_name(kShapeNames, objects[i].at("shape").get<std::string>(), "shape"));
    obj.color = static_cast<Color>(
        lookup_name(kColorNames, objects[i].at("color").get<std::string>(), "color"));
    obj.size = static_cast<Size>(
        lookup_name(kSizeNames, objects[i].at("size").get<std::string>(), "size"));
    obj.position = static_cast<Position>(
        lookup_name(kPositionNames, objects[i].at("position").get<std::string>(), "position"));
  }
  return scene;
}

// Reads template-generated prompt text back into claims by matching tokens
// against the attribute vocabularies.
ObjectClaim claim_from_conjunct(const std::string& text, const AttributeSet& include,
                                const std::string& path) {
  ObjectClaim claim;
  std::istringstream ss(text);
  std::string word;
  while (ss >> word) {
    while (!word.empty() && (word.back() == '.' || word.back() == ',')) word.pop_back();
    for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (std::size_t i = 0; i < kShapeNames.size(); ++i) {
      if (include.contains(Attribute::Shape) && word == kShapeNames[i]) {
        claim.shape = static_cast<Shape>(i);
      }
    }
    for (std::size_t i = 0; i < kColorNames.size(); ++i) {
      if (include.contains(Attribute::Color) && word == kColorNames[i]) {
        claim.color = static_cast<Color>(i);
      }
    }
    for (std::size_t i = 0; i < kSizeNames.size(); ++i) {
      if (include.contains(Attribute::Size) && word == kSizeNames[i]) {
        claim.size = static_cast<Size>(i);
      }
    }
    for (std::size_t i = 0; i < kPositionNames.size(); ++i) {
      if (include.contains(Attribute::Position) && word == kPositionNames[i]) {
        claim.position = static_cast<Position>(i);
      }
    }
  }
  auto missing = [&](Attribute attr, bool present) {
    if (include.contains(attr) && !present) {
      throw std::runtime_error(path + ": prompt \"" + text + "\" lacks a " +
                               std::string(kAttributeNames[static_cast<std::size_t>(attr)]) +
                               " value");
    }
  };
  missing(Attribute::Shape, claim.shape.has_value());
  missing(Attribute::Color, claim.color.has_value());
  missing(Attribute::Size, claim.size.has_value());
  missing(Attribute::Position, claim.position.has_value());
  return claim;
}

std::vector<ObjectClaim> claims_from_prompt(const std::string& prompt, const BindingTask& task,
                                            const std::string& path) {
  const AttributeSet include = task.involves();
  if (task.kind != BindingTaskKind::Pair) {
    return {claim_from_conjunct(prompt, include, path)};
  }
  const std::size_t sep = prompt.find(" and ");
  if (sep == std::string::npos) {
    throw std::runtime_error(path + ": pair prompt \"" + prompt + "\" lacks an \" and \" join");
  }
  return {claim_from_conjunct(prompt.substr(0, sep), include, path),
          claim_from_conjunct(prompt.substr(sep + 5), include, path)};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  // Integral values print without an exponent; everything else uses the
  // shortest form that parses back to the same double.
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_world(const GaussianWorld& world, const std::string& path) {
  world.validate();
  json j;
  j["dim"] = world.dim();
  j["std"] = world.std_dev;
  j["means"] = world.means;
  j["seed"] = world.seed;
  std::ofstream out = open_for_write(path);
  out << j.dump(2) << "\n";
}

GaussianWorld read_world(const std::string& path) {
  const json j = parse_json_file(path);
  GaussianWorld world;
  try {
    world.std_dev = j.at("std").get<double>();
    world.seed = j.at("seed").get<std::uint64_t>();
    world.means = j.at("means").get<std::vector<Vec>>();
    const int dim = j.at("dim").get<int>();
    if (dim != world.dim()) {
      throw std::runtime_error("declared dim " + std::to_string(dim) +
                               " does not match the means");
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  world.validate();
  return world;
}

void write_dataset(const LabeledDataset& dataset, const std::string& path) {
  if (dataset.examples.size() != dataset.labels.size()) {
    throw std::invalid_argument("write_dataset: examples/labels size mismatch");
  }
  std::ofstream out = open_for_write(path);
  const std::size_t d = dataset.examples.empty() ? 0 : dataset.examples[0].size();
  out << "label";
  for (std::size_t i = 0; i < d; ++i) out << ",f" << i;
  out << "\n";
  for (std::size_t row = 0; row < dataset.examples.size(); ++row) {
    if (dataset.examples[row].size() != d) {
      throw std::invalid_argument("write_dataset: ragged feature rows");
    }
    out << dataset.labels[row];
    for (double v : dataset.examples[row]) out << "," << format_double(v);
    out << "\n";
  }
}

LabeledDataset read_dataset(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "label") {
    throw std::runtime_error(path + ": header must start with \"label\"");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] != "f" + std::to_string(i - 1)) {
      throw std::runtime_error(path + ": expected header column f" + std::to_string(i - 1) +
                               ", got \"" + header[i] + "\"");
    }
  }
  const std::size_t d = header.size() - 1;
  LabeledDataset dataset;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    row += 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != d + 1) {
      throw std::runtime_error(path + ":" + std::to_string(row) + ": expected " +
                               std::to_string(d + 1) + " fields, got " +
                               std::to_string(fields.size()));
    }
    const std::string context = path + ":" + std::to_string(row);
    dataset.labels.push_back(static_cast<int>(parse_long(fields[0], context)));
    Vec x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = parse_double(fields[i + 1], context);
    dataset.examples.push_back(std::move(x));
  }
  return dataset;
}

void write_weights(const std::array<double, kNumBuckets>& v, const std::string& path) {
  std::ofstream out = open_for_write(path);
  for (double w : v) out << format_double(w) << "\n";
}

std::array<double, kNumBuckets> read_weights(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::array<double, kNumBuckets> v{};
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (count >= kNumBuckets) {
      throw std::runtime_error(path + ": expected exactly " + std::to_string(kNumBuckets) +
                               " weight lines");
    }
    v[static_cast<std::size_t>(count)] = parse_double(line, path);
    count += 1;
  }
  if (count != kNumBuckets) {
    throw std::runtime_error(path + ": expected " + std::to_string(kNumBuckets) +
                             " weight lines, found " + std::to_string(count));
  }
  return v;
}

void write_predictions(const std::vector<Prediction>& predictions,
                       const std::vector<int>& labels, const std::string& path) {
  if (!labels.empty() && labels.size() != predictions.size()) {
    throw std::invalid_argument("write_predictions: labels must be empty or match predictions");
  }
  std::ofstream out = open_for_write(path);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Prediction& p = predictions[i];
    json j;
    j["example"] = i;
    if (labels.empty()) {
      j["label"] = nullptr;
    } else {
      j["label"] = labels[i];
    }
    j["class_id"] = p.class_id;
    j["n_rounds"] = p.rounds_used;
    j["model_calls"] = p.model_calls;
    json eliminated = json::array();
    for (const Elimination& e : p.eliminations) {
      eliminated.push_back({e.class_id, e.round});
    }
    j["eliminated"] = eliminated;
    json scores = json::object();
    for (const auto& [cls, score] : p.final_scores) {
      scores[std::to_string(cls)] = score;
    }
    j["scores"] = scores;
    out << j.dump() << "\n";
  }
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    row += 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      PredictionRecord rec;
      rec.example = j.at("example").get<int>();
      rec.label = j.at("label").is_null() ? -1 : j.at("label").get<int>();
      rec.prediction.class_id = j.at("class_id").get<int>();
      rec.prediction.rounds_used = j.at("n_rounds").get<int>();
      rec.prediction.model_calls = j.at("model_calls").get<std::int64_t>();
      for (const auto& e : j.at("eliminated")) {
        rec.prediction.eliminations.push_back(
            {e.at(0).get<int>(), e.at(1).get<int>()});
      }
      for (const auto& [key, value] : j.at("scores").items()) {
        rec.prediction.final_scores.emplace_back(static_cast<int>(parse_long(key, path)),
                                                 value.get<double>());
      }
      std::sort(rec.prediction.final_scores.begin(), rec.prediction.final_scores.end());
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(row) + ": " + e.what());
    }
  }
  return records;
}

void write_scores_csv(const std::vector<ScoresLedger>& ledgers, const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << "round,t,w_t,class_id,sq_error\n";
  for (const ScoresLedger& ledger : ledgers) {
    for (std::size_t r = 0; r < ledger.rounds.size(); ++r) {
      const Round& round = ledger.rounds[r];
      for (const auto& [cls, err] : round.errors) {
        out << r << "," << format_double(round.t) << "," << format_double(round.w) << "," << cls
            << "," << format_double(err) << "\n";
      }
    }
  }
}

void write_efficiency_csv(const std::vector<EfficiencyRow>& rows, const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << "strategy,budget,accuracy,mean_calls\n";
  for (const EfficiencyRow& row : rows) {
    out << row.strategy << "," << row.budget << "," << format_double(row.accuracy) << ","
        << format_double(row.mean_calls) << "\n";
  }
}

void write_reliability(const ReliabilityReport& report, const std::string& path) {
  json bins = json::array();
  for (const ReliabilityBin& bin : report.bins) {
    bins.push_back({{"lo", bin.lo},
                    {"hi", bin.hi},
                    {"mean_conf", bin.mean_conf},
                    {"accuracy", bin.accuracy},
                    {"count", bin.count}});
  }
  json j;
  j["bins"] = bins;
  j["ece"] = report.ece;
  std::ofstream out = open_for_write(path);
  out << j.dump(2) << "\n";
}

void write_binding_examples(const std::vector<BinaryExample>& examples,
                            const std::string& path) {
  std::ofstream out = open_for_write(path);
  for (const BinaryExample& ex : examples) {
    json j;
    j["scene"] = scene_to_json(ex.scene);
    j["positive"] = ex.positive;
    j["negative"] = ex.negative;
    j["task"] = ex.task.name();
    out << j.dump() << "\n";
  }
}

std::vector<BinaryExample> read_binding_examples(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::vector<BinaryExample> examples;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    row += 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      BinaryExample ex;
      ex.scene = scene_from_json(j.at("scene"));
      ex.task = BindingTask::parse(j.at("task").get<std::string>());
      ex.positive = j.at("positive").get<std::string>();
      ex.negative = j.at("negative").get<std::string>();
      ex.positive_claims = claims_from_prompt(ex.positive, ex.task, path);
      ex.negative_claims = claims_from_prompt(ex.negative, ex.task, path);
      examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(row) + ": " + e.what());
    }
  }
  return examples;
}

void write_binding_evaluation(const BinaryEvaluation& eval, const std::string& task_name,
                              std::uint64_t seed, const std::string& path) {
  json j;
  j["task"] = task_name;
  j["seed"] = seed;
  j["n"] = eval.n;
  j["wins"] = eval.wins;
  j["accuracy"] = eval.accuracy;
  j["p_value"] = eval.p_value;
  j["ci95"] = {eval.ci_lo, eval.ci_hi};
  std::ofstream out = open_for_write(path);
  out << j.dump(2) << "\n";
}

}  // namespace diffcls
