#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "diffcls/binding.hpp"
#include "diffcls/io.hpp"
#include "diffcls/rng.hpp"

using namespace diffcls;
namespace fs = std::filesystem;

namespace {

std::string scratch_path(const std::string& name) {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "diffcls_io_tests";
    fs::create_directories(p);
    return p;
  }();
  return (dir / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("format_double renders integers plainly and round-trips everything") {
  CHECK(format_double(20.0) == "20");
  CHECK(format_double(-3.0) == "-3");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.98) == "0.98");
  for (const double v : {0.1, 1.0 / 3.0, 6.283185307179588, 1e-300, -2.5e17,
                         0.0301973834223185, 123456.789}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("world files round-trip exactly") {
  GaussianWorld world;
  world.means = {{1.0, -0.25}, {1.0 / 3.0, 2.75}, {-5.5, 0.125}};
  world.std_dev = 0.75;
  world.seed = 42;
  const std::string path = scratch_path("world.json");
  write_world(world, path);
  const GaussianWorld back = read_world(path);
  CHECK(back.means == world.means);
  CHECK(back.std_dev == world.std_dev);
  CHECK(back.seed == world.seed);
}

TEST_CASE("world files are validated on read") {
  const std::string path = scratch_path("bad_world.json");
  write_text(path, R"({"dim": 3, "means": [[1.0, 2.0]], "std": 1.0, "seed": 0})");
  CHECK_THROWS_AS(read_world(path), std::runtime_error);
  write_text(path, "not json at all");
  CHECK_THROWS_AS(read_world(path), std::runtime_error);
  CHECK_THROWS_AS(read_world(scratch_path("missing_world.json")), std::runtime_error);
}

TEST_CASE("dataset csv round-trips with exact doubles and a fixed header") {
  LabeledDataset ds;
  ds.examples = {{0.1, -2.0 / 3.0}, {1e-7, 42.0}};
  ds.labels = {1, 0};
  const std::string path = scratch_path("dataset.csv");
  write_dataset(ds, path);
  const std::string text = read_text(path);
  CHECK(text.rfind("label,f0,f1\n", 0) == 0);
  const LabeledDataset back = read_dataset(path);
  CHECK(back.examples == ds.examples);
  CHECK(back.labels == ds.labels);
}

TEST_CASE("dataset csv rejects malformed input with the offending line") {
  const std::string path = scratch_path("bad_dataset.csv");
  const auto error_message = [](auto&& fn) -> std::string {
    try {
      fn();
    } catch (const std::runtime_error& e) {
      return e.what();
    }
    return "";
  };
  SUBCASE("wrong header") {
    write_text(path, "label,x0,x1\n0,1.0,2.0\n");
    const std::string msg = error_message([&] { read_dataset(path); });
    CHECK(msg.find("header") != std::string::npos);
  }
  SUBCASE("ragged row") {
    write_text(path, "label,f0,f1\n0,1.0,2.0\n1,3.0\n");
    const std::string msg = error_message([&] { read_dataset(path); });
    CHECK(msg.find(":3:") != std::string::npos);  // path:row of the bad line
  }
  SUBCASE("non-numeric field") {
    write_text(path, "label,f0\n0,banana\n");
    CHECK_THROWS_AS(read_dataset(path), std::runtime_error);
  }
  SUBCASE("header only is an empty dataset") {
    write_text(path, "label,f0,f1\n");
    const LabeledDataset back = read_dataset(path);
    CHECK(back.size() == 0);
  }
}

TEST_CASE("weights files are exactly twenty lines") {
  std::array<double, kNumBuckets> v{};
  for (int i = 0; i < kNumBuckets; ++i) v[static_cast<std::size_t>(i)] = 0.05 * i - 0.3;
  const std::string path = scratch_path("weights.txt");
  write_weights(v, path);
  CHECK(read_weights(path) == v);
  write_text(path, "1.0\n2.0\n");
  CHECK_THROWS_AS(read_weights(path), std::runtime_error);
}

TEST_CASE("prediction records round-trip through jsonl") {
  Prediction p0;
  p0.class_id = 2;
  p0.rounds_used = 25;
  p0.model_calls = 61;
  p0.final_scores = {{2, 0.125}, {0, 0.5}};
  p0.eliminations = {{1, 20}};
  Prediction p1;
  p1.class_id = 0;
  p1.rounds_used = 40;
  p1.model_calls = 120;
  p1.final_scores = {{0, 1.0 / 3.0}, {1, 0.75}, {2, 0.8}};
  const std::string path = scratch_path("predictions.jsonl");
  write_predictions({p0, p1}, {2, -1}, path);

  const auto records = read_predictions(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].example == 0);
  CHECK(records[0].label == 2);
  CHECK(records[0].prediction.class_id == 2);
  CHECK(records[0].prediction.rounds_used == 25);
  CHECK(records[0].prediction.model_calls == 61);
  REQUIRE(records[0].prediction.eliminations.size() == 1);
  CHECK(records[0].prediction.eliminations[0].class_id == 1);
  CHECK(records[0].prediction.eliminations[0].round == 20);
  // Scores come back sorted by class id.
  REQUIRE(records[0].prediction.final_scores.size() == 2);
  CHECK(records[0].prediction.final_scores[0] == std::pair<int, double>{0, 0.5});
  CHECK(records[0].prediction.final_scores[1] == std::pair<int, double>{2, 0.125});
  CHECK(records[1].label == -1);  // null label
  CHECK(records[1].prediction.final_scores.size() == 3);

  // Each line is a self-contained JSON object with the documented keys.
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  const auto j = nlohmann::json::parse(line);
  for (const char* key :
       {"example", "label", "class_id", "n_rounds", "model_calls", "eliminated", "scores"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["scores"].contains("2"));
}

TEST_CASE("write_predictions validates matching label counts") {
  CHECK_THROWS_AS(write_predictions({Prediction{}}, {1, 2}, scratch_path("bad_pred.jsonl")),
                  std::invalid_argument);
}

TEST_CASE("scores csv lists weighted rounds per episode") {
  ScoresLedger a;
  Round r0;
  r0.t = 0.25;
  r0.w = 0.5;
  r0.errors = {{0, 1.5}, {1, 2.5}};
  Round r1;
  r1.t = 0.75;
  r1.w = 0.125;
  r1.errors = {{0, 3.0}};
  a.rounds = {r0, r1};
  ScoresLedger b;
  Round s0;
  s0.t = 0.5;
  s0.w = 1.0;
  s0.errors = {{1, 4.0}};
  b.rounds = {s0};
  const std::string path = scratch_path("scores.csv");
  write_scores_csv({a, b}, path);
  CHECK(read_text(path) ==
        "round,t,w_t,class_id,sq_error\n"
        "0,0.25,0.5,0,1.5\n"
        "0,0.25,0.5,1,2.5\n"
        "1,0.75,0.125,0,3\n"
        "0,0.5,1,1,4\n");
}

TEST_CASE("efficiency csv is stable text") {
  std::vector<EfficiencyRow> rows{{"naive", 10, 0.875, 30.0}, {"pruned", 10, 0.9, 21.5}};
  const std::string path = scratch_path("efficiency.csv");
  write_efficiency_csv(rows, path);
  CHECK(read_text(path) ==
        "strategy,budget,accuracy,mean_calls\n"
        "naive,10,0.875,30\n"
        "pruned,10,0.9,21.5\n");
}

TEST_CASE("reliability report serializes bins and ece") {
  ReliabilityReport rep;
  rep.bins = {{0.5, 0.6, 0.55, 1.0, 1}, {0.8, 0.9, 0.85, 0.5, 2}};
  rep.ece = 0.3;
  const std::string path = scratch_path("reliability.json");
  write_reliability(rep, path);
  const auto j = nlohmann::json::parse(read_text(path));
  CHECK(j["ece"].get<double>() == 0.3);
  REQUIRE(j["bins"].size() == 2);
  CHECK(j["bins"][0]["lo"].get<double>() == 0.5);
  CHECK(j["bins"][1]["count"].get<int>() == 2);
  CHECK(j["bins"][1]["accuracy"].get<double>() == 0.5);
  CHECK(j["bins"][1]["mean_conf"].get<double>() == 0.85);
}

TEST_CASE("binding examples round-trip including reconstructed claims") {
  for (const std::string& name : {"Color", "Color|Shape", "Shape,Size", "Position,Color"}) {
    CAPTURE(name);
    const auto examples = generate_binding_examples(BindingTask::parse(name), 40, 23);
    const std::string path = scratch_path("binding.jsonl");
    write_binding_examples(examples, path);
    const auto back = read_binding_examples(path);
    REQUIRE(back.size() == examples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].positive == examples[i].positive);
      CHECK(back[i].negative == examples[i].negative);
      CHECK(back[i].task.name() == examples[i].task.name());
      for (int o = 0; o < 2; ++o) {
        const ObjectSpec& orig = examples[i].scene.objects[static_cast<std::size_t>(o)];
        const ObjectSpec& copy = back[i].scene.objects[static_cast<std::size_t>(o)];
        CHECK(orig.shape == copy.shape);
        CHECK(orig.color == copy.color);
        CHECK(orig.size == copy.size);
        CHECK(orig.position == copy.position);
      }
      REQUIRE(back[i].positive_claims.size() == examples[i].positive_claims.size());
      for (std::size_t c = 0; c < back[i].positive_claims.size(); ++c) {
        CHECK(back[i].positive_claims[c].shape == examples[i].positive_claims[c].shape);
        CHECK(back[i].positive_claims[c].color == examples[i].positive_claims[c].color);
        CHECK(back[i].positive_claims[c].size == examples[i].positive_claims[c].size);
        CHECK(back[i].positive_claims[c].position == examples[i].positive_claims[c].position);
      }
      REQUIRE(back[i].negative_claims.size() == examples[i].negative_claims.size());
      for (std::size_t c = 0; c < back[i].negative_claims.size(); ++c) {
        CHECK(back[i].negative_claims[c].shape == examples[i].negative_claims[c].shape);
        CHECK(back[i].negative_claims[c].color == examples[i].negative_claims[c].color);
        CHECK(back[i].negative_claims[c].size == examples[i].negative_claims[c].size);
        CHECK(back[i].negative_claims[c].position == examples[i].negative_claims[c].position);
      }
    }
  }
}

TEST_CASE("binding example lines carry exactly the documented keys") {
  const auto examples = generate_binding_examples(BindingTask::parse("Color|Shape"), 1, 2);
  const std::string path = scratch_path("binding_one.jsonl");
  write_binding_examples(examples, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  const auto j = nlohmann::json::parse(line);
  CHECK(j.size() == 4);
  CHECK(j.contains("scene"));
  CHECK(j.contains("positive"));
  CHECK(j.contains("negative"));
  CHECK(j.contains("task"));
  REQUIRE(j["scene"]["objects"].size() == 2);
  for (const char* key : {"shape", "color", "size", "position"}) {
    CHECK(j["scene"]["objects"][0].contains(key));
  }
}

TEST_CASE("binding evaluation summary fields") {
  BinaryEvaluation eval;
  eval.n = 100;
  eval.wins = 93;
  eval.accuracy = 0.93;
  eval.p_value = 1.25e-18;
  eval.ci_lo = 0.86;
  eval.ci_hi = 0.96;
  const std::string path = scratch_path("binding_eval.json");
  write_binding_evaluation(eval, "Color|Shape", 7, path);
  const auto j = nlohmann::json::parse(read_text(path));
  CHECK(j["task"] == "Color|Shape");
  CHECK(j["seed"] == 7);
  CHECK(j["n"] == 100);
  CHECK(j["wins"] == 93);
  CHECK(j["accuracy"].get<double>() == 0.93);
  CHECK(j["p_value"].get<double>() == 1.25e-18);
  REQUIRE(j["ci95"].size() == 2);
  CHECK(j["ci95"][0].get<double>() == 0.86);
  CHECK(j["ci95"][1].get<double>() == 0.96);
}
