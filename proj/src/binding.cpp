#include "diffcls/binding.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace diffcls {

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string to_string(Shape s) { return kShapeNames[static_cast<std::size_t>(s)]; }
std::string to_string(Color c) { return kColorNames[static_cast<std::size_t>(c)]; }
std::string to_string(Size s) { return kSizeNames[static_cast<std::size_t>(s)]; }
std::string to_string(Position p) { return kPositionNames[static_cast<std::size_t>(p)]; }

int attribute_cardinality(Attribute attr) {
  switch (attr) {
    case Attribute::Shape:
      return static_cast<int>(kShapeNames.size());
    case Attribute::Color:
      return static_cast<int>(kColorNames.size());
    case Attribute::Size:
      return static_cast<int>(kSizeNames.size());
    case Attribute::Position:
      return static_cast<int>(kPositionNames.size());
  }
  throw std::invalid_argument("attribute_cardinality: unknown attribute");
}

std::string attribute_value_name(Attribute attr, int value_index) {
  if (value_index < 0 || value_index >= attribute_cardinality(attr)) {
    throw std::invalid_argument("attribute_value_name: value index out of range");
  }
  const auto i = static_cast<std::size_t>(value_index);
  switch (attr) {
    case Attribute::Shape:
      return kShapeNames[i];
    case Attribute::Color:
      return kColorNames[i];
    case Attribute::Size:
      return kSizeNames[i];
    case Attribute::Position:
      return kPositionNames[i];
  }
  throw std::invalid_argument("attribute_value_name: unknown attribute");
}

Attribute parse_attribute(const std::string& text) {
  const std::string lower = lowercase(text);
  for (std::size_t i = 0; i < kAttributeNames.size(); ++i) {
    if (lower == lowercase(kAttributeNames[i])) return static_cast<Attribute>(i);
  }
  throw std::invalid_argument("unknown attribute \"" + text +
                              "\"; expected one of Shape, Color, Size, Position");
}

int attribute_value_index(const ObjectSpec& obj, Attribute attr) {
  switch (attr) {
    case Attribute::Shape:
      return static_cast<int>(obj.shape);
    case Attribute::Color:
      return static_cast<int>(obj.color);
    case Attribute::Size:
      return static_cast<int>(obj.size);
    case Attribute::Position:
      return static_cast<int>(obj.position);
  }
  throw std::invalid_argument("attribute_value_index: unknown attribute");
}

void set_attribute_value_index(ObjectSpec& obj, Attribute attr, int value_index) {
  if (value_index < 0 || value_index >= attribute_cardinality(attr)) {
    throw std::invalid_argument("set_attribute_value_index: value index out of range");
  }
  switch (attr) {
    case Attribute::Shape:
      obj.shape = static_cast<Shape>(value_index);
      return;
    case Attribute::Color:
      obj.color = static_cast<Color>(value_index);
      return;
    case Attribute::Size:
      obj.size = static_cast<Size>(value_index);
      return;
    case Attribute::Position:
      obj.position = static_cast<Position>(value_index);
      return;
  }
  throw std::invalid_argument("set_attribute_value_index: unknown attribute");
}

void Scene::validate(bool sizes_must_differ) const {
  if (objects[0].position != Position::Left || objects[1].position != Position::Right) {
    throw std::invalid_argument("Scene: objects must be stored left then right");
  }
  if (objects[0].shape == objects[1].shape) {
    throw std::invalid_argument("Scene: the two objects must have different shapes");
  }
  if (objects[0].color == objects[1].color) {
    throw std::invalid_argument("Scene: the two objects must have different colors");
  }
  if (sizes_must_differ && objects[0].size == objects[1].size) {
    throw std::invalid_argument("Scene: size tasks require objects of different sizes");
  }
}

AttributeSet::AttributeSet(std::initializer_list<Attribute> attrs) {
  for (Attribute a : attrs) insert(a);
}

void AttributeSet::insert(Attribute a) { bits_ |= 1u << static_cast<unsigned>(a); }

bool AttributeSet::contains(Attribute a) const {
  return (bits_ & (1u << static_cast<unsigned>(a))) != 0;
}

BindingTask BindingTask::parse(const std::string& text) {
  const auto trim = [](const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    const auto last = s.find_last_not_of(" \t");
    return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
  };
  const std::string trimmed = trim(text);
  if (trimmed.empty()) {
    throw std::invalid_argument(
        "empty task; expected \"Attr\" (control), \"Target|Given\" (binding), or \"A,B\" "
        "(pair) over Shape, Color, Size, Position");
  }
  BindingTask task;
  std::size_t sep = trimmed.find('|');
  if (sep != std::string::npos) {
    task.kind = BindingTaskKind::Binding;
  } else {
    sep = trimmed.find(',');
    task.kind = sep != std::string::npos ? BindingTaskKind::Pair : BindingTaskKind::Control;
  }
  if (sep == std::string::npos) {
    task.a = parse_attribute(trimmed);
    task.b = task.a;
    return task;
  }
  task.a = parse_attribute(trim(trimmed.substr(0, sep)));
  task.b = parse_attribute(trim(trimmed.substr(sep + 1)));
  if (task.a == task.b) {
    throw std::invalid_argument("task \"" + trimmed + "\": the two attributes must differ");
  }
  return task;
}

std::string BindingTask::name() const {
  const std::string a_name = kAttributeNames[static_cast<std::size_t>(a)];
  const std::string b_name = kAttributeNames[static_cast<std::size_t>(b)];
  switch (kind) {
    case BindingTaskKind::Control:
      return a_name;
    case BindingTaskKind::Binding:
      return a_name + "|" + b_name;
    case BindingTaskKind::Pair:
      return a_name + "," + b_name;
  }
  throw std::invalid_argument("BindingTask::name: unknown kind");
}

AttributeSet BindingTask::involves() const {
  if (kind == BindingTaskKind::Control) return AttributeSet{a};
  return AttributeSet{a, b};
}

std::string describe(const ObjectSpec& obj, const AttributeSet& include) {
  if (include.empty()) {
    throw std::invalid_argument("describe: the attribute set must be nonempty");
  }
  std::string out = include.contains(Attribute::Position)
                        ? "On the " + to_string(obj.position) + " is a "
                        : "A ";
  if (include.contains(Attribute::Size)) out += to_string(obj.size) + " ";
  if (include.contains(Attribute::Color)) out += to_string(obj.color) + " ";
  out += include.contains(Attribute::Shape) ? to_string(obj.shape) + "." : "object.";
  return out;
}

std::string join_pair(const std::string& first, const std::string& second) {
  std::string head = first;
  if (!head.empty() && head.back() == '.') head.pop_back();
  return head + " and " + lowercase(second);
}

Scene generate_scene(const BindingTask& task, Rng& rng) {
  Scene scene;
  // Distinct draws: the second index skips the first.
  const auto shape0 = static_cast<int>(rng.below(kShapeNames.size()));
  auto shape1 = static_cast<int>(rng.below(kShapeNames.size() - 1));
  if (shape1 >= shape0) shape1 += 1;
  const auto color0 = static_cast<int>(rng.below(kColorNames.size()));
  auto color1 = static_cast<int>(rng.below(kColorNames.size() - 1));
  if (color1 >= color0) color1 += 1;
  scene.objects[0].shape = static_cast<Shape>(shape0);
  scene.objects[1].shape = static_cast<Shape>(shape1);
  scene.objects[0].color = static_cast<Color>(color0);
  scene.objects[1].color = static_cast<Color>(color1);
  if (task.involves().contains(Attribute::Size)) {
    const auto size0 = static_cast<int>(rng.below(2));
    scene.objects[0].size = static_cast<Size>(size0);
    scene.objects[1].size = static_cast<Size>(1 - size0);
  } else {
    scene.objects[0].size = static_cast<Size>(rng.below(2));
    scene.objects[1].size = static_cast<Size>(rng.below(2));
  }
  scene.objects[0].position = Position::Left;
  scene.objects[1].position = Position::Right;
  return scene;
}

namespace {

ObjectClaim claim_from(const ObjectSpec& obj, const AttributeSet& include) {
  ObjectClaim claim;
  if (include.contains(Attribute::Shape)) claim.shape = obj.shape;
  if (include.contains(Attribute::Color)) claim.color = obj.color;
  if (include.contains(Attribute::Size)) claim.size = obj.size;
  if (include.contains(Attribute::Position)) claim.position = obj.position;
  return claim;
}

// "Leftmost position/shape/color/size first": the deciding attribute is the
// highest-priority one the task includes; the conjunct holding the left
// object's value of it leads.
Attribute deciding_attribute(const AttributeSet& include) {
  for (Attribute attr :
       {Attribute::Position, Attribute::Shape, Attribute::Color, Attribute::Size}) {
    if (include.contains(attr)) return attr;
  }
  throw std::invalid_argument("deciding_attribute: empty attribute set");
}

std::array<ObjectSpec, 2> order_conjuncts(const Scene& scene, const AttributeSet& include,
                                          std::array<ObjectSpec, 2> conjuncts) {
  const Attribute decide = deciding_attribute(include);
  const int leftmost_value = attribute_value_index(scene.left(), decide);
  if (attribute_value_index(conjuncts[0], decide) != leftmost_value &&
      attribute_value_index(conjuncts[1], decide) == leftmost_value) {
    std::swap(conjuncts[0], conjuncts[1]);
  }
  return conjuncts;
}

}  // namespace

std::optional<BinaryExample> make_binary_example(const Scene& scene, const BindingTask& task,
                                                 Rng& rng) {
  const AttributeSet include = task.involves();
  scene.validate(include.contains(Attribute::Size));

  BinaryExample example;
  example.scene = scene;
  example.task = task;

  if (task.kind == BindingTaskKind::Pair) {
    const std::array<ObjectSpec, 2> pos =
        order_conjuncts(scene, include, {scene.objects[0], scene.objects[1]});
    std::array<ObjectSpec, 2> swapped = {scene.objects[0], scene.objects[1]};
    const int a0 = attribute_value_index(swapped[0], task.a);
    const int a1 = attribute_value_index(swapped[1], task.a);
    set_attribute_value_index(swapped[0], task.a, a1);
    set_attribute_value_index(swapped[1], task.a, a0);
    const std::array<ObjectSpec, 2> neg = order_conjuncts(scene, include, swapped);

    example.positive = join_pair(describe(pos[0], include), describe(pos[1], include));
    example.negative = join_pair(describe(neg[0], include), describe(neg[1], include));
    example.positive_claims = {claim_from(pos[0], include), claim_from(pos[1], include)};
    example.negative_claims = {claim_from(neg[0], include), claim_from(neg[1], include)};
    return example;
  }

  const ObjectSpec& subject = scene.objects[rng.below(2)];
  example.positive = describe(subject, include);
  example.positive_claims = {claim_from(subject, include)};

  ObjectSpec distractor = subject;
  if (task.kind == BindingTaskKind::Control) {
    // The negative value must appear on neither object.
    std::vector<int> unused;
    for (int v = 0; v < attribute_cardinality(task.a); ++v) {
      if (v != attribute_value_index(scene.objects[0], task.a) &&
          v != attribute_value_index(scene.objects[1], task.a)) {
        unused.push_back(v);
      }
    }
    if (unused.empty()) return std::nullopt;
    set_attribute_value_index(distractor, task.a,
                              unused[rng.below(unused.size())]);
  } else {
    // Binding: the target attribute takes the other object's value.
    const ObjectSpec& other = &subject == &scene.objects[0] ? scene.objects[1] : scene.objects[0];
    set_attribute_value_index(distractor, task.a, attribute_value_index(other, task.a));
  }
  example.negative = describe(distractor, include);
  example.negative_claims = {claim_from(distractor, include)};
  return example;
}

std::vector<BinaryExample> generate_binding_examples(const BindingTask& task, int n,
                                                     std::uint64_t seed) {
  if (n < 0) {
    throw std::invalid_argument("generate_binding_examples: n must be non-negative");
  }
  Rng rng(substream_seed(seed, "binding", 0));
  std::vector<BinaryExample> examples;
  examples.reserve(static_cast<std::size_t>(n));
  int consecutive_failures = 0;
  while (static_cast<int>(examples.size()) < n) {
    const Scene scene = generate_scene(task, rng);
    if (auto example = make_binary_example(scene, task, rng)) {
      examples.push_back(std::move(*example));
      consecutive_failures = 0;
    } else if (++consecutive_failures > 10000) {
      throw std::runtime_error(
          "task \"" + task.name() +
          "\" admits no valid negative: every vocabulary value appears in the scene "
          "(control tasks need an attribute value the scene leaves unused)");
    }
  }
  return examples;
}

bool prompt_truthful(const Scene& scene, const BindingTask& task, const std::string& prompt) {
  const AttributeSet include = task.involves();
  if (task.kind == BindingTaskKind::Pair) {
    const std::array<ObjectSpec, 2> ordered =
        order_conjuncts(scene, include, {scene.objects[0], scene.objects[1]});
    return prompt == join_pair(describe(ordered[0], include), describe(ordered[1], include));
  }
  return prompt == describe(scene.objects[0], include) ||
         prompt == describe(scene.objects[1], include);
}

BinaryEvaluation evaluate_binary(const std::vector<BinaryExample>& examples,
                                 const BinaryScorer& scorer, std::uint64_t seed) {
  if (examples.empty()) {
    throw std::invalid_argument("evaluate_binary: at least one example is required");
  }
  BinaryEvaluation eval;
  eval.n = static_cast<int>(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int winner = scorer(examples[i], substream_seed(seed, "episode", i));
    if (winner != 0 && winner != 1) {
      throw std::invalid_argument("evaluate_binary: scorer must return 0 or 1");
    }
    if (winner == 0) eval.wins += 1;
  }
  eval.accuracy = static_cast<double>(eval.wins) / static_cast<double>(eval.n);
  eval.p_value = binomial_two_sided_pvalue(eval.wins, eval.n, 0.5);
  const auto [lo, hi] = wilson_interval(eval.wins, eval.n);
  eval.ci_lo = lo;
  eval.ci_hi = hi;
  return eval;
}

namespace {

// Feature layout: [left slot | right slot], each slot shape(3) color(8)
// size(2). Position is carried by the slot itself.
constexpr int kSlotDims = 3 + 8 + 2;

void fill_slot(Vec& v, int slot, const ObjectClaim* claim) {
  const int base = slot * kSlotDims;
  auto put = [&](int offset, int card, int index_or_uniform) {
    for (int i = 0; i < card; ++i) {
      v[static_cast<std::size_t>(base + offset + i)] =
          index_or_uniform < 0 ? 1.0 / card : (i == index_or_uniform ? 1.0 : 0.0);
    }
  };
  put(0, 3, claim && claim->shape ? static_cast<int>(*claim->shape) : -1);
  put(3, 8, claim && claim->color ? static_cast<int>(*claim->color) : -1);
  put(11, 2, claim && claim->size ? static_cast<int>(*claim->size) : -1);
}

}  // namespace

Vec ClaimSceneScorer::embed_scene(const Scene& scene) {
  Vec v(2 * kSlotDims, 0.0);
  for (const ObjectSpec& obj : scene.objects) {
    ObjectClaim full;
    full.shape = obj.shape;
    full.color = obj.color;
    full.size = obj.size;
    fill_slot(v, obj.position == Position::Left ? 0 : 1, &full);
  }
  return v;
}

std::vector<Vec> ClaimSceneScorer::claim_components(const std::vector<ObjectClaim>& claims) {
  if (claims.empty() || claims.size() > 2) {
    throw std::invalid_argument("claim_components: expected one or two claims");
  }
  std::vector<Vec> components;
  auto component = [&](const ObjectClaim* left_claim, const ObjectClaim* right_claim) {
    Vec v(2 * kSlotDims, 0.0);
    fill_slot(v, 0, left_claim);
    fill_slot(v, 1, right_claim);
    return v;
  };
  if (claims.size() == 1) {
    const ObjectClaim& c = claims[0];
    if (c.position) {
      components.push_back(*c.position == Position::Left ? component(&c, nullptr)
                                                         : component(nullptr, &c));
    } else {
      // Unknown placement: one mixture component per slot hypothesis.
      components.push_back(component(&c, nullptr));
      components.push_back(component(nullptr, &c));
    }
    return components;
  }
  const ObjectClaim& c0 = claims[0];
  const ObjectClaim& c1 = claims[1];
  if (c0.position && c1.position) {
    const bool first_left = *c0.position == Position::Left;
    components.push_back(first_left ? component(&c0, &c1) : component(&c1, &c0));
  } else {
    components.push_back(component(&c0, &c1));
    components.push_back(component(&c1, &c0));
  }
  return components;
}

ClaimSceneScorer::ClaimSceneScorer(double std_dev, int n_rounds, WeightingSpec weighting,
                                   NoiseSchedule schedule)
    : std_dev_(std_dev),
      n_rounds_(n_rounds),
      weighting_(std::move(weighting)),
      schedule_(std::move(schedule)) {
  if (!(std_dev_ > 0.0) || n_rounds_ < 1) {
    throw std::invalid_argument("ClaimSceneScorer: need std_dev > 0 and n_rounds >= 1");
  }
}

int ClaimSceneScorer::operator()(const BinaryExample& example, std::uint64_t seed) const {
  const MixturePosteriorDenoiser model(
      {claim_components(example.positive_claims), claim_components(example.negative_claims)},
      std_dev_, schedule_);
  const Vec x0 = embed_scene(example.scene);
  std::vector<Condition> labels(2);
  labels[0].class_id = 0;
  labels[0].prompt = example.positive;
  labels[1].class_id = 1;
  labels[1].prompt = example.negative;
  ClassifierConfig config;
  config.min_scores = 1;
  config.max_scores = n_rounds_;
  config.weighting = weighting_;
  config.schedule = schedule_;
  config.noise_mode = NoiseMode::Shared;
  config.pruning = false;
  config.seed = seed;
  Rng rng(seed);
  return classify_shared(x0, labels, model, config, n_rounds_, rng).class_id;
}

}  // namespace diffcls
