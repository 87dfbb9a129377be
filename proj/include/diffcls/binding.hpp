#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "diffcls/classifier.hpp"
#include "diffcls/rng.hpp"

namespace diffcls {

enum class Shape { Cube, Sphere, Cylinder };
enum class Color { Blue, Cyan, Brown, Gray, Green, Purple, Red, Yellow };
enum class Size { Small, Large };
enum class Position { Left, Right };

enum class Attribute { Shape, Color, Size, Position };

inline constexpr std::array<const char*, 3> kShapeNames{"cube", "sphere", "cylinder"};
inline constexpr std::array<const char*, 8> kColorNames{"blue",  "cyan", "brown", "gray",
                                                        "green", "purple", "red", "yellow"};
inline constexpr std::array<const char*, 2> kSizeNames{"small", "large"};
inline constexpr std::array<const char*, 2> kPositionNames{"left", "right"};
inline constexpr std::array<const char*, 4> kAttributeNames{"Shape", "Color", "Size", "Position"};

std::string to_string(Shape s);
std::string to_string(Color c);
std::string to_string(Size s);
std::string to_string(Position p);

int attribute_cardinality(Attribute attr);             // vocabulary size
std::string attribute_value_name(Attribute attr, int value_index);
Attribute parse_attribute(const std::string& text);    // case-insensitive

struct ObjectSpec {
  Shape shape = Shape::Cube;
  Color color = Color::Blue;
  Size size = Size::Small;
  Position position = Position::Left;
};

int attribute_value_index(const ObjectSpec& obj, Attribute attr);
void set_attribute_value_index(ObjectSpec& obj, Attribute attr, int value_index);

// Two objects, the first always on the left. Shapes and colors always differ;
// sizes differ exactly when the task involves size.
struct Scene {
  std::array<ObjectSpec, 2> objects;

  const ObjectSpec& left() const { return objects[0]; }
  const ObjectSpec& right() const { return objects[1]; }
  void validate(bool sizes_must_differ) const;  // throws std::invalid_argument
};

class AttributeSet {
 public:
  AttributeSet() = default;
  AttributeSet(std::initializer_list<Attribute> attrs);

  void insert(Attribute a);
  bool contains(Attribute a) const;
  bool empty() const { return bits_ == 0; }

 private:
  unsigned bits_ = 0;
};

enum class BindingTaskKind { Control, Binding, Pair };

// Control("Shape"): recognize one attribute. Binding("Color|Shape"): name the
// target attribute (color) of an object identified by the given attribute
// (shape); the negative uses the other object's target value. Pair
// ("Shape,Size"): describe both objects; the negative swaps the first-named
// attribute between them.
struct BindingTask {
  BindingTaskKind kind = BindingTaskKind::Control;
  Attribute a = Attribute::Shape;  // control attribute, binding target, first pair attribute
  Attribute b = Attribute::Shape;  // binding given / second pair attribute

  static BindingTask parse(const std::string& text);  // "Shape" | "Color|Shape" | "Shape,Size"
  std::string name() const;
  AttributeSet involves() const;
};

// One object claim extracted from a prompt: the attribute values the prompt
// asserts, restricted to the task's attributes.
struct ObjectClaim {
  std::optional<Shape> shape;
  std::optional<Color> color;
  std::optional<Size> size;
  std::optional<Position> position;
};

struct BinaryExample {
  Scene scene;
  BindingTask task;
  std::string positive;
  std::string negative;
  std::vector<ObjectClaim> positive_claims;  // one claim, or two for pair tasks
  std::vector<ObjectClaim> negative_claims;
};

// Renders one object through the fixed template: "On the {position} is a " or
// "A ", then "{size} ", then "{color} ", then "{shape}." or "object.",
// keeping only the attributes in `include`.
std::string describe(const ObjectSpec& obj, const AttributeSet& include);

// " and "-join for pair prompts: the first description loses its trailing
// period, the second is lowercased.
std::string join_pair(const std::string& first, const std::string& second);

// Scene draw for a task. Shapes and colors are always distinct; sizes are
// forced distinct when the task involves size, independent otherwise.
Scene generate_scene(const BindingTask& task, Rng& rng);

// Builds the positive/negative prompt pair for a scene. Returns nothing when
// the task admits no valid negative (control tasks whose remaining vocabulary
// is exhausted by the scene); callers resample.
std::optional<BinaryExample> make_binary_example(const Scene& scene, const BindingTask& task,
                                                 Rng& rng);

// Draws scenes until n examples exist. Throws std::runtime_error if the task
// keeps producing no valid negative (e.g. control over position, where both
// vocabulary values are always in the scene).
std::vector<BinaryExample> generate_binding_examples(const BindingTask& task, int n,
                                                     std::uint64_t seed);

// True iff `prompt` is a truthful description of the scene under the task's
// template (matches one object's description, or the canonical pair prompt).
bool prompt_truthful(const Scene& scene, const BindingTask& task, const std::string& prompt);

struct BinaryEvaluation {
  int n = 0;
  int wins = 0;          // examples where the positive prompt scored best
  double accuracy = 0.0;
  double p_value = 1.0;  // exact two-sided binomial test against 0.5
  double ci_lo = 0.0;    // Wilson 95% interval for the accuracy
  double ci_hi = 0.0;
};

// A scorer maps (example, per-example seed) to the winning side: 0 for the
// positive prompt, 1 for the negative.
using BinaryScorer = std::function<int(const BinaryExample&, std::uint64_t)>;

BinaryEvaluation evaluate_binary(const std::vector<BinaryExample>& examples,
                                 const BinaryScorer& scorer, std::uint64_t seed);

// Engine-backed scorer: the scene embeds into per-slot one-hot features (left
// and right blocks of shape/color/size indicators); each prompt's claims
// define a Gaussian-mixture prior over that space (one component per way of
// assigning claims to slots, unclaimed attributes at their uniform-prior
// mean). Scoring runs classify_shared over the two mixture-posterior
// denoisers.
class ClaimSceneScorer {
 public:
  explicit ClaimSceneScorer(double std_dev = 0.25, int n_rounds = 64,
                            WeightingSpec weighting = WeightingSpec::heuristic(),
                            NoiseSchedule schedule = NoiseSchedule::cosine());

  int operator()(const BinaryExample& example, std::uint64_t seed) const;

  static Vec embed_scene(const Scene& scene);
  static std::vector<Vec> claim_components(const std::vector<ObjectClaim>& claims);

 private:
  double std_dev_;
  int n_rounds_;
  WeightingSpec weighting_;
  NoiseSchedule schedule_;
};

}  // namespace diffcls
