#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmsa/tensor.hpp"

namespace cmsa {

enum class ObjShape { square, circle, triangle };
enum class ObjColor { red, green, blue, yellow };

struct SceneObject {
  ObjShape shape;
  ObjColor color;
  int cx = 0, cy = 0;  // centre, full-resolution pixels
  int radius = 0;      // half-extent
};

struct Scene {
  std::size_t height = 0, width = 0;
  std::vector<SceneObject> objects;
  int target = -1;
};

/// Closed vocabulary: colors, shapes, then the relation words
/// (left/right/top/bottom/above/below pick a positional extreme of the
/// matching set, small/large a size extreme).
namespace vocab {

constexpr int kRed = 0, kGreen = 1, kBlue = 2, kYellow = 3;
constexpr int kSquare = 4, kCircle = 5, kTriangle = 6;
constexpr int kLeft = 7, kRight = 8, kTop = 9, kBottom = 10;
constexpr int kAbove = 11, kBelow = 12, kSmall = 13, kLarge = 14;

std::size_t size();
const std::string& word(int id);              // VocabError when out of range
int id(const std::string& word);              // VocabError when unknown
bool is_color(int id);
bool is_shape(int id);
bool is_relation(int id);
std::string decode(const std::vector<int>& tokens);

}  // namespace vocab

struct Sample {
  int id = -1;
  std::vector<int> tokens;
  Tensor image;  // [3 x H x W], values k/255
  Tensor mask;   // [H/4 x W/4], entries 0/1
  Scene scene;   // generator metadata; absent after a load from disk
};

struct GenConfig {
  std::uint64_t seed = 7;
  std::size_t count = 1;
  std::size_t height = 64, width = 64;
  std::size_t n_objects_min = 2, n_objects_max = 4;
  /// Fraction of scenes forced to contain a same-shape same-color twin of
  /// the target, so the expression must fall back to a relation word.
  double twin_fraction = 0.5;
};

/// Deterministic in (seed, index, config): sample i depends only on those,
/// so partitioned generation yields identical corpora. Every emitted
/// expression matches exactly one object of its scene. Raises GenError if
/// a scene cannot be built within the retry budget.
std::vector<Sample> generate(const GenConfig& config);

/// The denotation of an expression in a scene: indices of matching objects.
/// A relation word narrows the attribute/shape matches down to the extreme
/// object; ties return every tied object (an ambiguous expression).
std::vector<int> match_expression(const Scene& scene, const std::vector<int>& tokens);

bool object_covers(const SceneObject& object, int x, int y);

/// Layout on disk: img_XXXXX.ppm (P6), msk_XXXXX.pgm (P5, values 0/255 at
/// feature resolution) and index.jsonl with fields
/// id, tokens, image_path, mask_path, H, W. Round-trips are bit-exact.
void save_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples);
std::vector<Sample> load_dataset(const std::filesystem::path& dir);

}  // namespace cmsa
