#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cmsa/attention.hpp"
#include "cmsa/fusion.hpp"

namespace cmsa {

/// Whether the expression is kept word-by-word or collapsed to one mean
/// embedding row before the multimodal features are built.
enum class SentenceMode { word, sentence };

SentenceMode sentence_mode_from_string(const std::string& s);
std::string to_string(SentenceMode mode);

/// Resolved run settings. Loaded from a key=value file ('#' comments),
/// overridable per key from the command line; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 7;
  std::size_t image_h = 64;  // key "H"
  std::size_t image_w = 64;  // key "W"
  std::size_t d_k = 64;
  std::size_t fused_dim = 32;  // key "D"
  std::size_t c1 = 16, c2 = 24, c3 = 32;
  std::size_t embed_dim = 16;  // key "C_l"
  std::size_t max_words = 20;
  double lr = 2.5e-4;
  double poly_power = 0.9;
  std::size_t iters = 2000;  // key "T"
  double weight_decay = 5e-4;
  std::size_t batch_size = 4;
  AttentionMode attention = AttentionMode::word_pixel;
  FusionMode fusion = FusionMode::gated;
  SentenceMode sentence = SentenceMode::word;
  bool softmax_transposed = false;
  bool scale_scores = false;
  double threshold = 0.5;
  std::size_t n_objects_min = 2;
  std::size_t n_objects_max = 4;
  std::size_t threads = 1;

  /// Parse one key=value pair; ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  /// Layer key=value lines from `path` on top of the current values.
  void load_file(const std::filesystem::path& path);

  /// All keys in a stable order, one per line.
  std::string resolved() const;

  /// Cross-field checks (extents divisible by 4, positive sizes, ...).
  void validate() const;

  void write_resolved(const std::filesystem::path& path) const;
};

}  // namespace cmsa
