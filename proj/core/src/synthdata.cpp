#include "cmsa/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "cmsa/errors.hpp"
#include "cmsa/pnm.hpp"

namespace cmsa {

namespace vocab {

namespace {
const std::array<std::string, 15> kWords = {"red",  "green",  "blue",   "yellow", "square",
                                            "circle", "triangle", "left", "right",  "top",
                                            "bottom", "above",  "below",  "small",  "large"};
}

std::size_t size() { return kWords.size(); }

const std::string& word(int id) {
  if (id < 0 || static_cast<std::size_t>(id) >= kWords.size()) {
    throw VocabError("vocab: token id " + std::to_string(id) + " out of range");
  }
  return kWords[static_cast<std::size_t>(id)];
}

int id(const std::string& w) {
  for (std::size_t i = 0; i < kWords.size(); ++i) {
    if (kWords[i] == w) return static_cast<int>(i);
  }
  throw VocabError("vocab: unknown word '" + w + "'");
}

bool is_color(int tok) { return tok >= kRed && tok <= kYellow; }
bool is_shape(int tok) { return tok >= kSquare && tok <= kTriangle; }
bool is_relation(int tok) { return tok >= kLeft && tok <= kLarge; }

std::string decode(const std::vector<int>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += word(tokens[i]);
  }
  return out;
}

}  // namespace vocab

bool object_covers(const SceneObject& o, int x, int y) {
  const int dx = x - o.cx;
  const int dy = y - o.cy;
  switch (o.shape) {
    case ObjShape::square:
      return std::abs(dx) <= o.radius && std::abs(dy) <= o.radius;
    case ObjShape::circle:
      return dx * dx + dy * dy <= o.radius * o.radius;
    case ObjShape::triangle:
      // Upward isosceles: apex (cx, cy-r), base corners (cx±r, cy+r).
      if (dy < -o.radius || dy > o.radius) return false;
      return 2 * std::abs(dx) <= dy + o.radius;
  }
  return false;
}

std::vector<int> match_expression(const Scene& scene, const std::vector<int>& tokens) {
  std::vector<int> colors;
  int shape = -1;
  std::vector<int> relations;
  for (int tok : tokens) {
    if (vocab::is_color(tok)) {
      colors.push_back(tok);
    } else if (vocab::is_shape(tok)) {
      if (shape != -1) return {};  // two shape words never denote
      shape = tok;
    } else if (vocab::is_relation(tok)) {
      relations.push_back(tok);
    } else {
      throw VocabError("match_expression: token id " + std::to_string(tok) + " out of range");
    }
  }
  if (shape == -1) return {};

  std::vector<int> matched;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const SceneObject& o = scene.objects[i];
    if (static_cast<int>(o.shape) != shape - vocab::kSquare) continue;
    bool ok = true;
    for (int c : colors) {
      if (static_cast<int>(o.color) != c - vocab::kRed) ok = false;
    }
    if (ok) matched.push_back(static_cast<int>(i));
  }

  for (int rel : relations) {
    if (matched.empty()) break;
    auto key = [&](int idx) -> int {
      const SceneObject& o = scene.objects[static_cast<std::size_t>(idx)];
      switch (rel) {
        case vocab::kLeft: return o.cx;
        case vocab::kRight: return -o.cx;
        case vocab::kTop:
        case vocab::kAbove: return o.cy;
        case vocab::kBottom:
        case vocab::kBelow: return -o.cy;
        case vocab::kSmall: return o.radius;
        case vocab::kLarge: return -o.radius;
        default: throw VocabError("match_expression: unknown relation token");
      }
    };
    int best = key(matched[0]);
    for (int idx : matched) best = std::min(best, key(idx));
    std::vector<int> narrowed;
    for (int idx : matched) {
      if (key(idx) == best) narrowed.push_back(idx);
    }
    matched = std::move(narrowed);
  }
  return matched;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr Rgb kBackground{40, 40, 40};

Rgb color_rgb(ObjColor c) {
  switch (c) {
    case ObjColor::red: return {200, 40, 40};
    case ObjColor::green: return {40, 180, 60};
    case ObjColor::blue: return {45, 80, 200};
    case ObjColor::yellow: return {220, 200, 50};
  }
  return kBackground;
}

PnmImage render_scene(const Scene& scene) {
  PnmImage img;
  img.width = scene.width;
  img.height = scene.height;
  img.channels = 3;
  img.pixels.assign(img.width * img.height * 3, 0);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      Rgb px = kBackground;
      for (const SceneObject& o : scene.objects) {
        if (object_covers(o, static_cast<int>(x), static_cast<int>(y))) {
          px = color_rgb(o.color);
          break;  // objects never overlap
        }
      }
      std::uint8_t* out = img.pixels.data() + (y * img.width + x) * 3;
      out[0] = px.r;
      out[1] = px.g;
      out[2] = px.b;
    }
  }
  return img;
}

Tensor image_tensor(const PnmImage& img) {
  std::vector<double> data(3 * img.height * img.width);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) {
        data[(c * img.height + y) * img.width + x] =
            static_cast<double>(img.pixels[(y * img.width + x) * 3 + c]) / 255.0;
      }
    }
  }
  return Tensor::from_data(Shape{3, img.height, img.width}, std::move(data));
}

// Full-resolution rasterisation of the target, max-pooled 4x4.
Tensor target_mask(const Scene& scene) {
  const SceneObject& t = scene.objects[static_cast<std::size_t>(scene.target)];
  const std::size_t fh = scene.height / 4;
  const std::size_t fw = scene.width / 4;
  std::vector<double> mask(fh * fw, 0.0);
  for (std::size_t y = 0; y < scene.height; ++y) {
    for (std::size_t x = 0; x < scene.width; ++x) {
      if (object_covers(t, static_cast<int>(x), static_cast<int>(y))) {
        mask[(y / 4) * fw + (x / 4)] = 1.0;
      }
    }
  }
  return Tensor::from_data(Shape{fh, fw}, std::move(mask));
}

bool objects_collide(const SceneObject& a, const SceneObject& b) {
  // Conservative bounding-circle test with a small margin.
  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  const double reach = std::hypot(static_cast<double>(a.radius), static_cast<double>(a.radius)) +
                       std::hypot(static_cast<double>(b.radius), static_cast<double>(b.radius)) + 2.0;
  return dx * dx + dy * dy < reach * reach;
}

// Candidate expressions for the target, cheapest unambiguous one wins.
std::vector<int> pick_expression(const Scene& scene, bool prefer_relational,
                                 std::mt19937_64& rng) {
  const SceneObject& t = scene.objects[static_cast<std::size_t>(scene.target)];
  const int shape_tok = vocab::kSquare + static_cast<int>(t.shape);
  const int color_tok = vocab::kRed + static_cast<int>(t.color);

  std::vector<int> positional{vocab::kLeft, vocab::kRight, vocab::kTop,
                              vocab::kBottom, vocab::kAbove, vocab::kBelow};
  std::shuffle(positional.begin(), positional.end(), rng);

  std::vector<std::vector<int>> simple{{shape_tok}, {color_tok, shape_tok}};
  std::vector<std::vector<int>> relational;
  for (int rel : positional) {
    relational.push_back({shape_tok, rel});
    relational.push_back({color_tok, shape_tok, rel});
  }
  // Size words only when the target's size is visually distinct within the
  // attribute-matching set.
  for (int rel : {vocab::kSmall, vocab::kLarge}) {
    bool distinct = true;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      if (static_cast<int>(i) == scene.target) continue;
      const SceneObject& o = scene.objects[i];
      if (o.shape == t.shape && std::abs(o.radius - t.radius) < 3) distinct = false;
    }
    if (distinct) {
      relational.push_back({shape_tok, rel});
      relational.push_back({color_tok, shape_tok, rel});
    }
  }

  std::vector<std::vector<int>> candidates;
  if (prefer_relational) {
    candidates = relational;
    candidates.insert(candidates.end(), simple.begin(), simple.end());
  } else {
    candidates = simple;
    candidates.insert(candidates.end(), relational.begin(), relational.end());
  }

  for (const auto& tokens : candidates) {
    const std::vector<int> matched = match_expression(scene, tokens);
    if (matched.size() == 1 && matched[0] == scene.target) return tokens;
  }
  return {};
}

Sample make_sample(const GenConfig& config, std::size_t index) {
  std::mt19937_64 rng(splitmix64(config.seed ^ splitmix64(index + 1)));
  const int h = static_cast<int>(config.height);
  const int w = static_cast<int>(config.width);
  const double scale = static_cast<double>(std::min(h, w)) / 64.0;
  const int r_lo = std::max(3, static_cast<int>(std::lround(6.0 * scale)));
  const int r_hi = std::max(r_lo + 1, static_cast<int>(std::lround(13.0 * scale)));

  std::uniform_int_distribution<int> shape_dist(0, 2);
  std::uniform_int_distribution<int> color_dist(0, 3);
  std::uniform_int_distribution<int> radius_dist(r_lo, r_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 0; attempt < 64; ++attempt) {
    Scene scene;
    scene.height = config.height;
    scene.width = config.width;

    std::uniform_int_distribution<std::size_t> count_dist(config.n_objects_min,
                                                          config.n_objects_max);
    const std::size_t n_obj = count_dist(rng);
    const bool twin = n_obj >= 2 && unit(rng) < config.twin_fraction;

    bool placed_all = true;
    for (std::size_t i = 0; i < n_obj; ++i) {
      SceneObject o;
      if (twin && i == 1) {
        o.shape = scene.objects[0].shape;
        o.color = scene.objects[0].color;
      } else {
        o.shape = static_cast<ObjShape>(shape_dist(rng));
        o.color = static_cast<ObjColor>(color_dist(rng));
      }
      bool placed = false;
      for (int tries = 0; tries < 100; ++tries) {
        o.radius = radius_dist(rng);
        if (o.radius * 2 + 4 >= std::min(h, w)) o.radius = std::min(h, w) / 2 - 3;
        std::uniform_int_distribution<int> cx_dist(o.radius + 1, w - o.radius - 2);
        std::uniform_int_distribution<int> cy_dist(o.radius + 1, h - o.radius - 2);
        o.cx = cx_dist(rng);
        o.cy = cy_dist(rng);
        bool clear = true;
        for (const SceneObject& other : scene.objects) {
          if (objects_collide(o, other)) clear = false;
        }
        if (clear) {
          placed = true;
          break;
        }
      }
      if (!placed) {
        placed_all = false;
        break;
      }
      scene.objects.push_back(o);
    }
    if (!placed_all) continue;

    std::vector<std::size_t> target_order(n_obj);
    for (std::size_t i = 0; i < n_obj; ++i) target_order[i] = i;
    if (twin) {
      target_order = {static_cast<std::size_t>(unit(rng) < 0.5 ? 0 : 1)};
    } else {
      std::shuffle(target_order.begin(), target_order.end(), rng);
    }

    for (std::size_t cand : target_order) {
      scene.target = static_cast<int>(cand);
      const std::vector<int> tokens = pick_expression(scene, twin, rng);
      if (tokens.empty()) continue;

      Sample sample;
      sample.id = static_cast<int>(index);
      sample.tokens = tokens;
      sample.scene = scene;
      sample.image = image_tensor(render_scene(scene));
      sample.mask = target_mask(scene);
      return sample;
    }
  }
  throw GenError("generate: could not build sample " + std::to_string(index) +
                 " within the retry budget (extents too small for the object range?)");
}

}  // namespace

std::vector<Sample> generate(const GenConfig& config) {
  if (config.count < 1) throw UsageError("generate: count must be >= 1");
  if (config.height % 4 != 0 || config.width % 4 != 0 || config.height == 0 || config.width == 0) {
    throw DimError("generate: extents must be positive multiples of 4");
  }
  if (config.n_objects_min < 1 || config.n_objects_min > config.n_objects_max) {
    throw UsageError("generate: need 1 <= n_objects_min <= n_objects_max");
  }
  std::vector<Sample> samples;
  samples.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) samples.push_back(make_sample(config, i));
  return samples;
}

namespace {

std::string numbered(const char* prefix, int id, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%05d%s", prefix, id, ext);
  return buf;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.jsonl", std::ios::trunc);
  if (!index) throw IoError("cannot write " + (dir / "index.jsonl").string());

  for (const Sample& s : samples) {
    const std::size_t h = s.image.shape()[1];
    const std::size_t w = s.image.shape()[2];
    const std::string image_name = numbered("img_", s.id, ".ppm");
    const std::string mask_name = numbered("msk_", s.id, ".pgm");

    PnmImage img;
    img.width = w;
    img.height = h;
    img.channels = 3;
    img.pixels.resize(h * w * 3);
    const double* px = s.image.data();
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          img.pixels[(y * w + x) * 3 + c] =
              static_cast<std::uint8_t>(std::lround(px[(c * h + y) * w + x] * 255.0));
        }
      }
    }
    write_ppm(dir / image_name, img);

    PnmImage msk;
    msk.width = s.mask.shape()[1];
    msk.height = s.mask.shape()[0];
    msk.channels = 1;
    msk.pixels.resize(msk.width * msk.height);
    const double* pm = s.mask.data();
    for (std::size_t i = 0; i < msk.pixels.size(); ++i) {
      msk.pixels[i] = pm[i] != 0.0 ? 255 : 0;
    }
    write_pgm(dir / mask_name, msk);

    nlohmann::json line;
    line["id"] = s.id;
    line["tokens"] = s.tokens;
    line["image_path"] = image_name;
    line["mask_path"] = mask_name;
    line["H"] = h;
    line["W"] = w;
    index << line.dump() << "\n";
  }
  if (!index) throw IoError("short write to " + (dir / "index.jsonl").string());
}

std::vector<Sample> load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path index_path = dir / "index.jsonl";
  std::ifstream index(index_path);
  if (!index) throw IoError("cannot open " + index_path.string());

  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json entry;
    try {
      entry = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(index_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Sample s;
    try {
      s.id = entry.at("id").get<int>();
      s.tokens = entry.at("tokens").get<std::vector<int>>();
      const auto image_name = entry.at("image_path").get<std::string>();
      const auto mask_name = entry.at("mask_path").get<std::string>();
      const auto h = entry.at("H").get<std::size_t>();
      const auto w = entry.at("W").get<std::size_t>();

      for (int tok : s.tokens) {
        if (tok < 0 || static_cast<std::size_t>(tok) >= vocab::size()) {
          throw VocabError(index_path.string() + ":" + std::to_string(line_no) +
                           ": unknown token id " + std::to_string(tok));
        }
      }

      const PnmImage img = read_ppm(dir / image_name);
      if (img.height != h || img.width != w) {
        throw ParseError((dir / image_name).string() + ": extents disagree with the index entry");
      }
      std::vector<double> data(3 * h * w);
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            data[(c * h + y) * w + x] =
                static_cast<double>(img.pixels[(y * w + x) * 3 + c]) / 255.0;
          }
        }
      }
      s.image = Tensor::from_data(Shape{3, h, w}, std::move(data));

      const PnmImage msk = read_pgm(dir / mask_name);
      std::vector<double> mask(msk.width * msk.height);
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (msk.pixels[i] != 0 && msk.pixels[i] != 255) {
          throw ParseError((dir / mask_name).string() + ": mask values must be 0 or 255");
        }
        mask[i] = msk.pixels[i] == 255 ? 1.0 : 0.0;
      }
      s.mask = Tensor::from_data(Shape{msk.height, msk.width}, std::move(mask));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(index_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace cmsa
