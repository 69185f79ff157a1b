#include "cmsa/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmsa/errors.hpp"

namespace cmsa {

SentenceMode sentence_mode_from_string(const std::string& s) {
  if (s == "word") return SentenceMode::word;
  if (s == "sentence") return SentenceMode::sentence;
  throw UsageError("unknown sentence mode '" + s + "'");
}

std::string to_string(SentenceMode mode) {
  return mode == SentenceMode::word ? "word" : "sentence";
}

namespace {

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs a non-negative integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: key '" + key + "' needs true/false, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") {
    seed = static_cast<std::uint64_t>(parse_size(key, value));
  } else if (key == "H") {
    image_h = parse_size(key, value);
  } else if (key == "W") {
    image_w = parse_size(key, value);
  } else if (key == "d_k") {
    d_k = parse_size(key, value);
  } else if (key == "D") {
    fused_dim = parse_size(key, value);
  } else if (key == "c1") {
    c1 = parse_size(key, value);
  } else if (key == "c2") {
    c2 = parse_size(key, value);
  } else if (key == "c3") {
    c3 = parse_size(key, value);
  } else if (key == "C_l") {
    embed_dim = parse_size(key, value);
  } else if (key == "max_words") {
    max_words = parse_size(key, value);
  } else if (key == "lr") {
    lr = parse_double(key, value);
  } else if (key == "poly_power") {
    poly_power = parse_double(key, value);
  } else if (key == "T") {
    iters = parse_size(key, value);
  } else if (key == "weight_decay") {
    weight_decay = parse_double(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_size(key, value);
  } else if (key == "attention") {
    try {
      attention = attention_mode_from_string(value);
    } catch (const UsageError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (key == "fusion") {
    try {
      fusion = fusion_mode_from_string(value);
    } catch (const UsageError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (key == "sentence") {
    try {
      sentence = sentence_mode_from_string(value);
    } catch (const UsageError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (key == "softmax_transposed") {
    softmax_transposed = parse_bool(key, value);
  } else if (key == "scale_scores") {
    scale_scores = parse_bool(key, value);
  } else if (key == "threshold") {
    threshold = parse_double(key, value);
  } else if (key == "n_objects_min") {
    n_objects_min = parse_size(key, value);
  } else if (key == "n_objects_max") {
    n_objects_max = parse_size(key, value);
  } else if (key == "threads") {
    threads = parse_size(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path.string() + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (" + path.string() + ":" +
                        std::to_string(line_no) + ")");
    }
  }
}

std::string RunConfig::resolved() const {
  std::ostringstream os;
  os << "C_l=" << embed_dim << "\n";
  os << "D=" << fused_dim << "\n";
  os << "H=" << image_h << "\n";
  os << "T=" << iters << "\n";
  os << "W=" << image_w << "\n";
  os << "attention=" << to_string(attention) << "\n";
  os << "batch_size=" << batch_size << "\n";
  os << "c1=" << c1 << "\n";
  os << "c2=" << c2 << "\n";
  os << "c3=" << c3 << "\n";
  os << "d_k=" << d_k << "\n";
  os << "fusion=" << to_string(fusion) << "\n";
  os << "lr=" << format_double(lr) << "\n";
  os << "max_words=" << max_words << "\n";
  os << "n_objects_max=" << n_objects_max << "\n";
  os << "n_objects_min=" << n_objects_min << "\n";
  os << "poly_power=" << format_double(poly_power) << "\n";
  os << "scale_scores=" << (scale_scores ? "true" : "false") << "\n";
  os << "seed=" << seed << "\n";
  os << "sentence=" << to_string(sentence) << "\n";
  os << "softmax_transposed=" << (softmax_transposed ? "true" : "false") << "\n";
  os << "threads=" << threads << "\n";
  os << "threshold=" << format_double(threshold) << "\n";
  os << "weight_decay=" << format_double(weight_decay) << "\n";
  return os.str();
}

void RunConfig::validate() const {
  if (image_h % 4 != 0 || image_w % 4 != 0 || image_h == 0 || image_w == 0) {
    throw ConfigError("config: H and W must be positive multiples of 4");
  }
  if (d_k == 0 || fused_dim == 0 || embed_dim == 0) {
    throw ConfigError("config: d_k, D and C_l must be positive");
  }
  if (c1 == 0 || c1 > c2 || c2 > c3) {
    throw ConfigError("config: need 0 < c1 <= c2 <= c3");
  }
  if (max_words == 0) throw ConfigError("config: max_words must be positive");
  if (iters == 0) throw ConfigError("config: T must be positive");
  if (batch_size == 0) throw ConfigError("config: batch_size must be positive");
  if (threads == 0) throw ConfigError("config: threads must be positive");
  if (n_objects_min < 1 || n_objects_min > n_objects_max) {
    throw ConfigError("config: need 1 <= n_objects_min <= n_objects_max");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("config: threshold must lie in (0,1)");
  }
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << resolved();
}

}  // namespace cmsa
