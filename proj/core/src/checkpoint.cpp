#include "cmsa/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cmsa/errors.hpp"

namespace cmsa {

namespace {

constexpr char kMagic[8] = {'C', 'M', 'S', 'A', '0', '0', '0', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(buf, bits);
}

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  std::string str(std::size_t len) {
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }
  const std::string& name() const { return name_; }

  void need(std::size_t n) {
    if (pos_ + n > data_.size()) throw ParseError(name_ + ": truncated checkpoint");
  }

 private:
  std::uint64_t bytes(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }

  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put_u32(buf, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    put_u32(buf, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) put_u64(buf, e);
    const double* d = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) put_f64(buf, d[i]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(data), path.string());

  if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw ParseError(path.string() + ": bad checkpoint magic");
  }
  const std::uint32_t count = r.u32();
  std::vector<std::pair<std::string, Tensor>> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw ParseError(path.string() + ": implausible tensor rank");
    Shape shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<std::size_t>(r.u64());
      numel *= shape[d];
    }
    r.need(numel * 8);
    std::vector<double> payload(numel);
    for (std::size_t j = 0; j < numel; ++j) payload[j] = r.f64();
    tensors.emplace_back(std::move(name), Tensor::from_data(std::move(shape), std::move(payload)));
  }
  if (!r.done()) throw ParseError(path.string() + ": trailing bytes after last tensor");
  return tensors;
}

}  // namespace cmsa
