#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cmsa/tensor.hpp"

namespace cmsa {

/// Flat little-endian container for named tensors:
///   magic "CMSA0001", u32 tensor count, then per tensor
///   u32 name length, name bytes, u32 rank, u64 extents, f64 payload.
/// Round-trips are bit-exact.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::filesystem::path& path);

}  // namespace cmsa
