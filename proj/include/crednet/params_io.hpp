#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crednet/tensor.hpp"

namespace crednet::ad {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// Flat binary parameter snapshot: magic "CNP1", u32 version, u64 count,
// then per record u32 name length, name bytes, u32 rank, u64 dims, f64
// payload. All integers and floats little-endian.
void save_params(const std::string& path, const NamedParams& params);
NamedParams load_params(const std::string& path);

} // namespace crednet::ad
