#pragma once

// Versioned checkpoint container. Layout (all integers little-endian):
//   magic "PSRLCKP1" | u32 version | u32 hash_len | config-hash chars
//   u32 param_count
//   per param: u32 name_len | name | u32 ndim (=2) | u64 rows | u64 cols
//              | rows*cols float32, row-major
// Payloads are float32 regardless of the in-memory scalar type.

#include <cstdint>
#include <string>
#include <vector>

#include "psrl/ad.hpp"

namespace psrl {

void save_checkpoint(const std::string& path, const std::string& config_hash,
                     const std::vector<const ad::ParamT<float>*>& params);

// Loads into the given parameters by name; throws on magic/version/shape
// mismatch or missing entries. Returns the stored config hash.
std::string load_checkpoint(const std::string& path,
                            const std::vector<ad::ParamT<float>*>& params);

}  // namespace psrl
