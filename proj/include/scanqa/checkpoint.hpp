#pragma once

#include <string>
#include <vector>

#include "scanqa/matrix.hpp"

namespace scanqa {

// Flat binary tensor archive: <stem>.bin holds little-endian float32 data
// back to back; <stem>.manifest is plain text, one line per tensor:
//   name rows cols offset_bytes
void save_checkpoint(const std::vector<ParamRef>& params, const std::string& stem);

// Loads into the given tensors; every manifest entry must match a tensor
// by name and shape, and vice versa.
void load_checkpoint(const std::vector<ParamRef>& params, const std::string& stem);

}  // namespace scanqa
