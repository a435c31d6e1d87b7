#pragma once

#include <filesystem>

#include "crumbs/tensor.hpp"

namespace crumbs {

// Checkpoint container (.mbc), safetensors-compatible layout:
//   bytes 0..7   u64 little-endian header length N
//   bytes 8..8+N UTF-8 JSON: name -> {"dtype":"F32","shape":[..],"data_offsets":[b,e]}
//                plus optional "__metadata__" string map
//   payload      raw little-endian float32, row-major, offsets relative to 8+N
// Tensors are written in lexicographic name order with contiguous offsets;
// writing the same Checkpoint twice yields bit-identical files.

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

Checkpoint read_checkpoint(const std::filesystem::path& path);

} // namespace crumbs
