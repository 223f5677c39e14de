#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rgvae/tensor.hpp"

namespace rgvae {

// Checkpoint file layout, shared by all models:
//   magic "RGVAE1\n", then per-tensor records:
//     name length (u32 LE), name (UTF-8), rank (u32 LE), dims (u32 LE each),
//     row-major float32 LE payload.
//   A trailing record with empty name terminates the file.
// Text blocks (the model config) ride in a reserved record whose payload
// stores one byte per float32 element.

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& records);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

Tensor text_record(const std::string& text);
std::string record_text(const Tensor& record);

}  // namespace rgvae
