#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "equifl/nn.hpp"

namespace equifl::checkpoint {

// Writes <base>.json (shape manifest) and <base>.bin (flat little-endian
// 64-bit floats; per layer: weights row-major, then bias). `extra` is merged
// into the manifest for provenance.
void save_params(const nn::ModelParams& params, const std::string& base_path,
                 const nlohmann::json& extra);

nn::ModelParams load_params(const std::string& base_path);

}  // namespace equifl::checkpoint
