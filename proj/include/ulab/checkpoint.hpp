#pragma once

#include <string>

#include "ulab/model.hpp"

namespace ulab {

// Checkpoint file layout: magic "ULF1", a 32-bit little-endian header length,
// a JSON header {model, lora, manifest:[{name, shape}]}, then every parameter
// as little-endian 64-bit floats concatenated in manifest order.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace ulab
