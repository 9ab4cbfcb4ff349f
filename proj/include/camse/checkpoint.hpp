#pragma once

#include <string>
#include <utility>
#include <vector>

#include "camse/nn.hpp"
#include "camse/tensor.hpp"

namespace camse {

// Checkpoint container: magic + version header, the full run configuration
// as JSON text, then named parameter records (name, dtype, shape, row-major
// payload), all little-endian. Values compute in f64; storage may narrow to
// f32.
enum class CheckpointDtype { f32, f64 };

struct Checkpoint {
    std::string config_json;
    std::vector<std::pair<std::string, Tensor>> params;
};

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamStore& params, CheckpointDtype dtype);
Checkpoint load_checkpoint(const std::string& path);

// Copies values into the store; every expected parameter must be present
// with a matching shape, and no extras are allowed.
void apply_checkpoint(const Checkpoint& ckpt, ParamStore& params);

}  // namespace camse
