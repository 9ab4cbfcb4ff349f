#pragma once

#include <string>

#include <json.hpp>

#include "camse/checkpoint.hpp"
#include "camse/qa.hpp"

namespace camse {

// Unified run configuration: model sizes, training recipe, paths. Unknown
// keys are rejected; the full snapshot (defaults included) is embedded in
// checkpoints.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    struct Paths {
        std::string embeddings;
        std::string train_data;
        std::string dev_data;
        std::string test_data;
        std::string checkpoint = "model.ckpt";
        std::string metrics_log = "metrics.jsonl";
        std::string index;
    } paths;
    double dev_fraction = 0.1;  // train holdout when no dev file is given
    CheckpointDtype checkpoint_dtype = CheckpointDtype::f32;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

}  // namespace camse
