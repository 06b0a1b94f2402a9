#pragma once

#include <string>

#include "step/trainer.hpp"

namespace step {

// Enum names as they appear in config files and CLI flags.
std::string to_string(NeighborStrategy s);
std::string to_string(PoolMode p);
std::string to_string(NegativePolicy p);
std::string to_string(Regularizer r);
NeighborStrategy parse_strategy(const std::string& s);
PoolMode parse_pool(const std::string& s);
NegativePolicy parse_neg_policy(const std::string& s);
Regularizer parse_regularizer(const std::string& s);

// Training configuration as a JSON object (all fields, enums by name).
std::string config_to_json(const TrainConfig& config);

// Parses a config JSON object. Missing keys keep their defaults; unknown keys
// and ill-typed values throw DataError.
TrainConfig config_from_json(const std::string& text);
TrainConfig config_from_json_file(const std::string& path);

// Writes the model to a single file: a JSON manifest (format version, dtype,
// config echo, encoder dimensions, training progress, parameter paths and
// shapes) followed by every parameter value and both Adam moments as
// little-endian IEEE-754 doubles in manifest order.
void save_checkpoint(const ModelState& state, const std::string& path);

// Rebuilds the exact ModelState a checkpoint was saved from; training resumed
// from it reproduces the uninterrupted run step for step.
ModelState load_checkpoint(const std::string& path);

// The manifest JSON text of a checkpoint file, for inspection.
std::string checkpoint_manifest(const std::string& path);

}  // namespace step
