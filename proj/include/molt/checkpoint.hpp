#pragma once

#include <string>

#include "molt/adam.hpp"

namespace molt {

// Checkpoint container ("MOLC"): header, the resolved canonical config
// text, then every parameter with its Adam moments as raw little-endian
// doubles. Round-trips are bitwise exact; loaders validate magic, version,
// config hash and exact payload length.
struct CheckpointMeta {
  std::string config_text;
  uint64_t config_hash = 0;
  long long adam_step = 0;
  int epochs_completed = 0;
};

void save_checkpoint(const std::string& path, const ParamStore& store, const AdamState& state,
                     const std::string& config_text, int epochs_completed);

// Header + config only; used to rebuild the model before restoring.
CheckpointMeta peek_checkpoint(const std::string& path);

// Restores parameter values and optimizer state into a store/state built
// from the checkpoint's own config. Name, shape or frozen-flag mismatches
// are format errors; nothing is partially applied.
CheckpointMeta load_checkpoint(const std::string& path, ParamStore& store, AdamState& state);

}  // namespace molt
