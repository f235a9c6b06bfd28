#pragma once

#include <map>
#include <string>

#include "molt/adam.hpp"
#include "molt/model.hpp"

namespace molt {

struct TrainConfig {
  ModelConfig model;
  AdamConfig adam;
  int batch_size = 32;
  int epochs = 200;
  uint64_t seed = 1;
};

// Flat key=value text with '#' comments. Unknown keys and malformed values
// are contract errors so typos never train the wrong model.
std::map<std::string, std::string> parse_kv_text(const std::string& text);
std::map<std::string, std::string> read_kv_file(const std::string& path);

// Applies recognized keys onto cfg/info. `source` names the origin for
// error messages.
void apply_config_entries(const std::map<std::string, std::string>& entries, TrainConfig& cfg, DatasetInfo& info,
                          const std::string& source);

// Canonical sorted key=value rendering of the full resolved configuration
// (training knobs plus dataset shape); its FNV-1a hash identifies the
// configuration in checkpoints and reports.
std::string serialize_config(const TrainConfig& cfg, const DatasetInfo& info);
uint64_t config_hash(const std::string& canonical_text);

// Rebuilds the structs serialize_config produced.
void deserialize_config(const std::string& text, TrainConfig& cfg, DatasetInfo& info);

}  // namespace molt
