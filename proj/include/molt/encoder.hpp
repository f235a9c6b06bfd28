#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "molt/matrix.hpp"
#include "molt/tape.hpp"

namespace molt {

enum class Modality { Image, Text };

const char* modality_name(Modality m);

struct EncoderConfig {
  Modality modality = Modality::Image;
  int depth = 6;        // L
  int tokens = 16;      // N_m
  int layer_dim = 48;   // d_m
  int raw_dim = 32;     // input feature width
  uint64_t seed = 12345;
};

// Frozen projection stack standing in for a pretrained backbone: an input
// projection to layer_dim followed by `depth` layers of tanh(x * W_l). All
// weights live in the ParamStore flagged frozen; encode() never touches the
// tape, so nothing upstream of the tunable modules carries gradients.
class EncoderStack {
 public:
  EncoderStack(const EncoderConfig& cfg, ParamStore& store);

  const EncoderConfig& config() const { return cfg_; }

  // Per-layer outputs for layers 1..depth (each tokens x layer_dim). The
  // final element doubles as the extracted embedding E_m.
  std::vector<Matrix> encode(const Matrix& raw) const;

  // The layer outputs handed to the tunable modules: the last `selected`
  // entries of encode(), shallow-to-deep.
  std::vector<Matrix> encode_selected(const Matrix& raw, int selected) const;

 private:
  EncoderConfig cfg_;
  ParamStore* store_;
  int input_proj_;                 // param index of the raw -> layer_dim map
  std::vector<int> layer_weights_; // param indices per layer
};

}  // namespace molt
