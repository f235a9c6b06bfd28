#pragma once

#include <cstdint>
#include <vector>

#include "molt/matrix.hpp"

namespace molt {

// One paired-modality example. Raw features feed the frozen stub encoders;
// when per-layer embeddings were ingested from file instead, image_layers /
// text_layers are populated and the stub encoders are bypassed.
struct Sample {
  Matrix image_features;  // N_i x raw_dim_i
  Matrix text_features;   // N_t x raw_dim_t
  std::vector<Matrix> image_layers;
  std::vector<Matrix> text_layers;
  int label = 0;                     // single-label class index
  std::vector<uint8_t> label_bits;   // multi-label 0/1 vector (empty in single-label mode)
};

struct DatasetInfo {
  int num_classes = 4;
  bool multi_label = false;
  int image_tokens = 16, image_raw_dim = 32;
  int text_tokens = 12, text_raw_dim = 24;
  int precomputed_layers = 0;  // 0: raw features; >0: per-layer embeddings
  int image_layer_dim = 0, text_layer_dim = 0;
};

struct Dataset {
  DatasetInfo info;
  std::vector<Sample> samples;
  int size() const { return static_cast<int>(samples.size()); }
};

struct SyntheticSpec {
  int num_samples = 400;
  int num_classes = 4;
  uint64_t seed = 1;
  bool cross_modal = true;
  // Cluster geometry (centers, token offsets) is drawn from world_seed so
  // train/eval sets generated with different sample seeds stay in the same
  // feature space.
  uint64_t world_seed = 1000003;
  int clusters_per_modality = 0;  // 0 -> 2 * num_classes
  // Probability that a sample uses the dominant cluster pairing; the
  // single-modality accuracy ceiling. Must stay < 1 so the label remains a
  // function of both modalities.
  double redundancy = 0.7;
  double feature_noise = 0.3;
  int image_tokens = 16, image_raw_dim = 32;
  int text_tokens = 12, text_raw_dim = 24;
  bool multi_label = false;
};

// Class-balanced paired-modality clusters. In cross-modal mode the label is
// (cluster_image + cluster_text) mod num_classes; clusters co-occur through
// a balanced pairing bijection plus a skewed offset, so each modality alone
// narrows the label to two candidates (the dominant one at probability
// `redundancy`) and only the pair pins it. Without the flag each modality's
// cluster determines the label by itself. Deterministic per
// (seed, world_seed): identical arguments give identical bytes.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace molt
