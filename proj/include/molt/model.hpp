#pragma once

#include <memory>
#include <optional>

#include "molt/dataset.hpp"
#include "molt/encoder.hpp"
#include "molt/fusion.hpp"
#include "molt/molt_layer.hpp"

namespace molt {

struct ModelConfig {
  int common_dim = 16;      // d_c
  int selected_layers = 4;  // L_s: number of paired layers carrying a MoLT insertion
  int fbp_stride = 4;       // s
  int encoder_depth = 6;    // stub stack depth L
  int image_dim = 48;       // d_i (stub layer width)
  int text_dim = 32;        // d_t
  uint64_t encoder_seed = 12345;  // frozen stub weights; independent of the run seed
  uint64_t init_seed = 0;         // 0: the front end substitutes the run seed
  double layer_norm_eps = 1e-5;

  // Ablation toggles, all on by default.
  bool cross_attention = true;
  bool cca_enabled = true;   // off: correlation term reported but weighted zero
  bool learnable_mix = true; // off: M frozen at ones
  bool fusion = true;        // off: classifier reads H_r directly
  bool fbp = true;           // off: robust rep is the plain elementwise product

  // Reference model: linear classifier on concatenated mean-pooled final
  // embeddings; no MoLT insertions, no correlation loss.
  bool baseline = false;

  LossWeights weights;
  CcaConfig cca;
};

// Encoded (frozen) per-layer token embeddings for one sample: the last
// selected_layers outputs, shallow to deep; back() doubles as the final
// embedding E_m.
struct EncodedSample {
  std::vector<Matrix> image_layers;
  std::vector<Matrix> text_layers;
};

class Model {
 public:
  Model(const ModelConfig& cfg, const DatasetInfo& info);

  const ModelConfig& config() const { return cfg_; }
  const DatasetInfo& data_info() const { return info_; }
  int num_classes() const { return info_.num_classes; }
  int robust_dim() const { return robust_dim_; }
  bool multi_label() const { return info_.multi_label; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  EncodedSample encode_sample(const Sample& s) const;

  struct SampleGraph {
    DiffNode logits;
    std::vector<MoltOutput> molt_outputs;  // empty for the baseline model
  };
  SampleGraph forward(Tape& tape, const EncodedSample& enc, Absence absence) const;

  struct BatchItem {
    const EncodedSample* encoded;
    const Sample* sample;
  };
  struct BatchGraph {
    DiffNode total;
    DiffNode ce;
    std::optional<DiffNode> cca;  // present when >= 2 samples contributed pairs
    std::vector<DiffNode> logits;
  };
  // Training-time graph over one batch: mean cross-entropy plus the
  // weighted mean per-layer correlation loss over the stacked pooled pairs.
  BatchGraph batch_loss(Tape& tape, const std::vector<BatchItem>& batch) const;

  // Evaluation helpers; each builds a throwaway tape.
  Matrix logits_value(const EncodedSample& enc, Absence absence) const;
  int predict(const EncodedSample& enc, Absence absence) const;
  std::vector<uint8_t> predict_bits(const EncodedSample& enc, Absence absence) const;

 private:
  ModelConfig cfg_;
  DatasetInfo info_;
  ParamStore store_;
  std::unique_ptr<EncoderStack> image_encoder_;  // null when layers are precomputed
  std::unique_ptr<EncoderStack> text_encoder_;
  std::vector<MoltLayerParams> molt_params_;
  FusionParams fusion_params_;
  // Baseline head: per-modality classifier blocks over mean-pooled E_m.
  int base_w_img_ = -1, base_w_txt_ = -1, base_bias_ = -1;
  int robust_dim_ = 0;
  int final_image_dim_ = 0, final_text_dim_ = 0;

  MoltLayerConfig layer_config() const;
};

}  // namespace molt
