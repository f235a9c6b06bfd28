#pragma once

#include <vector>

#include "molt/molt_layer.hpp"

namespace molt {

enum class TaskMode { SingleLabel, MultiLabel };

struct LossWeights {
  double alpha = 0.1;  // correlation loss weight
  double beta = 0.9;   // cross-entropy weight
};

// Fusion-head parameters: the layer-mixing vector M, the readout attention
// projections, the pre-classifier layer norm, and the classifier itself.
struct FusionParams {
  int mix = -1;                          // 1 x L_s, initialized to ones
  int w_query = -1;                      // robust_dim x d_c
  int w_key_img = -1, w_val_img = -1;    // d_i x d_c
  int w_key_txt = -1, w_val_txt = -1;    // d_t x d_c
  int ln_gamma = -1, ln_beta = -1;       // 1 x d_c
  int w_cls = -1, b_cls = -1;            // cls_in x C, 1 x C

  static FusionParams create(ParamStore& store, const std::string& prefix, int selected_layers, int robust_dim,
                             int image_dim, int text_dim, int common_dim, int classifier_in, int num_classes,
                             uint64_t init_seed, bool learnable_mix);

  struct Nodes {
    DiffNode mix, w_query;
    DiffNode w_key_img, w_val_img, w_key_txt, w_val_txt;
    DiffNode ln_gamma, ln_beta;
    DiffNode w_cls, b_cls;
    int common_dim = 0;
  };
  Nodes bind(Tape& tape, int common_dim) const;
};

// H_r = (1/L_s) * sum_l M_l * H_l; the M-weighted mean of the per-layer
// robust representations.
DiffNode mix_layers(DiffNode mix, const std::vector<DiffNode>& robust_reps);

// Single-query cross-attention of the robust representation over each
// modality's final embedding. Under absence the available modality's
// readout substitutes for the missing one.
std::pair<DiffNode, DiffNode> readout_attention(const FusionParams::Nodes& p, DiffNode h_r, DiffNode image_embed,
                                                DiffNode text_embed, Absence absence);

// Classifier(1/2 * Norm(E_ri + E_rt)); raw logits, losses apply the link.
DiffNode classify(const FusionParams::Nodes& p, DiffNode readout_img, DiffNode readout_txt, double eps = 1e-5);

// alpha * mean(cca_losses) + beta * task cross-entropy. An empty loss list
// contributes zero correlation term.
DiffNode total_loss(DiffNode logits, int label, const std::vector<DiffNode>& cca_losses, const LossWeights& w);
DiffNode total_loss_multilabel(DiffNode logits, const std::vector<uint8_t>& label_bits,
                               const std::vector<DiffNode>& cca_losses, const LossWeights& w);

}  // namespace molt
