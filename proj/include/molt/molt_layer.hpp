#pragma once

#include "molt/cca.hpp"
#include "molt/ops.hpp"
#include "molt/rng.hpp"

namespace molt {

enum class Absence { None, Image, Text };

const char* absence_name(Absence a);

// Tunable parameters of one modality-latent-translation insertion: the two
// common-space projections, per-modality Q/K/V attention maps, and the two
// post-residual layer norms. Indices into the owning ParamStore.
struct MoltLayerParams {
  int w_img = -1, b_img = -1, w_txt = -1, b_txt = -1;
  int q_img = -1, k_img = -1, v_img = -1;
  int q_txt = -1, k_txt = -1, v_txt = -1;
  int ln_gamma_img = -1, ln_beta_img = -1, ln_gamma_txt = -1, ln_beta_txt = -1;

  static MoltLayerParams create(ParamStore& store, const std::string& prefix, int image_dim, int text_dim,
                                int common_dim, uint64_t init_seed);

  // Per-tape bindings of every parameter.
  struct Nodes {
    DiffNode w_img, b_img, w_txt, b_txt;
    DiffNode q_img, k_img, v_img;
    DiffNode q_txt, k_txt, v_txt;
    DiffNode ln_gamma_img, ln_beta_img, ln_gamma_txt, ln_beta_txt;
    int common_dim = 0;
  };
  Nodes bind(Tape& tape, int common_dim) const;
};

struct MoltLayerConfig {
  int common_dim = 16;
  int fbp_stride = 4;
  bool cross_attention = true;
  bool fbp = true;
  double layer_norm_eps = 1e-5;
  double l2_eps = 1e-12;
};

// Affine maps into the common space: (I W_i + b_i, T W_t + b_t).
std::pair<DiffNode, DiffNode> project_to_common(const MoltLayerParams::Nodes& p, DiffNode image_tokens,
                                                DiffNode text_tokens);

// Bidirectional single-head cross-attention with 1/sqrt(d_c) scaling:
// image queries attend over text keys/values and vice versa.
std::pair<DiffNode, DiffNode> cross_attend(const MoltLayerParams::Nodes& p, DiffNode image_common,
                                           DiffNode text_common);

// Per-token layer norm of attention output + projected input, per modality.
std::pair<DiffNode, DiffNode> residual_norm(const MoltLayerParams::Nodes& p, DiffNode image_attended,
                                            DiffNode image_common, DiffNode text_attended, DiffNode text_common,
                                            double eps = 1e-5);

// Token-mean pooling used both for the batch-level correlation loss and as
// the translation carrier under modality absence.
std::pair<DiffNode, DiffNode> pool_for_cca(DiffNode image_rep, DiffNode text_rep);

// Factorized bilinear pooling: elementwise product, strided sum pooling,
// eps-guarded L2 normalization.
DiffNode fbp(DiffNode h_i, DiffNode h_t, int stride, double l2_eps = 1e-12);

struct MoltOutput {
  DiffNode h_common_i;  // pooled image rep, 1 x d_c
  DiffNode h_common_t;  // pooled text rep, 1 x d_c
  DiffNode robust;      // H_l, 1 x (d_c/s) when fbp is on, 1 x d_c otherwise
  bool cca_valid = false;  // absent-modality samples contribute no correlation term
};

// Full per-layer pass. Under absence the available modality bypasses
// cross-attention (it has no partner) and its pooled common representation
// stands in for the missing side before pooling and fusion.
MoltOutput molt_forward(const MoltLayerParams::Nodes& p, const MoltLayerConfig& cfg, DiffNode image_tokens,
                        DiffNode text_tokens, Absence absence);

}  // namespace molt
