#include "molt/fusion.hpp"

#include <cmath>

namespace molt {

namespace {

Matrix xavier(int rows, int cols, uint64_t init_seed, const std::string& name) {
  Rng rng = Rng::stream(init_seed, fnv1a(name.data(), name.size()));
  Matrix m(rows, cols);
  const double std_dev = std::sqrt(2.0 / (rows + cols));
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = std_dev * rng.next_gaussian();
  return m;
}

void check_weights(const LossWeights& w) {
  if (w.alpha < 0.0 || w.beta < 0.0 || (w.alpha == 0.0 && w.beta == 0.0)) {
    throw ContractError("LossWeights: alpha and beta must be >= 0 and not both zero");
  }
}

DiffNode combine(DiffNode ce, const std::vector<DiffNode>& cca_losses, const LossWeights& w) {
  check_weights(w);
  if (cca_losses.empty()) return scale(ce, w.beta);
  return add_scaled(mean_scalars(cca_losses), w.alpha, ce, w.beta);
}

}  // namespace

FusionParams FusionParams::create(ParamStore& store, const std::string& prefix, int selected_layers, int robust_dim,
                                  int image_dim, int text_dim, int common_dim, int classifier_in, int num_classes,
                                  uint64_t init_seed, bool learnable_mix) {
  FusionParams p;
  p.mix = store.add(prefix + "mix", Matrix::filled(1, selected_layers, 1.0), /*frozen=*/!learnable_mix);
  p.w_query = store.add(prefix + "w_query", xavier(robust_dim, common_dim, init_seed, prefix + "w_query"));
  p.w_key_img = store.add(prefix + "w_key_img", xavier(image_dim, common_dim, init_seed, prefix + "w_key_img"));
  p.w_val_img = store.add(prefix + "w_val_img", xavier(image_dim, common_dim, init_seed, prefix + "w_val_img"));
  p.w_key_txt = store.add(prefix + "w_key_txt", xavier(text_dim, common_dim, init_seed, prefix + "w_key_txt"));
  p.w_val_txt = store.add(prefix + "w_val_txt", xavier(text_dim, common_dim, init_seed, prefix + "w_val_txt"));
  p.ln_gamma = store.add(prefix + "ln_gamma", Matrix::filled(1, common_dim, 1.0));
  p.ln_beta = store.add(prefix + "ln_beta", Matrix::zeros(1, common_dim));
  p.w_cls = store.add(prefix + "w_cls", xavier(classifier_in, num_classes, init_seed, prefix + "w_cls"));
  p.b_cls = store.add(prefix + "b_cls", Matrix::zeros(1, num_classes));
  return p;
}

FusionParams::Nodes FusionParams::bind(Tape& tape, int common_dim) const {
  Nodes n;
  n.mix = tape.use_param(mix);
  n.w_query = tape.use_param(w_query);
  n.w_key_img = tape.use_param(w_key_img);
  n.w_val_img = tape.use_param(w_val_img);
  n.w_key_txt = tape.use_param(w_key_txt);
  n.w_val_txt = tape.use_param(w_val_txt);
  n.ln_gamma = tape.use_param(ln_gamma);
  n.ln_beta = tape.use_param(ln_beta);
  n.w_cls = tape.use_param(w_cls);
  n.b_cls = tape.use_param(b_cls);
  n.common_dim = common_dim;
  return n;
}

DiffNode mix_layers(DiffNode mix, const std::vector<DiffNode>& robust_reps) {
  const int l_s = mix.value().cols();
  if (static_cast<int>(robust_reps.size()) != l_s) {
    throw ShapeError("mix_layers: " + std::to_string(robust_reps.size()) + " layer representations for M of length " +
                     std::to_string(l_s));
  }
  // (1/L_s) * M * [H_1; ...; H_Ls]
  return scale(matmul(mix, stack_rows(robust_reps)), 1.0 / static_cast<double>(l_s));
}

std::pair<DiffNode, DiffNode> readout_attention(const FusionParams::Nodes& p, DiffNode h_r, DiffNode image_embed,
                                                DiffNode text_embed, Absence absence) {
  DiffNode query = matmul(h_r, p.w_query);  // 1 x d_c
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(p.common_dim));

  auto read = [&](DiffNode embed, DiffNode w_key, DiffNode w_val) {
    DiffNode keys = matmul(embed, w_key);
    DiffNode vals = matmul(embed, w_val);
    DiffNode weights = softmax_rows(scale(matmul_nt(query, keys), inv_sqrt));
    return matmul(weights, vals);
  };

  switch (absence) {
    case Absence::None: {
      return {read(image_embed, p.w_key_img, p.w_val_img), read(text_embed, p.w_key_txt, p.w_val_txt)};
    }
    case Absence::Text: {
      DiffNode img = read(image_embed, p.w_key_img, p.w_val_img);
      return {img, img};
    }
    default: {
      DiffNode txt = read(text_embed, p.w_key_txt, p.w_val_txt);
      return {txt, txt};
    }
  }
}

DiffNode classify(const FusionParams::Nodes& p, DiffNode readout_img, DiffNode readout_txt, double eps) {
  DiffNode fused = scale(layer_norm(add(readout_img, readout_txt), p.ln_gamma, p.ln_beta, eps), 0.5);
  return affine(fused, p.w_cls, p.b_cls);
}

DiffNode total_loss(DiffNode logits, int label, const std::vector<DiffNode>& cca_losses, const LossWeights& w) {
  return combine(softmax_cross_entropy(logits, label), cca_losses, w);
}

DiffNode total_loss_multilabel(DiffNode logits, const std::vector<uint8_t>& label_bits,
                               const std::vector<DiffNode>& cca_losses, const LossWeights& w) {
  return combine(sigmoid_cross_entropy(logits, label_bits), cca_losses, w);
}

}  // namespace molt
