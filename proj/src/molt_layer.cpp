#include "molt/molt_layer.hpp"

#include <cmath>

namespace molt {

const char* absence_name(Absence a) {
  switch (a) {
    case Absence::None: return "none";
    case Absence::Image: return "image";
    default: return "text";
  }
}

namespace {

Matrix xavier(int rows, int cols, uint64_t init_seed, const std::string& name) {
  Rng rng = Rng::stream(init_seed, fnv1a(name.data(), name.size()));
  Matrix m(rows, cols);
  const double std_dev = std::sqrt(2.0 / (rows + cols));
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = std_dev * rng.next_gaussian();
  return m;
}

int add_xavier(ParamStore& store, const std::string& name, int rows, int cols, uint64_t seed) {
  return store.add(name, xavier(rows, cols, seed, name));
}

}  // namespace

MoltLayerParams MoltLayerParams::create(ParamStore& store, const std::string& prefix, int image_dim, int text_dim,
                                        int common_dim, uint64_t init_seed) {
  MoltLayerParams p;
  p.w_img = add_xavier(store, prefix + "w_img", image_dim, common_dim, init_seed);
  p.b_img = store.add(prefix + "b_img", Matrix::zeros(1, common_dim));
  p.w_txt = add_xavier(store, prefix + "w_txt", text_dim, common_dim, init_seed);
  p.b_txt = store.add(prefix + "b_txt", Matrix::zeros(1, common_dim));
  p.q_img = add_xavier(store, prefix + "q_img", common_dim, common_dim, init_seed);
  p.k_img = add_xavier(store, prefix + "k_img", common_dim, common_dim, init_seed);
  p.v_img = add_xavier(store, prefix + "v_img", common_dim, common_dim, init_seed);
  p.q_txt = add_xavier(store, prefix + "q_txt", common_dim, common_dim, init_seed);
  p.k_txt = add_xavier(store, prefix + "k_txt", common_dim, common_dim, init_seed);
  p.v_txt = add_xavier(store, prefix + "v_txt", common_dim, common_dim, init_seed);
  p.ln_gamma_img = store.add(prefix + "ln_gamma_img", Matrix::filled(1, common_dim, 1.0));
  p.ln_beta_img = store.add(prefix + "ln_beta_img", Matrix::zeros(1, common_dim));
  p.ln_gamma_txt = store.add(prefix + "ln_gamma_txt", Matrix::filled(1, common_dim, 1.0));
  p.ln_beta_txt = store.add(prefix + "ln_beta_txt", Matrix::zeros(1, common_dim));
  return p;
}

MoltLayerParams::Nodes MoltLayerParams::bind(Tape& tape, int common_dim) const {
  Nodes n;
  n.w_img = tape.use_param(w_img);
  n.b_img = tape.use_param(b_img);
  n.w_txt = tape.use_param(w_txt);
  n.b_txt = tape.use_param(b_txt);
  n.q_img = tape.use_param(q_img);
  n.k_img = tape.use_param(k_img);
  n.v_img = tape.use_param(v_img);
  n.q_txt = tape.use_param(q_txt);
  n.k_txt = tape.use_param(k_txt);
  n.v_txt = tape.use_param(v_txt);
  n.ln_gamma_img = tape.use_param(ln_gamma_img);
  n.ln_beta_img = tape.use_param(ln_beta_img);
  n.ln_gamma_txt = tape.use_param(ln_gamma_txt);
  n.ln_beta_txt = tape.use_param(ln_beta_txt);
  n.common_dim = common_dim;
  return n;
}

std::pair<DiffNode, DiffNode> project_to_common(const MoltLayerParams::Nodes& p, DiffNode image_tokens,
                                                DiffNode text_tokens) {
  return {affine(image_tokens, p.w_img, p.b_img), affine(text_tokens, p.w_txt, p.b_txt)};
}

namespace {

DiffNode attend(DiffNode queries, DiffNode keys, DiffNode values, int common_dim) {
  DiffNode scores = scale(matmul_nt(queries, keys), 1.0 / std::sqrt(static_cast<double>(common_dim)));
  return matmul(softmax_rows(scores), values);
}

}  // namespace

std::pair<DiffNode, DiffNode> cross_attend(const MoltLayerParams::Nodes& p, DiffNode image_common,
                                           DiffNode text_common) {
  DiffNode q_i = matmul(image_common, p.q_img);
  DiffNode k_i = matmul(image_common, p.k_img);
  DiffNode v_i = matmul(image_common, p.v_img);
  DiffNode q_t = matmul(text_common, p.q_txt);
  DiffNode k_t = matmul(text_common, p.k_txt);
  DiffNode v_t = matmul(text_common, p.v_txt);
  return {attend(q_i, k_t, v_t, p.common_dim), attend(q_t, k_i, v_i, p.common_dim)};
}

std::pair<DiffNode, DiffNode> residual_norm(const MoltLayerParams::Nodes& p, DiffNode image_attended,
                                            DiffNode image_common, DiffNode text_attended, DiffNode text_common,
                                            double eps) {
  DiffNode img = layer_norm(add(image_attended, image_common), p.ln_gamma_img, p.ln_beta_img, eps);
  DiffNode txt = layer_norm(add(text_attended, text_common), p.ln_gamma_txt, p.ln_beta_txt, eps);
  return {img, txt};
}

std::pair<DiffNode, DiffNode> pool_for_cca(DiffNode image_rep, DiffNode text_rep) {
  return {mean_pool_rows(image_rep), mean_pool_rows(text_rep)};
}

DiffNode fbp(DiffNode h_i, DiffNode h_t, int stride, double l2_eps) {
  return l2_normalize(sum_pool_stride(hadamard(h_i, h_t), stride), l2_eps);
}

MoltOutput molt_forward(const MoltLayerParams::Nodes& p, const MoltLayerConfig& cfg, DiffNode image_tokens,
                        DiffNode text_tokens, Absence absence) {
  MoltOutput out;
  if (absence == Absence::None) {
    auto [ip, tp] = project_to_common(p, image_tokens, text_tokens);
    DiffNode h_i = ip, h_t = tp;
    if (cfg.cross_attention) {
      auto [ai, at] = cross_attend(p, ip, tp);
      h_i = ai;
      h_t = at;
    }
    auto [ri, rt] = residual_norm(p, h_i, ip, h_t, tp, cfg.layer_norm_eps);
    auto [pi, pt] = pool_for_cca(ri, rt);
    out.h_common_i = pi;
    out.h_common_t = pt;
    out.cca_valid = true;
  } else {
    // Single available modality: project, skip cross-attention (it has no
    // partner), keep the residual-norm structure, then translate the
    // pooled representation to the missing side.
    const bool image_available = absence == Absence::Text;
    DiffNode tokens = image_available ? image_tokens : text_tokens;
    if (tokens.tape == nullptr) throw ContractError("molt_forward: available modality has no input");
    DiffNode proj = image_available ? affine(tokens, p.w_img, p.b_img) : affine(tokens, p.w_txt, p.b_txt);
    DiffNode normed = image_available
                          ? layer_norm(add(proj, proj), p.ln_gamma_img, p.ln_beta_img, cfg.layer_norm_eps)
                          : layer_norm(add(proj, proj), p.ln_gamma_txt, p.ln_beta_txt, cfg.layer_norm_eps);
    DiffNode pooled = mean_pool_rows(normed);
    out.h_common_i = pooled;
    out.h_common_t = pooled;
    out.cca_valid = false;
  }
  out.robust = cfg.fbp ? fbp(out.h_common_i, out.h_common_t, cfg.fbp_stride, cfg.l2_eps)
                       : hadamard(out.h_common_i, out.h_common_t);
  return out;
}

}  // namespace molt
