#include "molt/encoder.hpp"

#include <cmath>

#include "molt/kernels.hpp"
#include "molt/rng.hpp"

namespace molt {

const char* modality_name(Modality m) { return m == Modality::Image ? "image" : "text"; }

namespace {

Matrix random_projection(int rows, int cols, Rng& rng) {
  Matrix w(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) w(i, j) = scale * rng.next_gaussian();
  return w;
}

}  // namespace

EncoderStack::EncoderStack(const EncoderConfig& cfg, ParamStore& store) : cfg_(cfg), store_(&store) {
  if (cfg.depth < 1) throw ContractError("EncoderStack: depth must be >= 1");
  const std::string prefix = std::string("encoder.") + modality_name(cfg.modality) + ".";
  Rng rng = Rng::stream(cfg.seed, fnv1a_str(prefix.c_str()));
  input_proj_ = store.add(prefix + "input_proj", random_projection(cfg.raw_dim, cfg.layer_dim, rng), /*frozen=*/true);
  layer_weights_.reserve(cfg.depth);
  for (int l = 0; l < cfg.depth; ++l) {
    layer_weights_.push_back(store.add(prefix + "layer" + std::to_string(l),
                                       random_projection(cfg.layer_dim, cfg.layer_dim, rng), /*frozen=*/true));
  }
}

std::vector<Matrix> EncoderStack::encode(const Matrix& raw) const {
  if (raw.rows() != cfg_.tokens || raw.cols() != cfg_.raw_dim) {
    throw ShapeError(std::string("EncoderStack(") + modality_name(cfg_.modality) + "): raw input is " +
                     raw.shape_str() + ", expected " + std::to_string(cfg_.tokens) + "x" + std::to_string(cfg_.raw_dim));
  }
  std::vector<Matrix> layers;
  layers.reserve(cfg_.depth);
  Matrix h = kernels::matmul_nn(raw, store_->at(input_proj_).value);
  for (int l = 0; l < cfg_.depth; ++l) {
    h = kernels::tanh_map(kernels::matmul_nn(h, store_->at(layer_weights_[l]).value));
    layers.push_back(h);
  }
  return layers;
}

std::vector<Matrix> EncoderStack::encode_selected(const Matrix& raw, int selected) const {
  if (selected < 1 || selected > cfg_.depth) {
    throw ContractError("EncoderStack: selected layer count " + std::to_string(selected) + " out of range 1.." +
                        std::to_string(cfg_.depth));
  }
  std::vector<Matrix> all = encode(raw);
  return std::vector<Matrix>(all.end() - selected, all.end());
}

}  // namespace molt
