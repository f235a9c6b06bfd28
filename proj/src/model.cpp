#include "molt/model.hpp"

#include <cmath>

namespace molt {

namespace {

Matrix xavier_init(int rows, int cols, uint64_t init_seed, const std::string& name) {
  Rng rng = Rng::stream(init_seed, fnv1a(name.data(), name.size()));
  Matrix m(rows, cols);
  const double std_dev = std::sqrt(2.0 / (rows + cols));
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = std_dev * rng.next_gaussian();
  return m;
}

}  // namespace

Model::Model(const ModelConfig& cfg, const DatasetInfo& info) : cfg_(cfg), info_(info) {
  if (cfg.selected_layers < 1) throw ContractError("Model: selected_layers must be >= 1");
  if (cfg.fbp && cfg.common_dim % cfg.fbp_stride != 0) {
    throw ShapeError("Model: fbp stride " + std::to_string(cfg.fbp_stride) + " does not divide common_dim " +
                     std::to_string(cfg.common_dim));
  }
  if (cfg.weights.alpha < 0 || cfg.weights.beta < 0 || (cfg.weights.alpha == 0 && cfg.weights.beta == 0)) {
    throw ContractError("Model: loss weights must be >= 0 and not both zero");
  }

  if (info.precomputed_layers > 0) {
    if (info.precomputed_layers < cfg.selected_layers) {
      throw ContractError("Model: dataset provides " + std::to_string(info.precomputed_layers) +
                          " embedding layers but selected_layers is " + std::to_string(cfg.selected_layers));
    }
    final_image_dim_ = info.image_layer_dim;
    final_text_dim_ = info.text_layer_dim;
  } else {
    if (cfg.selected_layers > cfg.encoder_depth) {
      throw ContractError("Model: selected_layers exceeds encoder depth");
    }
    EncoderConfig img;
    img.modality = Modality::Image;
    img.depth = cfg.encoder_depth;
    img.tokens = info.image_tokens;
    img.layer_dim = cfg.image_dim;
    img.raw_dim = info.image_raw_dim;
    img.seed = cfg.encoder_seed;
    EncoderConfig txt = img;
    txt.modality = Modality::Text;
    txt.tokens = info.text_tokens;
    txt.layer_dim = cfg.text_dim;
    txt.raw_dim = info.text_raw_dim;
    image_encoder_ = std::make_unique<EncoderStack>(img, store_);
    text_encoder_ = std::make_unique<EncoderStack>(txt, store_);
    final_image_dim_ = cfg.image_dim;
    final_text_dim_ = cfg.text_dim;
  }

  robust_dim_ = cfg.fbp ? cfg.common_dim / cfg.fbp_stride : cfg.common_dim;

  if (cfg.baseline) {
    base_w_img_ = store_.add("baseline.w_img",
                             xavier_init(final_image_dim_, info.num_classes, cfg.init_seed, "baseline.w_img"));
    base_w_txt_ = store_.add("baseline.w_txt",
                             xavier_init(final_text_dim_, info.num_classes, cfg.init_seed, "baseline.w_txt"));
    base_bias_ = store_.add("baseline.bias", Matrix::zeros(1, info.num_classes));
    return;
  }

  molt_params_.reserve(cfg.selected_layers);
  for (int l = 0; l < cfg.selected_layers; ++l) {
    molt_params_.push_back(MoltLayerParams::create(store_, "molt.l" + std::to_string(l) + ".", final_image_dim_,
                                                   final_text_dim_, cfg.common_dim, cfg.init_seed));
  }
  const int classifier_in = cfg.fusion ? cfg.common_dim : robust_dim_;
  fusion_params_ = FusionParams::create(store_, "fusion.", cfg.selected_layers, robust_dim_, final_image_dim_,
                                        final_text_dim_, cfg.common_dim, classifier_in, info.num_classes,
                                        cfg.init_seed, cfg.learnable_mix);
}

MoltLayerConfig Model::layer_config() const {
  MoltLayerConfig lc;
  lc.common_dim = cfg_.common_dim;
  lc.fbp_stride = cfg_.fbp_stride;
  lc.cross_attention = cfg_.cross_attention;
  lc.fbp = cfg_.fbp;
  lc.layer_norm_eps = cfg_.layer_norm_eps;
  return lc;
}

EncodedSample Model::encode_sample(const Sample& s) const {
  EncodedSample enc;
  if (info_.precomputed_layers > 0) {
    if (static_cast<int>(s.image_layers.size()) != info_.precomputed_layers ||
        static_cast<int>(s.text_layers.size()) != info_.precomputed_layers) {
      throw ContractError("Model: sample does not carry the declared precomputed layers");
    }
    enc.image_layers.assign(s.image_layers.end() - cfg_.selected_layers, s.image_layers.end());
    enc.text_layers.assign(s.text_layers.end() - cfg_.selected_layers, s.text_layers.end());
  } else {
    enc.image_layers = image_encoder_->encode_selected(s.image_features, cfg_.selected_layers);
    enc.text_layers = text_encoder_->encode_selected(s.text_features, cfg_.selected_layers);
  }
  return enc;
}

Model::SampleGraph Model::forward(Tape& tape, const EncodedSample& enc, Absence absence) const {
  SampleGraph out;
  if (cfg_.baseline) {
    // Mean-pooled final embeddings through a linear head; an absent
    // modality contributes zeros (the baseline has no translation path).
    DiffNode pooled_img = absence == Absence::Image
                              ? tape.constant(Matrix::zeros(1, final_image_dim_))
                              : mean_pool_rows(tape.constant(enc.image_layers.back()));
    DiffNode pooled_txt = absence == Absence::Text
                              ? tape.constant(Matrix::zeros(1, final_text_dim_))
                              : mean_pool_rows(tape.constant(enc.text_layers.back()));
    DiffNode w1 = tape.use_param(base_w_img_);
    DiffNode w2 = tape.use_param(base_w_txt_);
    DiffNode b = tape.use_param(base_bias_);
    out.logits = add_row_broadcast(add(matmul(pooled_img, w1), matmul(pooled_txt, w2)), b);
    return out;
  }

  const MoltLayerConfig lc = layer_config();
  std::vector<DiffNode> robust_reps;
  robust_reps.reserve(cfg_.selected_layers);
  for (int l = 0; l < cfg_.selected_layers; ++l) {
    DiffNode img_tokens = absence == Absence::Image ? DiffNode{} : tape.constant(enc.image_layers[l]);
    DiffNode txt_tokens = absence == Absence::Text ? DiffNode{} : tape.constant(enc.text_layers[l]);
    MoltOutput mo = molt_forward(molt_params_[l].bind(tape, cfg_.common_dim), lc, img_tokens, txt_tokens, absence);
    robust_reps.push_back(mo.robust);
    out.molt_outputs.push_back(mo);
  }

  FusionParams::Nodes fp = fusion_params_.bind(tape, cfg_.common_dim);
  DiffNode h_r = mix_layers(fp.mix, robust_reps);
  if (!cfg_.fusion) {
    out.logits = affine(h_r, fp.w_cls, fp.b_cls);
    return out;
  }
  DiffNode img_embed = absence == Absence::Image ? DiffNode{} : tape.constant(enc.image_layers.back());
  DiffNode txt_embed = absence == Absence::Text ? DiffNode{} : tape.constant(enc.text_layers.back());
  auto [e_ri, e_rt] = readout_attention(fp, h_r, img_embed, txt_embed, absence);
  out.logits = classify(fp, e_ri, e_rt, cfg_.layer_norm_eps);
  return out;
}

Model::BatchGraph Model::batch_loss(Tape& tape, const std::vector<BatchItem>& batch) const {
  if (batch.empty()) throw ContractError("Model: empty batch");
  BatchGraph out;
  std::vector<DiffNode> ce_terms;
  ce_terms.reserve(batch.size());
  std::vector<std::vector<DiffNode>> pooled_img(cfg_.selected_layers), pooled_txt(cfg_.selected_layers);

  for (const BatchItem& item : batch) {
    SampleGraph g = forward(tape, *item.encoded, Absence::None);
    out.logits.push_back(g.logits);
    if (multi_label()) {
      ce_terms.push_back(sigmoid_cross_entropy(g.logits, item.sample->label_bits));
    } else {
      ce_terms.push_back(softmax_cross_entropy(g.logits, item.sample->label));
    }
    for (size_t l = 0; l < g.molt_outputs.size(); ++l) {
      if (g.molt_outputs[l].cca_valid) {
        pooled_img[l].push_back(g.molt_outputs[l].h_common_i);
        pooled_txt[l].push_back(g.molt_outputs[l].h_common_t);
      }
    }
  }

  out.ce = mean_scalars(ce_terms);

  std::vector<DiffNode> cca_layers;
  for (int l = 0; l < cfg_.selected_layers && !cfg_.baseline; ++l) {
    if (pooled_img[l].size() >= 2) {
      cca_layers.push_back(cca_loss(stack_rows(pooled_img[l]), stack_rows(pooled_txt[l]), cfg_.cca));
    }
  }

  const double alpha = cfg_.cca_enabled ? cfg_.weights.alpha : 0.0;
  const double beta = cfg_.weights.beta;
  if (beta == 0.0 && (cca_layers.empty() || alpha == 0.0)) {
    throw ContractError("Model: configuration leaves no gradient path (beta is zero and no weighted "
                        "correlation term exists)");
  }
  if (!cca_layers.empty()) {
    out.cca = mean_scalars(cca_layers);
    out.total = add_scaled(*out.cca, alpha, out.ce, beta);
  } else {
    out.total = scale(out.ce, beta);
  }
  return out;
}

Matrix Model::logits_value(const EncodedSample& enc, Absence absence) const {
  Tape tape(const_cast<ParamStore*>(&store_));
  return forward(tape, enc, absence).logits.value();
}

int Model::predict(const EncodedSample& enc, Absence absence) const {
  const Matrix logits = logits_value(enc, absence);
  int best = 0;
  for (int j = 1; j < logits.cols(); ++j)
    if (logits(0, j) > logits(0, best)) best = j;
  return best;
}

std::vector<uint8_t> Model::predict_bits(const EncodedSample& enc, Absence absence) const {
  const Matrix logits = logits_value(enc, absence);
  std::vector<uint8_t> bits(logits.cols());
  // sigmoid(z) >= 0.5 exactly when z >= 0
  for (int j = 0; j < logits.cols(); ++j) bits[j] = logits(0, j) >= 0.0 ? 1 : 0;
  return bits;
}

}  // namespace molt
