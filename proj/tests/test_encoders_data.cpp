#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "molt/dataset.hpp"
#include "molt/embedding_io.hpp"
#include "molt/encoder.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace molt;

namespace {

EncoderConfig small_cfg() {
  EncoderConfig cfg;
  cfg.depth = 3;
  cfg.tokens = 4;
  cfg.layer_dim = 6;
  cfg.raw_dim = 5;
  cfg.seed = 99;
  return cfg;
}

std::filesystem::path temp_dir(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() / (std::string("molt_test_") + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace

TEST_CASE("encoder: zero input gives all-zero layers (tanh(0)=0)") {
  ParamStore store;
  EncoderStack enc(small_cfg(), store);
  auto layers = enc.encode(Matrix::zeros(4, 5));
  CHECK(layers.size() == 3);
  for (const Matrix& l : layers) CHECK(l.max_abs() == 0.0);
}

TEST_CASE("encoder: deterministic and bounded") {
  ParamStore s1, s2;
  EncoderStack a(small_cfg(), s1);
  EncoderStack b(small_cfg(), s2);
  Rng rng(4);
  Matrix raw = test_util::random_matrix(4, 5, rng);
  auto la = a.encode(raw);
  auto lb = b.encode(raw);
  for (size_t i = 0; i < la.size(); ++i) {
    CHECK(la[i].bitwise_equal(lb[i]));
    CHECK(la[i].max_abs() < 1.0);  // tanh range
  }
  // Same stack, same input, twice.
  auto again = a.encode(raw);
  for (size_t i = 0; i < la.size(); ++i) CHECK(la[i].bitwise_equal(again[i]));
}

TEST_CASE("encoder: weights are frozen-flagged and shapes validated") {
  ParamStore store;
  EncoderStack enc(small_cfg(), store);
  for (int i = 0; i < store.size(); ++i) CHECK(store.at(i).frozen);
  CHECK_THROWS_AS(enc.encode(Matrix::zeros(4, 6)), ShapeError);
  CHECK_THROWS_AS(enc.encode_selected(Matrix::zeros(4, 5), 4), ContractError);
}

TEST_CASE("synthetic dataset: exact class balance and determinism") {
  SyntheticSpec spec;
  spec.num_samples = 400;
  spec.num_classes = 4;
  spec.seed = 7;
  Dataset a = generate_synthetic(spec);
  Dataset b = generate_synthetic(spec);

  std::vector<int> counts(4, 0);
  for (const Sample& s : a.samples) ++counts[s.label];
  for (int c = 0; c < 4; ++c) CHECK(counts[c] == 100);

  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].label == b.samples[i].label);
    CHECK(a.samples[i].image_features.bitwise_equal(b.samples[i].image_features));
    CHECK(a.samples[i].text_features.bitwise_equal(b.samples[i].text_features));
  }

  spec.seed = 8;
  Dataset c = generate_synthetic(spec);
  CHECK_FALSE(a.samples[0].image_features.bitwise_equal(c.samples[0].image_features));
}

TEST_CASE("synthetic dataset: odd class counts stay balanced within one") {
  SyntheticSpec spec;
  spec.num_samples = 301;
  spec.num_classes = 3;
  spec.seed = 5;
  Dataset ds = generate_synthetic(spec);
  std::vector<int> counts(3, 0);
  for (const Sample& s : ds.samples) ++counts[s.label];
  const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*mx - *mn <= 1);
}

TEST_CASE("cross-modal labels need both modalities; concatenation beats either alone") {
  SyntheticSpec spec;
  spec.num_samples = 360;
  spec.num_classes = 4;
  spec.seed = 11;
  Dataset ds = generate_synthetic(spec);

  ParamStore store;
  EncoderConfig icfg;
  icfg.modality = Modality::Image;
  icfg.tokens = spec.image_tokens;
  icfg.raw_dim = spec.image_raw_dim;
  icfg.layer_dim = 24;
  icfg.depth = 4;
  EncoderConfig tcfg = icfg;
  tcfg.modality = Modality::Text;
  tcfg.tokens = spec.text_tokens;
  tcfg.raw_dim = spec.text_raw_dim;
  tcfg.layer_dim = 20;
  EncoderStack ienc(icfg, store);
  EncoderStack tenc(tcfg, store);

  const int n = ds.size();
  Matrix img_pool(n, 24), txt_pool(n, 20), concat(n, 44);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const Matrix ie = ienc.encode(ds.samples[i].image_features).back();
    const Matrix te = tenc.encode(ds.samples[i].text_features).back();
    for (int j = 0; j < 24; ++j) {
      double m = 0.0;
      for (int t = 0; t < ie.rows(); ++t) m += ie(t, j);
      img_pool(i, j) = m / ie.rows();
      concat(i, j) = img_pool(i, j);
    }
    for (int j = 0; j < 20; ++j) {
      double m = 0.0;
      for (int t = 0; t < te.rows(); ++t) m += te(t, j);
      txt_pool(i, j) = m / te.rows();
      concat(i, 24 + j) = txt_pool(i, j);
    }
    labels[i] = ds.samples[i].label;
  }

  const double img_acc = oracles::linear_probe_accuracy(img_pool, labels, 4);
  const double txt_acc = oracles::linear_probe_accuracy(txt_pool, labels, 4);
  const double cat_acc = oracles::linear_probe_accuracy(concat, labels, 4);
  CAPTURE(img_acc);
  CAPTURE(txt_acc);
  CAPTURE(cat_acc);
  // Each modality alone caps at two candidate labels; together they pin it.
  CHECK(img_acc < 0.75);
  CHECK(txt_acc < 0.75);
  CHECK(cat_acc > img_acc);
  CHECK(cat_acc > txt_acc);
  CHECK(cat_acc > 0.8);
}

TEST_CASE("embedding files round-trip bitwise") {
  SyntheticSpec spec;
  spec.num_samples = 24;
  spec.num_classes = 4;
  spec.seed = 3;
  Dataset ds = generate_synthetic(spec);
  auto dir = temp_dir("roundtrip");
  save_embeddings(ds, dir.string());
  Dataset back = load_embeddings(dir.string());

  REQUIRE(back.size() == ds.size());
  CHECK(back.info.num_classes == 4);
  CHECK(back.info.image_tokens == ds.info.image_tokens);
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].label == ds.samples[i].label);
    CHECK(back.samples[i].image_features.bitwise_equal(ds.samples[i].image_features));
    CHECK(back.samples[i].text_features.bitwise_equal(ds.samples[i].text_features));
  }

  // save(load(x)) reproduces the file bytes too.
  auto dir2 = temp_dir("roundtrip2");
  save_embeddings(back, dir2.string());
  CHECK(slurp(dir / "image.mol1") == slurp(dir2 / "image.mol1"));
  CHECK(slurp(dir / "text.mol1") == slurp(dir2 / "text.mol1"));
}

TEST_CASE("multi-label datasets round-trip") {
  SyntheticSpec spec;
  spec.num_samples = 12;
  spec.num_classes = 4;
  spec.multi_label = true;
  Dataset ds = generate_synthetic(spec);
  REQUIRE(ds.info.multi_label);
  auto dir = temp_dir("multilabel");
  save_embeddings(ds, dir.string());
  Dataset back = load_embeddings(dir.string());
  CHECK(back.info.multi_label);
  for (int i = 0; i < ds.size(); ++i) CHECK(back.samples[i].label_bits == ds.samples[i].label_bits);
}

TEST_CASE("precomputed layer files round-trip and bypass the raw path") {
  Dataset ds;
  ds.info.num_classes = 2;
  ds.info.image_tokens = 3;
  ds.info.text_tokens = 2;
  ds.info.precomputed_layers = 2;
  ds.info.image_layer_dim = 4;
  ds.info.text_layer_dim = 3;
  Rng rng(8);
  for (int i = 0; i < 5; ++i) {
    Sample s;
    s.label = i % 2;
    for (int l = 0; l < 2; ++l) {
      // float-representable values, same as the generator guarantees
      Matrix mi = test_util::random_matrix(3, 4, rng);
      Matrix mt = test_util::random_matrix(2, 3, rng);
      for (size_t k = 0; k < mi.size(); ++k) mi.data()[k] = static_cast<float>(mi.data()[k]);
      for (size_t k = 0; k < mt.size(); ++k) mt.data()[k] = static_cast<float>(mt.data()[k]);
      s.image_layers.push_back(mi);
      s.text_layers.push_back(mt);
    }
    ds.samples.push_back(std::move(s));
  }
  auto dir = temp_dir("layers");
  save_embeddings(ds, dir.string());
  Dataset back = load_embeddings(dir.string());
  CHECK(back.info.precomputed_layers == 2);
  CHECK(back.info.image_layer_dim == 4);
  for (int i = 0; i < 5; ++i)
    for (int l = 0; l < 2; ++l) {
      CHECK(back.samples[i].image_layers[l].bitwise_equal(ds.samples[i].image_layers[l]));
      CHECK(back.samples[i].text_layers[l].bitwise_equal(ds.samples[i].text_layers[l]));
    }
}

TEST_CASE("malformed embedding files produce named errors, never partial loads") {
  SyntheticSpec spec;
  spec.num_samples = 6;
  spec.num_classes = 2;
  Dataset ds = generate_synthetic(spec);
  auto dir = temp_dir("malformed");
  save_embeddings(ds, dir.string());
  const std::string good = slurp(dir / "image.mol1");

  SUBCASE("truncated by one byte") {
    spit(dir / "image.mol1", good.substr(0, good.size() - 1));
    try {
      load_embeddings(dir.string());
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind == FormatError::Kind::Truncated);
    }
  }
  SUBCASE("wrong magic") {
    std::string bad = good;
    bad[0] = 'X';
    bad[1] = 'X';
    bad[2] = 'X';
    bad[3] = 'X';
    spit(dir / "image.mol1", bad);
    try {
      load_embeddings(dir.string());
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind == FormatError::Kind::BadMagic);
    }
  }
  SUBCASE("wrong version") {
    std::string bad = good;
    bad[4] = 9;
    spit(dir / "image.mol1", bad);
    try {
      load_embeddings(dir.string());
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind == FormatError::Kind::BadVersion);
    }
  }
  SUBCASE("trailing junk") {
    spit(dir / "image.mol1", good + "zz");
    try {
      load_embeddings(dir.string());
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind == FormatError::Kind::Inconsistent);
    }
  }
  SUBCASE("label disagreement across modality files") {
    // Flip the first sample's label in the image file only.
    std::string bad = good;
    const size_t label_pos = 4 + 6 * 4;  // header: magic + six u32 fields
    bad[label_pos] = static_cast<char>(bad[label_pos] ^ 1);
    spit(dir / "image.mol1", bad);
    try {
      load_embeddings(dir.string());
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind == FormatError::Kind::Inconsistent);
    }
  }
  SUBCASE("missing file") {
    std::filesystem::remove(dir / "text.mol1");
    CHECK_THROWS_AS(load_embeddings(dir.string()), IoError);
  }
}
