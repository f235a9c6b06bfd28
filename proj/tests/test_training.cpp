#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "molt/checkpoint.hpp"
#include "molt/trainer.hpp"
#include "support/test_util.hpp"

using namespace molt;

namespace {

SyntheticSpec tiny_data_spec(uint64_t seed = 7) {
  SyntheticSpec spec;
  spec.num_samples = 64;
  spec.num_classes = 4;
  spec.seed = seed;
  spec.image_tokens = 6;
  spec.image_raw_dim = 12;
  spec.text_tokens = 5;
  spec.text_raw_dim = 10;
  return spec;
}

TrainConfig tiny_train_cfg() {
  TrainConfig cfg;
  cfg.model.common_dim = 8;
  cfg.model.selected_layers = 2;
  cfg.model.fbp_stride = 2;
  cfg.model.encoder_depth = 3;
  cfg.model.image_dim = 12;
  cfg.model.text_dim = 10;
  cfg.model.init_seed = 3;
  cfg.batch_size = 16;
  cfg.epochs = 13;  // 4 steps per epoch -> 52 steps
  cfg.seed = 3;
  cfg.adam.learning_rate = 3e-3;
  return cfg;
}

std::vector<Matrix> snapshot_frozen(const ParamStore& store) {
  std::vector<Matrix> out;
  for (int i = 0; i < store.size(); ++i)
    if (store.at(i).frozen) out.push_back(store.at(i).value);
  return out;
}

std::filesystem::path temp_dir(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() / (std::string("molt_train_") + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("adam: first step from zero moments is approximately -lr * sign(g)") {
  ParamStore store;
  store.add("w", Matrix::zeros(1, 2));
  AdamState state = AdamState::init(store);
  AdamConfig cfg;
  cfg.learning_rate = 0.1;

  store.by_name("w").grad = Matrix(1, 2, {0.5, -0.25});
  store.mark_grads_populated();
  adam_step(store, state, cfg);

  CHECK(std::fabs(store.by_name("w").value(0, 0) - (-0.1)) <= 1e-6);
  CHECK(std::fabs(store.by_name("w").value(0, 1) - 0.1) <= 1e-6);
  CHECK(state.step == 1);
  // grads were zeroed
  CHECK(store.by_name("w").grad.max_abs() == 0.0);
}

TEST_CASE("adam: zero gradient leaves parameters, advances the step") {
  ParamStore store;
  store.add("w", Matrix::filled(2, 2, 1.5));
  AdamState state = AdamState::init(store);
  store.mark_grads_populated();
  adam_step(store, state, AdamConfig{});
  CHECK(store.by_name("w").value.bitwise_equal(Matrix::filled(2, 2, 1.5)));
  CHECK(state.step == 1);
}

TEST_CASE("adam: frozen parameters never move, even with forced gradients") {
  ParamStore store;
  store.add("frozen", Matrix::filled(1, 3, 2.0), /*frozen=*/true);
  store.add("free", Matrix::zeros(1, 3));
  AdamState state = AdamState::init(store);
  store.by_name("frozen").grad = Matrix::filled(1, 3, 5.0);
  store.by_name("free").grad = Matrix::filled(1, 3, 5.0);
  store.mark_grads_populated();
  adam_step(store, state, AdamConfig{});
  CHECK(store.by_name("frozen").value.bitwise_equal(Matrix::filled(1, 3, 2.0)));
  CHECK(store.by_name("free").value.max_abs() > 0.0);
}

TEST_CASE("adam: refuses to step without a backward pass") {
  ParamStore store;
  store.add("w", Matrix::zeros(1, 1));
  AdamState state = AdamState::init(store);
  CHECK_THROWS_AS(adam_step(store, state, AdamConfig{}), ContractError);
}

TEST_CASE("adam: two steps keep momenta (hand-checked schedule)") {
  // beta1 = beta2 = 0.5, eps = 0, lr = 1, constant gradient 1:
  // step 1: m_hat = v_hat = 1 -> delta = -1
  // step 2: m = 0.75/bc(0.75) = 1, v likewise -> delta = -1
  ParamStore store;
  store.add("w", Matrix::zeros(1, 1));
  AdamState state = AdamState::init(store);
  AdamConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.beta1 = 0.5;
  cfg.beta2 = 0.5;
  cfg.eps = 0.0;
  for (int i = 0; i < 2; ++i) {
    store.by_name("w").grad = Matrix::filled(1, 1, 1.0);
    store.mark_grads_populated();
    adam_step(store, state, cfg);
  }
  CHECK(store.by_name("w").value(0, 0) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("training: loss decreases over 50 steps and is seed-deterministic") {
  Dataset data = generate_synthetic(tiny_data_spec());
  TrainConfig cfg = tiny_train_cfg();

  Model model(cfg.model, data.info);
  const auto frozen_before = snapshot_frozen(model.store());
  AdamState state = AdamState::init(model.store());
  TrainResult r1 = train(model, data, cfg, state);

  REQUIRE(r1.step_losses.size() >= 50);
  CHECK(r1.step_losses[49] < r1.step_losses[0]);
  // per the frozen-encoder contract, stub weights are bitwise unchanged
  const auto frozen_after = snapshot_frozen(model.store());
  REQUIRE(frozen_before.size() == frozen_after.size());
  for (size_t i = 0; i < frozen_before.size(); ++i) CHECK(frozen_before[i].bitwise_equal(frozen_after[i]));

  // identical run
  Model model2(cfg.model, data.info);
  AdamState state2 = AdamState::init(model2.store());
  TrainResult r2 = train(model2, data, cfg, state2);
  CHECK(training_log_csv(r1.log) == training_log_csv(r2.log));
  for (int i = 0; i < model.store().size(); ++i) {
    CHECK(model.store().at(i).value.bitwise_equal(model2.store().at(i).value));
  }

  // different seed diverges
  TrainConfig cfg3 = cfg;
  cfg3.seed = 99;
  cfg3.model.init_seed = 99;
  Model model3(cfg3.model, data.info);
  AdamState state3 = AdamState::init(model3.store());
  TrainResult r3 = train(model3, data, cfg3, state3);
  CHECK(training_log_csv(r1.log) != training_log_csv(r3.log));
}

TEST_CASE("training: alpha=0 still reports the correlation loss but excludes it from updates") {
  Dataset data = generate_synthetic(tiny_data_spec());
  TrainConfig a = tiny_train_cfg();
  a.epochs = 3;
  a.model.weights.alpha = 0.0;
  a.model.weights.beta = 0.9;

  TrainConfig b = a;
  b.model.weights.alpha = 0.1;
  b.model.cca_enabled = false;  // ablation switch: alpha treated as zero

  Model ma(a.model, data.info);
  AdamState sa = AdamState::init(ma.store());
  TrainResult ra = train(ma, data, a, sa);

  Model mb(b.model, data.info);
  AdamState sb = AdamState::init(mb.store());
  TrainResult rb = train(mb, data, b, sb);

  // correlation values are still logged...
  CHECK(ra.log.back().loss_cca != 0.0);
  CHECK(rb.log.back().loss_cca != 0.0);
  // ...but drive no updates: both runs take identical parameter paths
  for (int i = 0; i < ma.store().size(); ++i) {
    CHECK(ma.store().at(i).value.bitwise_equal(mb.store().at(i).value));
  }
}

TEST_CASE("training: contract errors") {
  Dataset data = generate_synthetic(tiny_data_spec());
  TrainConfig cfg = tiny_train_cfg();
  Dataset empty;
  empty.info = data.info;
  Model model(cfg.model, data.info);
  AdamState state = AdamState::init(model.store());
  CHECK_THROWS_AS(train(model, empty, cfg, state), ContractError);

  // baseline model with beta = 0 has no gradient path
  TrainConfig cfg2 = tiny_train_cfg();
  cfg2.model.baseline = true;
  cfg2.model.weights.alpha = 0.1;
  cfg2.model.weights.beta = 0.0;
  Model baseline(cfg2.model, data.info);
  AdamState state2 = AdamState::init(baseline.store());
  CHECK_THROWS_AS(train(baseline, data, cfg2, state2), ContractError);
}

TEST_CASE("checkpoint: bitwise round-trip, resume equivalence, corruption refusal") {
  Dataset data = generate_synthetic(tiny_data_spec(21));
  TrainConfig cfg = tiny_train_cfg();
  cfg.epochs = 6;

  // Uninterrupted run.
  Model full(cfg.model, data.info);
  AdamState full_state = AdamState::init(full.store());
  TrainResult full_run = train(full, data, cfg, full_state);

  // Interrupted at epoch 3 + checkpoint + resume.
  TrainConfig half_cfg = cfg;
  half_cfg.epochs = 3;
  Model half(cfg.model, data.info);
  AdamState half_state = AdamState::init(half.store());
  TrainResult first_half = train(half, data, half_cfg, half_state);

  const std::string config_text = serialize_config(cfg, data.info);
  auto dir = temp_dir("ckpt");
  const std::string path = (dir / "model.molc").string();
  save_checkpoint(path, half.store(), half_state, config_text, 3);

  // Bitwise round-trip into a freshly built model.
  Model restored(cfg.model, data.info);
  AdamState restored_state = AdamState::init(restored.store());
  CheckpointMeta meta = load_checkpoint(path, restored.store(), restored_state);
  CHECK(meta.epochs_completed == 3);
  CHECK(meta.config_text == config_text);
  for (int i = 0; i < half.store().size(); ++i) {
    CHECK(restored.store().at(i).value.bitwise_equal(half.store().at(i).value));
    CHECK(restored_state.m[i].bitwise_equal(half_state.m[i]));
    CHECK(restored_state.v[i].bitwise_equal(half_state.v[i]));
  }
  CHECK(restored_state.step == half_state.step);

  // Resuming reproduces the unbroken run's remaining epochs.
  TrainResult second_half = train(restored, data, cfg, restored_state, meta.epochs_completed);
  REQUIRE(second_half.log.size() == 3);
  for (size_t i = 0; i < second_half.log.size(); ++i) {
    const EpochLog& resumed = second_half.log[i];
    const EpochLog& reference = full_run.log[3 + i];
    CHECK(resumed.epoch == reference.epoch);
    CHECK(std::fabs(resumed.loss_total - reference.loss_total) <= 1e-10);
    CHECK(std::fabs(resumed.loss_ce - reference.loss_ce) <= 1e-10);
    CHECK(std::fabs(resumed.loss_cca - reference.loss_cca) <= 1e-10);
  }
  for (int i = 0; i < full.store().size(); ++i) {
    CHECK(std::fabs(test_util::max_abs_diff(restored.store().at(i).value, full.store().at(i).value)) <= 1e-10);
  }

  // Corrupting the embedded config text breaks the stored hash: refusal.
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const size_t config_pos = 4 + 4 + 8 + 8 + 4 + 4;  // header fields before the config text
    bytes[config_pos] ^= 0x01;
    const std::string bad_path = (dir / "bad.molc").string();
    std::ofstream out(bad_path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    Model victim(cfg.model, data.info);
    AdamState victim_state = AdamState::init(victim.store());
    try {
      load_checkpoint(bad_path, victim.store(), victim_state);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind == FormatError::Kind::ConfigHashMismatch);
    }
  }

  // Truncation: named error, nothing applied.
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string trunc_path = (dir / "trunc.molc").string();
    std::ofstream out(trunc_path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
    out.close();
    Model victim(cfg.model, data.info);
    AdamState victim_state = AdamState::init(victim.store());
    const Matrix before = victim.store().at(victim.store().size() - 1).value;
    try {
      load_checkpoint(trunc_path, victim.store(), victim_state);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind == FormatError::Kind::Truncated);
    }
    CHECK(victim.store().at(victim.store().size() - 1).value.bitwise_equal(before));
  }
}

TEST_CASE("config round-trip: serialize -> parse -> serialize is stable") {
  TrainConfig cfg = tiny_train_cfg();
  cfg.model.cca.norm = CcaNorm::Frobenius;
  cfg.model.fusion = false;
  DatasetInfo info;
  info.num_classes = 7;
  info.text_raw_dim = 9;
  const std::string text = serialize_config(cfg, info);

  TrainConfig cfg2;
  DatasetInfo info2;
  deserialize_config(text, cfg2, info2);
  CHECK(serialize_config(cfg2, info2) == text);
  CHECK(info2.num_classes == 7);
  CHECK(cfg2.model.fusion == false);
  CHECK(cfg2.model.cca.norm == CcaNorm::Frobenius);

  CHECK_THROWS_AS(apply_config_entries(parse_kv_text("bogus_key=1\n"), cfg2, info2, "test"), ContractError);
  CHECK_THROWS_AS(apply_config_entries(parse_kv_text("epochs=abc\n"), cfg2, info2, "test"), ContractError);
  CHECK_THROWS_AS(parse_kv_text("no equals sign\n"), ContractError);

  // comments and blank lines are fine
  auto kv = parse_kv_text("# comment\n\nepochs = 5 # trailing\n");
  CHECK(kv.at("epochs") == "5");
}

TEST_CASE("multi-label training smoke: loss decreases") {
  SyntheticSpec spec = tiny_data_spec(5);
  spec.multi_label = true;
  Dataset data = generate_synthetic(spec);
  TrainConfig cfg = tiny_train_cfg();
  cfg.epochs = 8;
  Model model(cfg.model, data.info);
  AdamState state = AdamState::init(model.store());
  TrainResult r = train(model, data, cfg, state);
  CHECK(r.log.back().loss_total < r.log.front().loss_total);
}
