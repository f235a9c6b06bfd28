// Command-line front end: synthetic data generation, training, scenario
// evaluation, the ablation grid and the paired robustness protocol.
//
// Exit codes: 0 success, 2 usage, 3 missing/unreadable file, 4 malformed
// file or config, 5 internal error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "molt/checkpoint.hpp"
#include "molt/embedding_io.hpp"
#include "molt/kernels.hpp"
#include "molt/robustness.hpp"
#include "molt/trainer.hpp"

namespace fs = std::filesystem;
using namespace molt;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitMalformed = 4;
constexpr int kExitInternal = 5;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) throw ContractError("an output directory (--out) is required");
  fs::create_directories(dir);
}

struct LoadedModel {
  TrainConfig cfg;
  DatasetInfo info;
  std::unique_ptr<Model> model;
  AdamState state;
  CheckpointMeta meta;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel lm;
  lm.meta = peek_checkpoint(path);
  deserialize_config(lm.meta.config_text, lm.cfg, lm.info);
  lm.model = std::make_unique<Model>(lm.cfg.model, lm.info);
  lm.state = AdamState::init(lm.model->store());
  load_checkpoint(path, lm.model->store(), lm.state);
  return lm;
}

void check_data_compat(const DatasetInfo& model_info, const DatasetInfo& data_info) {
  if (model_info.num_classes != data_info.num_classes || model_info.multi_label != data_info.multi_label ||
      model_info.image_tokens != data_info.image_tokens || model_info.text_tokens != data_info.text_tokens ||
      model_info.image_raw_dim != data_info.image_raw_dim || model_info.text_raw_dim != data_info.text_raw_dim ||
      model_info.precomputed_layers != data_info.precomputed_layers) {
    throw ContractError("dataset shape does not match the shape the checkpointed model was trained on");
  }
}

struct TrainOutputs {
  std::string checkpoint;
  double final_train_acc = 0.0;
};

TrainOutputs run_training(const TrainConfig& cfg, const Dataset& data, const std::string& out_dir, bool quiet) {
  Model model(cfg.model, data.info);
  AdamState state = AdamState::init(model.store());
  TrainResult result = train(model, data, cfg, state);

  const std::string config_text = serialize_config(cfg, data.info);
  TrainOutputs outs;
  outs.checkpoint = out_dir + "/model.molc";
  save_checkpoint(outs.checkpoint, model.store(), state, config_text, cfg.epochs);
  write_training_log(out_dir + "/train_log.csv", result.log);
  write_text(out_dir + "/config.txt", config_text);
  if (!result.log.empty()) outs.final_train_acc = result.log.back().train_acc;
  if (!quiet) {
    std::printf("trained %d epochs; final loss %.6f, train accuracy %.4f\n", cfg.epochs,
                result.log.empty() ? 0.0 : result.log.back().loss_total, outs.final_train_acc);
    std::printf("checkpoint: %s\n", outs.checkpoint.c_str());
  }
  return outs;
}

TrainConfig assemble_config(const std::string& config_file, const std::vector<std::string>& overrides,
                            DatasetInfo& info) {
  TrainConfig cfg;
  if (!config_file.empty()) apply_config_entries(read_kv_file(config_file), cfg, info, config_file);
  std::map<std::string, std::string> kv;
  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos) throw ContractError("override '" + ov + "' is not key=value");
    kv[ov.substr(0, eq)] = ov.substr(eq + 1);
  }
  apply_config_entries(kv, cfg, info, "--set");
  return cfg;
}

std::vector<EvalScenario> robustness_grid(uint64_t seed) {
  std::vector<EvalScenario> grid = {EvalScenario::clean(), EvalScenario::absent(Modality::Text),
                                    EvalScenario::absent(Modality::Image)};
  for (double p : {0.01, 0.05, 0.10, 0.20}) grid.push_back(EvalScenario::noise(p, seed));
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust multimodal representation tuning at desk scale"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic paired-modality dataset");
  SyntheticSpec spec;
  std::string gen_out;
  gen->add_option("--seed", spec.seed, "Sample-draw seed");
  gen->add_option("--world-seed", spec.world_seed, "Cluster-geometry seed (shared across splits)");
  gen->add_option("--classes", spec.num_classes, "Number of classes");
  gen->add_option("--samples", spec.num_samples, "Number of samples");
  gen->add_option("--clusters", spec.clusters_per_modality, "Clusters per modality (0 = 2*classes)");
  gen->add_option("--redundancy", spec.redundancy, "Dominant-pairing probability (single-modality ceiling)");
  gen->add_option("--noise", spec.feature_noise, "Within-cluster feature noise");
  gen->add_option("--image-tokens", spec.image_tokens, "Image token count");
  gen->add_option("--image-raw-dim", spec.image_raw_dim, "Raw image feature width");
  gen->add_option("--text-tokens", spec.text_tokens, "Text token count");
  gen->add_option("--text-raw-dim", spec.text_raw_dim, "Raw text feature width");
  gen->add_flag("--multi-label", spec.multi_label, "Emit multi-hot labels");
  bool unimodal = false;
  gen->add_flag("--no-cross-modal", unimodal, "Let each modality determine the label alone");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a dataset directory");
  std::string tr_data, tr_out, tr_config, tr_resume;
  std::vector<std::string> tr_overrides;
  tr->add_option("--data", tr_data, "Dataset directory (image.mol1 + text.mol1)")->required();
  tr->add_option("--out", tr_out, "Output directory")->required();
  tr->add_option("--config", tr_config, "key=value config file");
  tr->add_option("--set", tr_overrides, "Config overrides, key=value (repeatable)");
  tr->add_option("--resume", tr_resume, "Checkpoint to resume from");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint under scenarios");
  std::string ev_model, ev_data, ev_out;
  std::vector<std::string> ev_scenarios;
  ev->add_option("--model", ev_model, "Checkpoint file")->required();
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--out", ev_out, "Output directory")->required();
  ev->add_option("--scenario", ev_scenarios,
                 "clean | text-absent | image-absent | noise:p=0.05[,target=both][,seed=0] (repeatable)");

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train and evaluate the ablation toggle grid");
  std::string ab_train, ab_eval, ab_out, ab_config;
  std::vector<std::string> ab_overrides;
  std::vector<uint64_t> ab_seeds = {1, 2, 3};
  ab->add_option("--data", ab_train, "Training dataset directory")->required();
  ab->add_option("--eval-data", ab_eval, "Held-out dataset directory")->required();
  ab->add_option("--out", ab_out, "Output directory")->required();
  ab->add_option("--config", ab_config, "key=value config file");
  ab->add_option("--set", ab_overrides, "Config overrides (repeatable)");
  ab->add_option("--seeds", ab_seeds, "Run seeds");

  // robust
  auto* rb = app.add_subcommand("robust", "Paired model/baseline robustness protocol");
  std::string rb_model, rb_baseline, rb_data, rb_out;
  uint64_t rb_seed = 1;
  rb->add_option("--model", rb_model, "Full-model checkpoint")->required();
  rb->add_option("--baseline", rb_baseline, "Baseline checkpoint")->required();
  rb->add_option("--data", rb_data, "Evaluation dataset directory")->required();
  rb->add_option("--out", rb_out, "Output directory")->required();
  rb->add_option("--noise-seed", rb_seed, "Noise seed for the scenario grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    kernels::set_num_threads(threads);

    if (gen->parsed()) {
      spec.cross_modal = !unimodal;
      ensure_out_dir(gen_out);
      Dataset ds = generate_synthetic(spec);
      save_embeddings(ds, gen_out);
      std::printf("wrote %d samples (%d classes) to %s\n", ds.size(), ds.info.num_classes, gen_out.c_str());
      return 0;
    }

    if (tr->parsed()) {
      ensure_out_dir(tr_out);
      Dataset data = load_embeddings(tr_data);
      DatasetInfo info = data.info;
      TrainConfig cfg = assemble_config(tr_config, tr_overrides, info);
      check_data_compat(info, data.info);
      if (cfg.model.init_seed == 0) cfg.model.init_seed = cfg.seed;

      if (!tr_resume.empty()) {
        LoadedModel lm = load_model(tr_resume);
        const std::string expect = serialize_config(cfg, data.info);
        // Everything except the run length must match; extending epochs is
        // the whole point of resuming.
        TrainConfig stored_cfg = lm.cfg;
        TrainConfig want_cfg = cfg;
        stored_cfg.epochs = 0;
        want_cfg.epochs = 0;
        const uint64_t stored_hash = config_hash(serialize_config(stored_cfg, lm.info));
        const uint64_t want_hash = config_hash(serialize_config(want_cfg, data.info));
        if (stored_hash != want_hash) {
          throw FormatError(FormatError::Kind::ConfigHashMismatch,
                            "resume refused: checkpoint config hash " + hash_hex(stored_hash) +
                                " differs from requested " + hash_hex(want_hash) + " (epochs excluded)");
        }
        TrainResult result = train(*lm.model, data, cfg, lm.state, lm.meta.epochs_completed);
        save_checkpoint(tr_out + "/model.molc", lm.model->store(), lm.state, expect, cfg.epochs);
        write_training_log(tr_out + "/train_log.csv", result.log);
        write_text(tr_out + "/config.txt", expect);
        std::printf("resumed at epoch %d, trained to %d\n", lm.meta.epochs_completed, cfg.epochs);
        return 0;
      }
      run_training(cfg, data, tr_out, false);
      return 0;
    }

    if (ev->parsed()) {
      ensure_out_dir(ev_out);
      LoadedModel lm = load_model(ev_model);
      Dataset data = load_embeddings(ev_data);
      check_data_compat(lm.info, data.info);
      if (ev_scenarios.empty()) ev_scenarios.push_back("clean");
      std::vector<EvalScenario> scenarios;
      for (const std::string& s : ev_scenarios) scenarios.push_back(EvalScenario::parse(s));
      MetricsReport report = run_scenarios(*lm.model, data, scenarios, hash_hex(lm.meta.config_hash));
      write_text(ev_out + "/report.json", report_json(report));
      write_text(ev_out + "/report.csv", report_csv(report));
      std::printf("%s\n", report_csv(report).c_str());
      return 0;
    }

    if (ab->parsed()) {
      ensure_out_dir(ab_out);
      Dataset data = load_embeddings(ab_train);
      Dataset held_out = load_embeddings(ab_eval);
      DatasetInfo info = data.info;
      TrainConfig base_cfg = assemble_config(ab_config, ab_overrides, info);
      check_data_compat(info, data.info);

      struct Row {
        const char* name;
        void (*toggle)(ModelConfig&);
      };
      const Row rows[] = {
          {"full", [](ModelConfig&) {}},
          {"no_cross_attention", [](ModelConfig& m) { m.cross_attention = false; }},
          {"no_cca_loss", [](ModelConfig& m) { m.cca_enabled = false; }},
          {"no_learnable_m", [](ModelConfig& m) { m.learnable_mix = false; }},
          {"no_fusion", [](ModelConfig& m) { m.fusion = false; }},
          {"no_fbp", [](ModelConfig& m) { m.fbp = false; }},
      };

      std::string csv = "variant,seed,train_acc,heldout_acc\n";
      std::printf("variant,seed,train_acc,heldout_acc\n");
      for (const Row& row : rows) {
        for (uint64_t seed : ab_seeds) {
          TrainConfig cfg = base_cfg;
          cfg.seed = seed;
          cfg.model.init_seed = seed;
          row.toggle(cfg.model);
          Model model(cfg.model, data.info);
          AdamState state = AdamState::init(model.store());
          TrainResult result = train(model, data, cfg, state);
          const double heldout = evaluate_accuracy(model, held_out);
          char line[160];
          std::snprintf(line, sizeof(line), "%s,%llu,%.6f,%.6f\n", row.name,
                        static_cast<unsigned long long>(seed), result.log.back().train_acc, heldout);
          csv += line;
          std::printf("%s", line);
        }
      }
      write_text(ab_out + "/ablation_report.csv", csv);
      return 0;
    }

    if (rb->parsed()) {
      ensure_out_dir(rb_out);
      LoadedModel ours = load_model(rb_model);
      LoadedModel base = load_model(rb_baseline);
      if (!base.cfg.model.baseline) {
        throw ContractError("--baseline checkpoint was not trained with baseline=1");
      }
      Dataset data = load_embeddings(rb_data);
      check_data_compat(ours.info, data.info);
      check_data_compat(base.info, data.info);

      const auto grid = robustness_grid(rb_seed);
      MetricsReport ours_report = run_scenarios(*ours.model, data, grid, hash_hex(ours.meta.config_hash));
      MetricsReport base_report = run_scenarios(*base.model, data, grid, hash_hex(base.meta.config_hash));
      write_text(rb_out + "/robustness.json", paired_report_json(ours_report, base_report));
      write_text(rb_out + "/robustness.csv", paired_report_csv(ours_report, base_report));
      std::printf("%s", paired_report_csv(ours_report, base_report).c_str());
      return 0;
    }

    return kExitUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitMissingFile;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitMalformed;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitMalformed;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitMalformed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
