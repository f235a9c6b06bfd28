#pragma once

#include "molt/config_io.hpp"

namespace molt {

struct EpochLog {
  int epoch = 0;  // 1-based
  double loss_total = 0.0;
  double loss_ce = 0.0;
  double loss_cca = 0.0;
  double train_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::vector<double> step_losses;  // total loss per optimizer step
};

// Deterministic training loop: per-epoch shuffle order, parameter init and
// updates are all pure functions of (config, dataset, seed). Resuming from
// (state, start_epoch) continues the unbroken run's stream exactly.
TrainResult train(Model& model, const Dataset& data, const TrainConfig& cfg, AdamState& state, int start_epoch = 0);

std::string training_log_csv(const std::vector<EpochLog>& log);
void write_training_log(const std::string& path, const std::vector<EpochLog>& log);

// Clean accuracy of a trained model over a dataset.
double evaluate_accuracy(const Model& model, const Dataset& data, Absence absence = Absence::None);

}  // namespace molt
