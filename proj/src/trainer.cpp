#include "molt/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>

#include "molt/rng.hpp"

namespace molt {

namespace {

bool prediction_correct(const Matrix& logits, const Sample& s, bool multi_label) {
  if (multi_label) {
    for (int j = 0; j < logits.cols(); ++j) {
      const bool on = logits(0, j) >= 0.0;
      if (on != (s.label_bits[j] != 0)) return false;
    }
    return true;
  }
  int best = 0;
  for (int j = 1; j < logits.cols(); ++j)
    if (logits(0, j) > logits(0, best)) best = j;
  return best == s.label;
}

}  // namespace

TrainResult train(Model& model, const Dataset& data, const TrainConfig& cfg, AdamState& state, int start_epoch) {
  if (data.samples.empty()) throw ContractError("train: dataset is empty");
  if (cfg.batch_size < 1) throw ContractError("train: batch_size must be >= 1");
  if (cfg.epochs < start_epoch) throw ContractError("train: start_epoch beyond configured epochs");
  if (model.multi_label() != data.info.multi_label) {
    throw ContractError("train: model and dataset disagree on task mode");
  }

  // Frozen encodings never change during training; compute them once.
  std::vector<EncodedSample> encoded;
  encoded.reserve(data.samples.size());
  for (const Sample& s : data.samples) encoded.push_back(model.encode_sample(s));

  const int n = data.size();
  std::vector<int> order(n);
  TrainResult result;
  result.log.reserve(cfg.epochs - start_epoch);

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng::stream(cfg.seed, fnv1a_str("train.shuffle"), static_cast<uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double sum_total = 0.0, sum_ce = 0.0, sum_cca = 0.0;
    long correct = 0;

    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int end = std::min(begin + cfg.batch_size, n);
      std::vector<Model::BatchItem> batch;
      batch.reserve(end - begin);
      for (int k = begin; k < end; ++k) {
        batch.push_back(Model::BatchItem{&encoded[order[k]], &data.samples[order[k]]});
      }

      Tape tape(&model.store());
      Model::BatchGraph g = model.batch_loss(tape, batch);

      const int bsize = end - begin;
      sum_total += g.total.value()(0, 0) * bsize;
      sum_ce += g.ce.value()(0, 0) * bsize;
      if (g.cca) sum_cca += g.cca->value()(0, 0) * bsize;
      for (int k = 0; k < bsize; ++k) {
        if (prediction_correct(g.logits[k].value(), *batch[k].sample, model.multi_label())) ++correct;
      }
      result.step_losses.push_back(g.total.value()(0, 0));

      tape.backward(g.total);
      adam_step(model.store(), state, cfg.adam);
    }

    EpochLog row;
    row.epoch = epoch + 1;
    row.loss_total = sum_total / n;
    row.loss_ce = sum_ce / n;
    row.loss_cca = sum_cca / n;
    row.train_acc = static_cast<double>(correct) / n;
    result.log.push_back(row);
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss_total,loss_ce,loss_cca,train_acc\n";
  char buf[160];
  for (const EpochLog& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.6f\n", row.epoch, row.loss_total, row.loss_ce, row.loss_cca,
                  row.train_acc);
    out += buf;
  }
  return out;
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << training_log_csv(log);
}

double evaluate_accuracy(const Model& model, const Dataset& data, Absence absence) {
  if (data.samples.empty()) throw ContractError("evaluate_accuracy: dataset is empty");
  long correct = 0;
  const int n = data.size();
  std::vector<char> ok(n, 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const EncodedSample enc = model.encode_sample(data.samples[i]);
    const Matrix logits = model.logits_value(enc, absence);
    ok[i] = prediction_correct(logits, data.samples[i], model.multi_label()) ? 1 : 0;
  }
  for (int i = 0; i < n; ++i) correct += ok[i];
  return static_cast<double>(correct) / n;
}

}  // namespace molt
