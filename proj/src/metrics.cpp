#include "molt/metrics.hpp"

#include "molt/errors.hpp"

namespace molt {

namespace {

MetricsEntry from_counts(const std::vector<long>& tp, const std::vector<long>& fp, const std::vector<long>& fn,
                         long exact_match, int n) {
  MetricsEntry e;
  e.n = n;
  e.accuracy = static_cast<double>(exact_match) / n;

  long tp_sum = 0, fp_sum = 0, fn_sum = 0;
  double macro = 0.0;
  const int c = static_cast<int>(tp.size());
  for (int k = 0; k < c; ++k) {
    tp_sum += tp[k];
    fp_sum += fp[k];
    fn_sum += fn[k];
    const long denom = 2 * tp[k] + fp[k] + fn[k];
    macro += denom == 0 ? 0.0 : 2.0 * tp[k] / static_cast<double>(denom);
  }
  const long micro_denom = 2 * tp_sum + fp_sum + fn_sum;
  e.f1_micro = micro_denom == 0 ? 0.0 : 2.0 * tp_sum / static_cast<double>(micro_denom);
  e.f1_macro = macro / c;
  return e;
}

}  // namespace

MetricsEntry compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels, int num_classes) {
  if (predictions.empty()) throw ContractError("compute_metrics: empty input");
  if (predictions.size() != labels.size()) {
    throw ContractError("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
  }
  std::vector<long> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  long exact = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if (p < 0 || p >= num_classes || y < 0 || y >= num_classes) {
      throw ContractError("compute_metrics: class index out of range");
    }
    if (p == y) {
      ++tp[y];
      ++exact;
    } else {
      ++fp[p];
      ++fn[y];
    }
  }
  return from_counts(tp, fp, fn, exact, static_cast<int>(predictions.size()));
}

MetricsEntry compute_metrics_multilabel(const std::vector<std::vector<uint8_t>>& predictions,
                                        const std::vector<std::vector<uint8_t>>& labels) {
  if (predictions.empty()) throw ContractError("compute_metrics_multilabel: empty input");
  if (predictions.size() != labels.size()) {
    throw ContractError("compute_metrics_multilabel: prediction/label count mismatch");
  }
  const size_t c = predictions[0].size();
  std::vector<long> tp(c, 0), fp(c, 0), fn(c, 0);
  long exact = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != c || labels[i].size() != c) {
      throw ContractError("compute_metrics_multilabel: inconsistent class counts");
    }
    bool all_match = true;
    for (size_t k = 0; k < c; ++k) {
      const bool p = predictions[i][k] != 0, y = labels[i][k] != 0;
      if (p && y) ++tp[k];
      else if (p && !y) ++fp[k];
      else if (!p && y) ++fn[k];
      if (p != y) all_match = false;
    }
    if (all_match) ++exact;
  }
  return from_counts(tp, fp, fn, exact, static_cast<int>(predictions.size()));
}

}  // namespace molt
