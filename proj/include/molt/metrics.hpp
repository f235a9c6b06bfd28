#pragma once

#include <cstdint>
#include <vector>

namespace molt {

struct MetricsEntry {
  double accuracy = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  int n = 0;
};

// Single-label: accuracy is the exact-match fraction; per-class F1 from
// argmax predictions. F1-micro pools TP/FP/FN over classes (and therefore
// equals accuracy here); F1-macro averages per-class F1 with 0 for classes
// that have neither positives nor predictions.
MetricsEntry compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels, int num_classes);

// Multi-label: predictions are thresholded bit vectors; accuracy is exact
// set match.
MetricsEntry compute_metrics_multilabel(const std::vector<std::vector<uint8_t>>& predictions,
                                        const std::vector<std::vector<uint8_t>>& labels);

}  // namespace molt
