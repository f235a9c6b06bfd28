#pragma once

#include <string>

#include "molt/metrics.hpp"
#include "molt/model.hpp"

namespace molt {

enum class ScenarioKind { Clean, TextAbsent, ImageAbsent, Noise };
enum class NoiseTarget { Image, Text, Both };

const char* scenario_kind_name(ScenarioKind k);

struct EvalScenario {
  ScenarioKind kind = ScenarioKind::Clean;
  double noise_fraction = 0.0;        // p; meaningful for kind == Noise
  NoiseTarget target = NoiseTarget::Both;
  uint64_t seed = 0;

  static EvalScenario clean();
  static EvalScenario absent(Modality missing);
  static EvalScenario noise(double p, uint64_t seed, NoiseTarget target = NoiseTarget::Both);
  // "clean" | "text-absent" | "image-absent" | "noise:p=0.05[,target=image][,seed=7]"
  static EvalScenario parse(const std::string& text);
};

struct ScenarioResult {
  EvalScenario scenario;
  MetricsEntry metrics;
};

struct MetricsReport {
  std::string config_hash_hex;
  std::vector<ScenarioResult> rows;
};

// Population standard deviation of each raw feature column over every
// token of every sample in the set; the reference scale for noise.
std::vector<double> per_feature_std(const Dataset& data, Modality modality);

// features + eps with eps ~ N(0, (p * sigma_j)^2) i.i.d. per entry, sigma_j
// the per-column std passed in. Deterministic per seed; p = 0 returns the
// input bitwise.
Matrix inject_noise(const Matrix& features, double p, const std::vector<double>& feature_std, uint64_t seed);

// Evaluates every scenario over the dataset: absence runs through the
// model's translation path, noise perturbs the raw encoder inputs.
// Scenario evaluations are per-sample independent and fan out across
// threads; results are byte-stable regardless of thread count.
MetricsReport run_scenarios(const Model& model, const Dataset& data, const std::vector<EvalScenario>& scenarios,
                            const std::string& config_hash_hex);

// Deterministic serializations: keys sorted, floats at 6 decimals.
std::string report_json(const MetricsReport& report);
std::string report_csv(const MetricsReport& report);
// Paired full-model / baseline report for the robustness protocol.
std::string paired_report_json(const MetricsReport& ours, const MetricsReport& baseline);
std::string paired_report_csv(const MetricsReport& ours, const MetricsReport& baseline);

std::string hash_hex(uint64_t h);

}  // namespace molt
