#include "molt/robustness.hpp"

#include <cmath>
#include <cstdio>

#include "molt/rng.hpp"

namespace molt {

const char* scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Clean: return "clean";
    case ScenarioKind::TextAbsent: return "text_absent";
    case ScenarioKind::ImageAbsent: return "image_absent";
    default: return "noise";
  }
}

EvalScenario EvalScenario::clean() { return EvalScenario{}; }

EvalScenario EvalScenario::absent(Modality missing) {
  EvalScenario s;
  s.kind = missing == Modality::Text ? ScenarioKind::TextAbsent : ScenarioKind::ImageAbsent;
  return s;
}

EvalScenario EvalScenario::noise(double p, uint64_t seed, NoiseTarget target) {
  EvalScenario s;
  s.kind = ScenarioKind::Noise;
  s.noise_fraction = p;
  s.seed = seed;
  s.target = target;
  return s;
}

EvalScenario EvalScenario::parse(const std::string& text) {
  if (text == "clean") return clean();
  if (text == "text-absent") return absent(Modality::Text);
  if (text == "image-absent") return absent(Modality::Image);
  if (text.rfind("noise:", 0) == 0) {
    EvalScenario s;
    s.kind = ScenarioKind::Noise;
    bool have_p = false;
    std::string rest = text.substr(6);
    while (!rest.empty()) {
      const size_t comma = rest.find(',');
      const std::string field = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      const size_t eq = field.find('=');
      if (eq == std::string::npos) throw ContractError("scenario field '" + field + "' is not key=value");
      const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
      try {
        if (key == "p") {
          s.noise_fraction = std::stod(val);
          have_p = true;
        } else if (key == "seed") {
          s.seed = std::stoull(val);
        } else if (key == "target") {
          if (val == "image") s.target = NoiseTarget::Image;
          else if (val == "text") s.target = NoiseTarget::Text;
          else if (val == "both") s.target = NoiseTarget::Both;
          else throw ContractError("noise target must be image|text|both, got '" + val + "'");
        } else {
          throw ContractError("unknown scenario field '" + key + "'");
        }
      } catch (const ContractError&) {
        throw;
      } catch (const std::exception&) {
        throw ContractError("scenario field '" + field + "' has a malformed value");
      }
    }
    if (!have_p) throw ContractError("noise scenario requires p=<fraction>");
    if (s.noise_fraction < 0.0) throw ContractError("noise fraction must be >= 0");
    return s;
  }
  throw ContractError("unknown scenario '" + text + "' (use clean|text-absent|image-absent|noise:p=...)");
}

std::vector<double> per_feature_std(const Dataset& data, Modality modality) {
  if (data.samples.empty()) throw ContractError("per_feature_std: dataset is empty");
  const bool image = modality == Modality::Image;
  const int dim = image ? data.info.image_raw_dim : data.info.text_raw_dim;
  std::vector<double> mean(dim, 0.0), sq(dim, 0.0);
  long rows = 0;
  for (const Sample& s : data.samples) {
    const Matrix& f = image ? s.image_features : s.text_features;
    for (int i = 0; i < f.rows(); ++i) {
      for (int j = 0; j < dim; ++j) {
        mean[j] += f(i, j);
        sq[j] += f(i, j) * f(i, j);
      }
      ++rows;
    }
  }
  std::vector<double> out(dim);
  for (int j = 0; j < dim; ++j) {
    const double m = mean[j] / rows;
    out[j] = std::sqrt(std::max(sq[j] / rows - m * m, 0.0));
  }
  return out;
}

Matrix inject_noise(const Matrix& features, double p, const std::vector<double>& feature_std, uint64_t seed) {
  if (p < 0.0) throw ContractError("inject_noise: p must be >= 0");
  if (p == 0.0) return features;
  if (static_cast<int>(feature_std.size()) != features.cols()) {
    throw ShapeError("inject_noise: " + std::to_string(feature_std.size()) + " stds for " +
                     std::to_string(features.cols()) + " feature columns");
  }
  Rng rng(seed);
  Matrix out = features;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += p * feature_std[j] * rng.next_gaussian();
  return out;
}

MetricsReport run_scenarios(const Model& model, const Dataset& data, const std::vector<EvalScenario>& scenarios,
                            const std::string& config_hash_hex) {
  if (scenarios.empty()) throw ContractError("run_scenarios: no scenarios given");
  if (data.samples.empty()) throw ContractError("run_scenarios: dataset is empty");

  const int n = data.size();
  const bool multi = model.multi_label();

  std::vector<double> img_std, txt_std;
  bool need_noise = false;
  for (const EvalScenario& s : scenarios) need_noise |= s.kind == ScenarioKind::Noise && s.noise_fraction > 0.0;
  if (need_noise) {
    if (data.info.precomputed_layers > 0) {
      throw ContractError("run_scenarios: noise injection needs raw features, dataset has precomputed layers");
    }
    img_std = per_feature_std(data, Modality::Image);
    txt_std = per_feature_std(data, Modality::Text);
  }

  MetricsReport report;
  report.config_hash_hex = config_hash_hex;

  for (const EvalScenario& sc : scenarios) {
    Absence absence = Absence::None;
    if (sc.kind == ScenarioKind::TextAbsent) absence = Absence::Text;
    if (sc.kind == ScenarioKind::ImageAbsent) absence = Absence::Image;
    const bool noisy = sc.kind == ScenarioKind::Noise && sc.noise_fraction > 0.0;
    const bool noise_img = noisy && sc.target != NoiseTarget::Text;
    const bool noise_txt = noisy && sc.target != NoiseTarget::Image;

    std::vector<int> preds(n), labels(n);
    std::vector<std::vector<uint8_t>> pred_bits(multi ? n : 0), label_bits(multi ? n : 0);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      const Sample& s = data.samples[i];
      EncodedSample enc;
      if (noise_img || noise_txt) {
        Sample noised = s;
        if (noise_img) {
          noised.image_features = inject_noise(s.image_features, sc.noise_fraction, img_std,
                                               Rng::stream(sc.seed, fnv1a_str("noise.image"), i).next_u64());
        }
        if (noise_txt) {
          noised.text_features = inject_noise(s.text_features, sc.noise_fraction, txt_std,
                                              Rng::stream(sc.seed, fnv1a_str("noise.text"), i).next_u64());
        }
        enc = model.encode_sample(noised);
      } else {
        enc = model.encode_sample(s);
      }
      if (multi) {
        pred_bits[i] = model.predict_bits(enc, absence);
        label_bits[i] = s.label_bits;
      } else {
        preds[i] = model.predict(enc, absence);
        labels[i] = s.label;
      }
    }

    ScenarioResult row;
    row.scenario = sc;
    row.metrics = multi ? compute_metrics_multilabel(pred_bits, label_bits)
                        : compute_metrics(preds, labels, model.num_classes());
    report.rows.push_back(row);
  }
  return report;
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void append_rows_json(std::string& out, const MetricsReport& r) {
  out += "[";
  for (size_t i = 0; i < r.rows.size(); ++i) {
    const ScenarioResult& row = r.rows[i];
    if (i) out += ",";
    out += "{\"accuracy\":" + fmt6(row.metrics.accuracy);
    out += ",\"f1_macro\":" + fmt6(row.metrics.f1_macro);
    out += ",\"f1_micro\":" + fmt6(row.metrics.f1_micro);
    out += ",\"kind\":\"" + std::string(scenario_kind_name(row.scenario.kind)) + "\"";
    out += ",\"n\":" + std::to_string(row.metrics.n);
    out += ",\"p\":" + fmt6(row.scenario.noise_fraction);
    out += "}";
  }
  out += "]";
}

void append_rows_csv(std::string& out, const MetricsReport& r, const char* model_tag) {
  for (const ScenarioResult& row : r.rows) {
    if (model_tag) {
      out += model_tag;
      out += ",";
    }
    out += std::string(scenario_kind_name(row.scenario.kind)) + "," + fmt6(row.scenario.noise_fraction) + "," +
           fmt6(row.metrics.accuracy) + "," + fmt6(row.metrics.f1_micro) + "," + fmt6(row.metrics.f1_macro) + "," +
           std::to_string(row.metrics.n) + "\n";
  }
}

}  // namespace

std::string report_json(const MetricsReport& report) {
  std::string out = "{\"config_hash\":\"" + report.config_hash_hex + "\",\"scenarios\":";
  append_rows_json(out, report);
  out += "}";
  return out;
}

std::string report_csv(const MetricsReport& report) {
  std::string out = "kind,p,accuracy,f1_micro,f1_macro,n\n";
  append_rows_csv(out, report, nullptr);
  return out;
}

std::string paired_report_json(const MetricsReport& ours, const MetricsReport& baseline) {
  std::string out = "{\"baseline\":" + report_json(baseline) + ",\"ours\":" + report_json(ours) + "}";
  return out;
}

std::string paired_report_csv(const MetricsReport& ours, const MetricsReport& baseline) {
  std::string out = "model,kind,p,accuracy,f1_micro,f1_macro,n\n";
  append_rows_csv(out, baseline, "baseline");
  append_rows_csv(out, ours, "ours");
  return out;
}

std::string hash_hex(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace molt
