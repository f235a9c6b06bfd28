#include "molt/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace molt {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v, const std::string& source) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ContractError(source + ": value '" + v + "' for key '" + key + "' is not a number");
  }
}

long long parse_int(const std::string& key, const std::string& v, const std::string& source) {
  try {
    size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ContractError(source + ": value '" + v + "' for key '" + key + "' is not an integer");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v, const std::string& source) {
  try {
    size_t pos = 0;
    const uint64_t i = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ContractError(source + ": value '" + v + "' for key '" + key + "' is not an unsigned integer");
  }
}

bool parse_bool(const std::string& key, const std::string& v, const std::string& source) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ContractError(source + ": value '" + v + "' for key '" + key + "' is not a boolean (use 0/1)");
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError("config line " + std::to_string(lineno) + " is not key=value: '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ContractError("config line " + std::to_string(lineno) + " has an empty key");
    out[key] = val;
  }
  return out;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_kv_text(text);
}

void apply_config_entries(const std::map<std::string, std::string>& entries, TrainConfig& cfg, DatasetInfo& info,
                          const std::string& source) {
  for (const auto& [key, v] : entries) {
    if (key == "common_dim") cfg.model.common_dim = static_cast<int>(parse_int(key, v, source));
    else if (key == "selected_layers") cfg.model.selected_layers = static_cast<int>(parse_int(key, v, source));
    else if (key == "fbp_stride") cfg.model.fbp_stride = static_cast<int>(parse_int(key, v, source));
    else if (key == "encoder_depth") cfg.model.encoder_depth = static_cast<int>(parse_int(key, v, source));
    else if (key == "image_dim") cfg.model.image_dim = static_cast<int>(parse_int(key, v, source));
    else if (key == "text_dim") cfg.model.text_dim = static_cast<int>(parse_int(key, v, source));
    else if (key == "encoder_seed") cfg.model.encoder_seed = parse_u64(key, v, source);
    else if (key == "init_seed") cfg.model.init_seed = parse_u64(key, v, source);
    else if (key == "cross_attention") cfg.model.cross_attention = parse_bool(key, v, source);
    else if (key == "cca_loss") cfg.model.cca_enabled = parse_bool(key, v, source);
    else if (key == "learnable_m") cfg.model.learnable_mix = parse_bool(key, v, source);
    else if (key == "fusion") cfg.model.fusion = parse_bool(key, v, source);
    else if (key == "fbp") cfg.model.fbp = parse_bool(key, v, source);
    else if (key == "baseline") cfg.model.baseline = parse_bool(key, v, source);
    else if (key == "alpha") cfg.model.weights.alpha = parse_double(key, v, source);
    else if (key == "beta") cfg.model.weights.beta = parse_double(key, v, source);
    else if (key == "cca_ridge") cfg.model.cca.ridge = parse_double(key, v, source);
    else if (key == "cca_eig_floor") cfg.model.cca.eig_floor = parse_double(key, v, source);
    else if (key == "cca_norm") {
      if (v == "trace") cfg.model.cca.norm = CcaNorm::TraceNorm;
      else if (v == "frobenius") cfg.model.cca.norm = CcaNorm::Frobenius;
      else throw ContractError(source + ": cca_norm must be 'trace' or 'frobenius', got '" + v + "'");
    }
    else if (key == "learning_rate") cfg.adam.learning_rate = parse_double(key, v, source);
    else if (key == "adam_beta1") cfg.adam.beta1 = parse_double(key, v, source);
    else if (key == "adam_beta2") cfg.adam.beta2 = parse_double(key, v, source);
    else if (key == "adam_eps") cfg.adam.eps = parse_double(key, v, source);
    else if (key == "grad_clip") cfg.adam.grad_clip = parse_double(key, v, source);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(key, v, source));
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(key, v, source));
    else if (key == "seed") cfg.seed = parse_u64(key, v, source);
    else if (key == "num_classes") info.num_classes = static_cast<int>(parse_int(key, v, source));
    else if (key == "multi_label") info.multi_label = parse_bool(key, v, source);
    else if (key == "image_tokens") info.image_tokens = static_cast<int>(parse_int(key, v, source));
    else if (key == "image_raw_dim") info.image_raw_dim = static_cast<int>(parse_int(key, v, source));
    else if (key == "text_tokens") info.text_tokens = static_cast<int>(parse_int(key, v, source));
    else if (key == "text_raw_dim") info.text_raw_dim = static_cast<int>(parse_int(key, v, source));
    else if (key == "precomputed_layers") info.precomputed_layers = static_cast<int>(parse_int(key, v, source));
    else if (key == "image_layer_dim") info.image_layer_dim = static_cast<int>(parse_int(key, v, source));
    else if (key == "text_layer_dim") info.text_layer_dim = static_cast<int>(parse_int(key, v, source));
    else throw ContractError(source + ": unknown config key '" + key + "'");
  }
}

std::string serialize_config(const TrainConfig& cfg, const DatasetInfo& info) {
  std::map<std::string, std::string> kv;
  kv["common_dim"] = std::to_string(cfg.model.common_dim);
  kv["selected_layers"] = std::to_string(cfg.model.selected_layers);
  kv["fbp_stride"] = std::to_string(cfg.model.fbp_stride);
  kv["encoder_depth"] = std::to_string(cfg.model.encoder_depth);
  kv["image_dim"] = std::to_string(cfg.model.image_dim);
  kv["text_dim"] = std::to_string(cfg.model.text_dim);
  kv["encoder_seed"] = std::to_string(cfg.model.encoder_seed);
  kv["init_seed"] = std::to_string(cfg.model.init_seed);
  kv["cross_attention"] = cfg.model.cross_attention ? "1" : "0";
  kv["cca_loss"] = cfg.model.cca_enabled ? "1" : "0";
  kv["learnable_m"] = cfg.model.learnable_mix ? "1" : "0";
  kv["fusion"] = cfg.model.fusion ? "1" : "0";
  kv["fbp"] = cfg.model.fbp ? "1" : "0";
  kv["baseline"] = cfg.model.baseline ? "1" : "0";
  kv["alpha"] = fmt_double(cfg.model.weights.alpha);
  kv["beta"] = fmt_double(cfg.model.weights.beta);
  kv["cca_ridge"] = fmt_double(cfg.model.cca.ridge);
  kv["cca_eig_floor"] = fmt_double(cfg.model.cca.eig_floor);
  kv["cca_norm"] = cfg.model.cca.norm == CcaNorm::TraceNorm ? "trace" : "frobenius";
  kv["learning_rate"] = fmt_double(cfg.adam.learning_rate);
  kv["adam_beta1"] = fmt_double(cfg.adam.beta1);
  kv["adam_beta2"] = fmt_double(cfg.adam.beta2);
  kv["adam_eps"] = fmt_double(cfg.adam.eps);
  kv["grad_clip"] = fmt_double(cfg.adam.grad_clip);
  kv["batch_size"] = std::to_string(cfg.batch_size);
  kv["epochs"] = std::to_string(cfg.epochs);
  kv["seed"] = std::to_string(cfg.seed);
  kv["num_classes"] = std::to_string(info.num_classes);
  kv["multi_label"] = info.multi_label ? "1" : "0";
  kv["image_tokens"] = std::to_string(info.image_tokens);
  kv["image_raw_dim"] = std::to_string(info.image_raw_dim);
  kv["text_tokens"] = std::to_string(info.text_tokens);
  kv["text_raw_dim"] = std::to_string(info.text_raw_dim);
  kv["precomputed_layers"] = std::to_string(info.precomputed_layers);
  kv["image_layer_dim"] = std::to_string(info.image_layer_dim);
  kv["text_layer_dim"] = std::to_string(info.text_layer_dim);

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

uint64_t config_hash(const std::string& canonical_text) {
  return fnv1a(canonical_text.data(), canonical_text.size());
}

void deserialize_config(const std::string& text, TrainConfig& cfg, DatasetInfo& info) {
  apply_config_entries(parse_kv_text(text), cfg, info, "checkpoint config");
}

}  // namespace molt
