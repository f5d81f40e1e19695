#include "dfdrnn/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "dfdrnn/error.hpp"

namespace dfdrnn {

using nlohmann::json;

namespace {

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::size_t as_count(const json& v, const std::string& key) {
  if (!non_negative_integer(v)) throw ConfigError("'" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

std::string as_text(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
  return v.get<std::string>();
}

bool as_flag(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
  return v.get<bool>();
}

using Setter = std::function<void(RunConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset", [](RunConfig& c, const json& v, const std::string& k) { c.dataset = as_text(v, k); }},
      {"k", [](RunConfig& c, const json& v, const std::string& k) { c.model.k = as_count(v, k); }},
      {"layers", [](RunConfig& c, const json& v, const std::string& k) { c.model.layers = as_count(v, k); }},
      {"heads", [](RunConfig& c, const json& v, const std::string& k) { c.model.heads = as_count(v, k); }},
      {"dropout", [](RunConfig& c, const json& v, const std::string& k) { c.model.dropout = as_real(v, k); }},
      {"edge_dropout",
       [](RunConfig& c, const json& v, const std::string& k) { c.model.edge_dropout = as_real(v, k); }},
      {"top_t", [](RunConfig& c, const json& v, const std::string& k) { c.model.top_t = as_count(v, k); }},
      {"variant",
       [](RunConfig& c, const json& v, const std::string& k) { c.model.variant = parse_variant(as_text(v, k)); }},
      {"decoder",
       [](RunConfig& c, const json& v, const std::string& k) { c.model.decoder = parse_decoder(as_text(v, k)); }},
      {"lr", [](RunConfig& c, const json& v, const std::string& k) { c.train.lr = as_real(v, k); }},
      {"epochs", [](RunConfig& c, const json& v, const std::string& k) { c.train.epochs = as_count(v, k); }},
      {"seed", [](RunConfig& c, const json& v, const std::string& k) {
         if (!non_negative_integer(v)) throw ConfigError("'" + k + "' must be a non-negative integer");
         c.train.seed = v.get<std::uint64_t>();
       }},
      {"adam_beta1", [](RunConfig& c, const json& v, const std::string& k) { c.train.adam_beta1 = as_real(v, k); }},
      {"adam_beta2", [](RunConfig& c, const json& v, const std::string& k) { c.train.adam_beta2 = as_real(v, k); }},
      {"adam_eps", [](RunConfig& c, const json& v, const std::string& k) { c.train.adam_eps = as_real(v, k); }},
      {"clamp_eps", [](RunConfig& c, const json& v, const std::string& k) { c.train.clamp_eps = as_real(v, k); }},
      {"folds", [](RunConfig& c, const json& v, const std::string& k) { c.eval.folds = as_count(v, k); }},
      {"repeats", [](RunConfig& c, const json& v, const std::string& k) { c.eval.repeats = as_count(v, k); }},
      {"threads", [](RunConfig& c, const json& v, const std::string& k) { c.eval.threads = as_count(v, k); }},
      {"negatives", [](RunConfig& c, const json& v, const std::string& k) {
         const std::string s = as_text(v, k);
         if (s == "all") c.eval.negatives = NegativeMode::kAll;
         else if (s == "balanced") c.eval.negatives = NegativeMode::kBalanced;
         else throw ConfigError("'" + k + "' must be \"all\" or \"balanced\"");
       }},
      {"lambda_mode", [](RunConfig& c, const json& v, const std::string& k) {
         const std::string s = as_text(v, k);
         if (s == "per_fold") c.eval.lambda = LambdaMode::kPerFold;
         else if (s == "full_data") c.eval.lambda = LambdaMode::kFullData;
         else throw ConfigError("'" + k + "' must be \"per_fold\" or \"full_data\"");
       }},
      {"mask_features",
       [](RunConfig& c, const json& v, const std::string& k) { c.eval.mask_features = as_flag(v, k); }},
      {"t_values", [](RunConfig& c, const json& v, const std::string& k) {
         if (!v.is_array()) throw ConfigError("'" + k + "' must be an array of integers");
         c.t_values.clear();
         for (const auto& t : v) c.t_values.push_back(as_count(t, k));
       }},
      {"disease", [](RunConfig& c, const json& v, const std::string& k) { c.disease = as_text(v, k); }},
      {"top_k", [](RunConfig& c, const json& v, const std::string& k) { c.top_k = as_count(v, k); }},
      {"loocv_max_diseases",
       [](RunConfig& c, const json& v, const std::string& k) { c.loocv_max_diseases = as_count(v, k); }},
      {"checkpoint", [](RunConfig& c, const json& v, const std::string& k) { c.checkpoint = as_text(v, k); }},
      {"out", [](RunConfig& c, const json& v, const std::string& k) { c.out = as_text(v, k); }},
  };
  return table;
}

std::string_view name(NegativeMode m) { return m == NegativeMode::kAll ? "all" : "balanced"; }
std::string_view name(LambdaMode m) { return m == LambdaMode::kPerFold ? "per_fold" : "full_data"; }

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (eval.folds < 2) throw ConfigError("folds must be at least 2");
  if (eval.repeats < 1) throw ConfigError("repeats must be at least 1");
  if (eval.threads < 1) throw ConfigError("threads must be at least 1");
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  for (std::size_t t : t_values)
    if (t < 1) throw ConfigError("t_values entries must be at least 1");
}

void apply_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, value, key);
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

json to_json(const ModelConfig& c) {
  return {{"k", c.k},
          {"layers", c.layers},
          {"heads", c.heads},
          {"dropout", c.dropout},
          {"edge_dropout", c.edge_dropout},
          {"top_t", c.top_t},
          {"variant", std::string(to_string(c.variant))},
          {"decoder", std::string(to_string(c.decoder))}};
}

ModelConfig model_config_from_json(const json& j) {
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg.model;
}

json to_json(const RunConfig& c) {
  json j = to_json(c.model);
  j["dataset"] = c.dataset;
  j["lr"] = c.train.lr;
  j["epochs"] = c.train.epochs;
  j["seed"] = c.train.seed;
  j["adam_beta1"] = c.train.adam_beta1;
  j["adam_beta2"] = c.train.adam_beta2;
  j["adam_eps"] = c.train.adam_eps;
  j["clamp_eps"] = c.train.clamp_eps;
  j["folds"] = c.eval.folds;
  j["repeats"] = c.eval.repeats;
  j["threads"] = c.eval.threads;
  j["negatives"] = std::string(name(c.eval.negatives));
  j["lambda_mode"] = std::string(name(c.eval.lambda));
  j["mask_features"] = c.eval.mask_features;
  j["t_values"] = c.t_values;
  j["disease"] = c.disease;
  j["top_k"] = c.top_k;
  j["loocv_max_diseases"] = c.loocv_max_diseases;
  j["checkpoint"] = c.checkpoint;
  j["out"] = c.out;
  return j;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("out");
  j.erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

}  // namespace dfdrnn
