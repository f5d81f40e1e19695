#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfdrnn/evaluation.hpp"
#include "dfdrnn/model.hpp"
#include "dfdrnn/trainer.hpp"

namespace dfdrnn {

// Everything a CLI run needs. Defaults are the published hyperparameters.
struct RunConfig {
  std::string dataset;
  ModelConfig model;
  TrainConfig train;
  EvalOptions eval;
  std::vector<std::size_t> t_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10,
                                       11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  std::string disease;
  std::size_t top_k = 10;
  std::size_t loocv_max_diseases = 0;
  std::string checkpoint;
  std::string out = "out";

  void validate() const;
};

// Merges a flat JSON object over the defaults. Unknown keys and wrongly typed
// values throw ConfigError naming the key.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

// Defaults merged with the file at `path`.
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Hex FNV-1a hash of the settings that affect numeric results (excludes the
// output directory and thread count).
std::string config_hash(const RunConfig& cfg);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace dfdrnn
