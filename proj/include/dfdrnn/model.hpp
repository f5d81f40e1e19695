#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfdrnn/attention.hpp"
#include "dfdrnn/autodiff.hpp"
#include "dfdrnn/dataset.hpp"
#include "dfdrnn/graph.hpp"

namespace dfdrnn {

enum class Variant { kFull, kSfOnly, kAfOnly, kGcn, kNoCf };

enum class Decoder {
  kCross,            // (s_r + s_d^T) / 2
  kNonCross,         // (s_r^non + (s_d^non)^T) / 2
  kDrugOnly,         // s_r
  kDiseaseOnly,      // s_d^T
  kNonCrossDrug,     // s_r^non
  kNonCrossDisease,  // (s_d^non)^T
};

std::string_view to_string(Variant v);
std::string_view to_string(Decoder d);
Variant parse_variant(std::string_view s);
Decoder parse_decoder(std::string_view s);

struct ModelConfig {
  std::size_t k = 128;
  std::size_t layers = 3;
  std::size_t heads = 2;
  double dropout = 0.4;
  double edge_dropout = 0.2;
  std::size_t top_t = 7;
  Variant variant = Variant::kFull;
  Decoder decoder = Decoder::kCross;

  // Throws ConfigError on inconsistent values.
  void validate() const;
  // Decoder actually used: single-stream variants force their own.
  Decoder effective_decoder() const;
};

struct LayerParams {
  SamParams sddfe;
  SamParams cddfe;
};

struct ModelParams {
  Tensor projection;  // (n+m) x k
  std::vector<LayerParams> layers;
  Tensor layer_weights;  // 1 x L, starts at 1/L

  // Every trainable tensor in a fixed order (projection, per-layer sddfe and
  // cddfe blocks, layer weights).
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> tensor_names() const;
};

// Xavier-uniform weights, zero biases, layer weights 1/L.
ModelParams init_params(std::size_t nodes, const ModelConfig& cfg, Rng& rng);

// Graphs and initial features for one training view of a dataset.
struct ModelInputs {
  std::size_t n = 0;
  std::size_t m = 0;
  HeteroAdjacency sim;
  HeteroAdjacency assoc;
  InitialFeatures init;

  std::size_t nodes() const { return n + m; }
};

// mask_out pairs are removed from E_a, and from h_init_a when mask_features
// is set.
ModelInputs make_inputs(const Dataset& d, std::size_t top_t, const PairSet& mask_out = {},
                        bool mask_features = true);

struct DualVars {
  ad::Var s;
  ad::Var a;
};

struct FinalEncoding {
  ad::Var r_s, r_a;  // drugs: n x k
  ad::Var d_s, d_a;  // diseases: m x k
};

struct DecoderOutput {
  ad::Var drug;     // n x m
  ad::Var disease;  // m x n, before the transpose
  ad::Var scores;   // n x m
};

struct ModelVars {
  ad::Var projection;
  std::vector<SamVars> sddfe;
  std::vector<SamVars> cddfe;
  ad::Var layer_weights;

  static ModelVars parameters(ad::Tape& tape, const ModelParams& p);
  static ModelVars constants(ad::Tape& tape, const ModelParams& p);
  // Rebuilds the structure from nodes listed in ModelParams::tensors() order.
  static ModelVars from_vars(std::span<const ad::Var> vars, std::size_t layers);
  // Parameter nodes in ModelParams::tensors() order.
  std::vector<ad::Var> all() const;
};

// Dropout applied to every aggregation output during training.
struct FeatureDropout {
  double rate = 0.0;
  Rng* rng = nullptr;
};

DualVars project_initial(ad::Var h_init_s, ad::Var h_init_a, ad::Var projection);

// Same-domain extraction over E_s: each stream maps to itself.
DualVars sddfe_layer(const ad::CsrPtr& sim, const DualVars& in, const SamVars& params,
                     const AttentionShape& shape, Variant variant = Variant::kFull,
                     const FeatureDropout& drop = {});

// Cross-domain extraction over E_a. The similarity stream produces the
// association output and vice versa, unless the variant is kNoCf.
DualVars cddfe_layer(const ad::CsrPtr& assoc, const DualVars& in, const SamVars& params,
                     const AttentionShape& shape, Variant variant = Variant::kFull,
                     const FeatureDropout& drop = {});

DualVars fuse(const DualVars& hat, const DualVars& tilde, const DualVars& prev);

// Weighted sum of layers 1..L with weights[l], split into drug/disease rows.
FinalEncoding layer_attention(std::span<const DualVars> layers, ad::Var weights,
                              std::size_t drugs);

DecoderOutput decode_cross(const FinalEncoding& enc);
DecoderOutput decode_noncross(const FinalEncoding& enc);
// Scores under any decoder variant.
ad::Var decode(const FinalEncoding& enc, Decoder decoder);

struct TrainNoise {
  Rng* feature_rng = nullptr;
  Rng* edge_rng = nullptr;
};

struct ForwardResult {
  ad::Var scores;
  FinalEncoding encoding;
  std::vector<DualVars> layers;  // h^0 .. h^L
};

// One full pass. With `noise` the pass runs in training mode: edges are
// resampled and aggregation outputs are dropped out.
ForwardResult forward(ad::Tape& tape, const ModelInputs& inputs, const ModelVars& vars,
                      const ModelConfig& cfg, const TrainNoise* noise = nullptr);

struct ScoreMatrix {
  Tensor values;  // n x m, entries in (0, 1)
};

// Evaluation-mode scores.
ScoreMatrix predict(const ModelInputs& inputs, const ModelParams& params, const ModelConfig& cfg);

}  // namespace dfdrnn
