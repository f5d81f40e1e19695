#include "dfdrnn/model.hpp"

#include <array>

#include "dfdrnn/trainer.hpp"

namespace dfdrnn {

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 5> kVariantNames{{
    {Variant::kFull, "full"},
    {Variant::kSfOnly, "sf_only"},
    {Variant::kAfOnly, "af_only"},
    {Variant::kGcn, "gcn"},
    {Variant::kNoCf, "no_cf"},
}};

constexpr std::array<std::pair<Decoder, std::string_view>, 6> kDecoderNames{{
    {Decoder::kCross, "cross"},
    {Decoder::kNonCross, "noncross"},
    {Decoder::kDrugOnly, "drug_only"},
    {Decoder::kDiseaseOnly, "disease_only"},
    {Decoder::kNonCrossDrug, "noncross_drug"},
    {Decoder::kNonCrossDisease, "noncross_disease"},
}};

ad::Var aggregate(const ad::CsrPtr& graph, ad::Var h, const SamVars& params,
                  const AttentionShape& shape, Variant variant, const FeatureDropout& drop) {
  ad::Var out = variant == Variant::kGcn ? gcn_aggregate(graph, h, params.w_r, params.b_r, shape.slope)
                                         : samf(graph, h, params, shape);
  if (drop.rng != nullptr && drop.rate > 0.0) out = ad::dropout(out, drop.rate, *drop.rng);
  return out;
}

void append_sam(std::vector<Tensor*>& out, SamParams& p) {
  out.insert(out.end(), {&p.w_q, &p.w_k, &p.w_v, &p.w_r, &p.w_d, &p.b_r, &p.b_d});
}

void append_sam_vars(std::vector<ad::Var>& out, const SamVars& p) {
  out.insert(out.end(), {p.w_q, p.w_k, p.w_v, p.w_r, p.w_d, p.b_r, p.b_d});
}

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [key, name] : kVariantNames)
    if (key == v) return name;
  return "?";
}

std::string_view to_string(Decoder d) {
  for (const auto& [key, name] : kDecoderNames)
    if (key == d) return name;
  return "?";
}

Variant parse_variant(std::string_view s) {
  for (const auto& [key, name] : kVariantNames)
    if (name == s) return key;
  throw ConfigError("unknown variant '" + std::string(s) +
                    "' (expected full, sf_only, af_only, gcn, no_cf)");
}

Decoder parse_decoder(std::string_view s) {
  for (const auto& [key, name] : kDecoderNames)
    if (name == s) return key;
  throw ConfigError("unknown decoder '" + std::string(s) +
                    "' (expected cross, noncross, drug_only, disease_only, noncross_drug, "
                    "noncross_disease)");
}

void ModelConfig::validate() const {
  if (k == 0) throw ConfigError("k must be positive");
  if (layers == 0) throw ConfigError("layers must be at least 1");
  if (heads == 0 || k % heads != 0) {
    throw ConfigError("k=" + std::to_string(k) + " is not divisible by heads=" +
                      std::to_string(heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
  if (!(edge_dropout >= 0.0 && edge_dropout < 1.0)) {
    throw ConfigError("edge_dropout must be in [0,1)");
  }
  if (top_t == 0) throw ConfigError("top_t must be at least 1");
}

Decoder ModelConfig::effective_decoder() const {
  switch (variant) {
    case Variant::kSfOnly: return Decoder::kNonCrossDisease;
    case Variant::kAfOnly: return Decoder::kNonCrossDrug;
    default: return decoder;
  }
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out{&projection};
  for (LayerParams& layer : layers) {
    append_sam(out, layer.sddfe);
    append_sam(out, layer.cddfe);
  }
  out.push_back(&layer_weights);
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  auto mutable_view = const_cast<ModelParams*>(this)->tensors();
  return {mutable_view.begin(), mutable_view.end()};
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> names{"projection"};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (const char* module : {"sddfe", "cddfe"}) {
      for (const char* field : {"w_q", "w_k", "w_v", "w_r", "w_d", "b_r", "b_d"}) {
        names.push_back("layer" + std::to_string(l) + "." + module + "." + field);
      }
    }
  }
  names.emplace_back("layer_weights");
  return names;
}

ModelParams init_params(std::size_t nodes, const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParams p;
  p.projection = xavier_init(nodes, cfg.k, rng);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    LayerParams layer;
    layer.sddfe = SamParams::xavier(cfg.k, rng);
    layer.cddfe = SamParams::xavier(cfg.k, rng);
    p.layers.push_back(std::move(layer));
  }
  p.layer_weights = Tensor(1, cfg.layers, 1.0 / static_cast<double>(cfg.layers));
  return p;
}

ModelInputs make_inputs(const Dataset& d, std::size_t top_t, const PairSet& mask_out,
                        bool mask_features) {
  ModelInputs in;
  in.n = d.drugs();
  in.m = d.diseases();
  in.sim = build_hetero_similarity(topt_binarize(d.drug_sim, top_t),
                                   topt_binarize(d.disease_sim, top_t));
  in.assoc = build_hetero_association(d.assoc, mask_out);
  in.init = initial_features(d, mask_features ? mask_out : PairSet{});
  return in;
}

ModelVars ModelVars::parameters(ad::Tape& tape, const ModelParams& p) {
  ModelVars v;
  v.projection = tape.parameter(p.projection);
  for (const LayerParams& layer : p.layers) {
    v.sddfe.push_back(SamVars::parameters(tape, layer.sddfe));
    v.cddfe.push_back(SamVars::parameters(tape, layer.cddfe));
  }
  v.layer_weights = tape.parameter(p.layer_weights);
  return v;
}

ModelVars ModelVars::constants(ad::Tape& tape, const ModelParams& p) {
  ModelVars v;
  v.projection = tape.constant(p.projection);
  for (const LayerParams& layer : p.layers) {
    v.sddfe.push_back(SamVars::constants(tape, layer.sddfe));
    v.cddfe.push_back(SamVars::constants(tape, layer.cddfe));
  }
  v.layer_weights = tape.constant(p.layer_weights);
  return v;
}

ModelVars ModelVars::from_vars(std::span<const ad::Var> vars, std::size_t layers) {
  if (vars.size() != 2 + 14 * layers) throw ShapeError("model variable count does not match layers");
  ModelVars v;
  v.projection = vars[0];
  std::size_t at = 1;
  auto take = [&] {
    const SamVars s{vars[at], vars[at + 1], vars[at + 2], vars[at + 3],
                    vars[at + 4], vars[at + 5], vars[at + 6]};
    at += 7;
    return s;
  };
  for (std::size_t l = 0; l < layers; ++l) {
    v.sddfe.push_back(take());
    v.cddfe.push_back(take());
  }
  v.layer_weights = vars[at];
  return v;
}

std::vector<ad::Var> ModelVars::all() const {
  std::vector<ad::Var> out{projection};
  for (std::size_t l = 0; l < sddfe.size(); ++l) {
    append_sam_vars(out, sddfe[l]);
    append_sam_vars(out, cddfe[l]);
  }
  out.push_back(layer_weights);
  return out;
}

DualVars project_initial(ad::Var h_init_s, ad::Var h_init_a, ad::Var projection) {
  return {ad::matmul(h_init_s, projection), ad::matmul(h_init_a, projection)};
}

DualVars sddfe_layer(const ad::CsrPtr& sim, const DualVars& in, const SamVars& params,
                     const AttentionShape& shape, Variant variant, const FeatureDropout& drop) {
  return {aggregate(sim, in.s, params, shape, variant, drop),
          aggregate(sim, in.a, params, shape, variant, drop)};
}

DualVars cddfe_layer(const ad::CsrPtr& assoc, const DualVars& in, const SamVars& params,
                     const AttentionShape& shape, Variant variant, const FeatureDropout& drop) {
  const ad::Var from_s = aggregate(assoc, in.s, params, shape, variant, drop);
  const ad::Var from_a = aggregate(assoc, in.a, params, shape, variant, drop);
  if (variant == Variant::kNoCf) return {from_s, from_a};
  return {from_a, from_s};
}

DualVars fuse(const DualVars& hat, const DualVars& tilde, const DualVars& prev) {
  return {ad::add(ad::add(hat.s, tilde.s), prev.s), ad::add(ad::add(hat.a, tilde.a), prev.a)};
}

FinalEncoding layer_attention(std::span<const DualVars> layers, ad::Var weights,
                              std::size_t drugs) {
  if (layers.empty() || weights.rows() != 1 || weights.cols() != layers.size()) {
    throw ShapeError("layer_attention: need one weight per layer");
  }
  ad::Var s, a;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const ad::Var w = ad::slice_cols(weights, l, l + 1);
    const ad::Var ts = ad::scale_by(layers[l].s, w);
    const ad::Var ta = ad::scale_by(layers[l].a, w);
    s = l == 0 ? ts : ad::add(s, ts);
    a = l == 0 ? ta : ad::add(a, ta);
  }
  const std::size_t total = s.rows();
  if (drugs >= total) throw ShapeError("layer_attention: need at least one disease row");
  return {ad::slice_rows(s, 0, drugs), ad::slice_rows(a, 0, drugs),
          ad::slice_rows(s, drugs, total), ad::slice_rows(a, drugs, total)};
}

namespace {

ad::Var logits(ad::Var left, ad::Var right) { return ad::matmul(left, ad::transpose(right)); }

ad::Var average(ad::Var drug, ad::Var disease) {
  return ad::scale(ad::add(drug, ad::transpose(disease)), 0.5);
}

}  // namespace

DecoderOutput decode_cross(const FinalEncoding& enc) {
  const ad::Var drug = ad::sigmoid(logits(enc.r_a, enc.d_s));
  const ad::Var disease = ad::sigmoid(logits(enc.d_a, enc.r_s));
  return {drug, disease, average(drug, disease)};
}

DecoderOutput decode_noncross(const FinalEncoding& enc) {
  const ad::Var drug = ad::sigmoid(logits(enc.r_a, enc.d_a));
  const ad::Var disease = ad::sigmoid(logits(enc.d_s, enc.r_s));
  return {drug, disease, average(drug, disease)};
}

ad::Var decode(const FinalEncoding& enc, Decoder decoder) {
  switch (decoder) {
    case Decoder::kCross: return decode_cross(enc).scores;
    case Decoder::kNonCross: return decode_noncross(enc).scores;
    case Decoder::kDrugOnly: return ad::sigmoid(logits(enc.r_a, enc.d_s));
    case Decoder::kDiseaseOnly: return ad::transpose(ad::sigmoid(logits(enc.d_a, enc.r_s)));
    case Decoder::kNonCrossDrug: return ad::sigmoid(logits(enc.r_a, enc.d_a));
    case Decoder::kNonCrossDisease: return ad::transpose(ad::sigmoid(logits(enc.d_s, enc.r_s)));
  }
  throw ConfigError("unknown decoder");
}

ForwardResult forward(ad::Tape& tape, const ModelInputs& inputs, const ModelVars& vars,
                      const ModelConfig& cfg, const TrainNoise* noise) {
  cfg.validate();
  if (vars.sddfe.size() != cfg.layers || vars.cddfe.size() != cfg.layers) {
    throw ShapeError("forward: parameters hold " + std::to_string(vars.sddfe.size()) +
                     " layers, config expects " + std::to_string(cfg.layers));
  }
  const std::size_t nodes = inputs.nodes();
  if (vars.projection.rows() != nodes || vars.projection.cols() != cfg.k) {
    throw ShapeError("forward: projection is " + vars.projection.value().shape_string() +
                     ", expected " + std::to_string(nodes) + "x" + std::to_string(cfg.k));
  }

  const bool training = noise != nullptr;
  ad::CsrPtr sim, assoc;
  if (training && noise->edge_rng != nullptr && cfg.edge_dropout > 0.0) {
    sim = std::make_shared<const Csr>(to_csr(edge_dropout(inputs.sim, cfg.edge_dropout, *noise->edge_rng)));
    assoc = std::make_shared<const Csr>(
        to_csr(edge_dropout(inputs.assoc, cfg.edge_dropout, *noise->edge_rng)));
  } else {
    sim = std::make_shared<const Csr>(to_csr(inputs.sim));
    assoc = std::make_shared<const Csr>(to_csr(inputs.assoc));
  }
  FeatureDropout drop;
  if (training && noise->feature_rng != nullptr) drop = {cfg.dropout, noise->feature_rng};

  ForwardResult result;
  DualVars h;
  switch (cfg.variant) {
    case Variant::kSfOnly:
      h = {ad::matmul(tape.constant(inputs.init.h_init_s), vars.projection),
           tape.constant(Tensor(nodes, cfg.k))};
      break;
    case Variant::kAfOnly:
      h = {tape.constant(Tensor(nodes, cfg.k)),
           ad::matmul(tape.constant(inputs.init.h_init_a), vars.projection)};
      break;
    default:
      h = project_initial(tape.constant(inputs.init.h_init_s), tape.constant(inputs.init.h_init_a),
                          vars.projection);
  }
  result.layers.push_back(h);

  const AttentionShape shape{inputs.n, cfg.heads, kLeakySlope};
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const DualVars hat = sddfe_layer(sim, h, vars.sddfe[l], shape, cfg.variant, drop);
    const DualVars tilde = cddfe_layer(assoc, h, vars.cddfe[l], shape, cfg.variant, drop);
    h = fuse(hat, tilde, h);
    result.layers.push_back(h);
  }
  result.encoding = layer_attention(std::span(result.layers).subspan(1), vars.layer_weights, inputs.n);
  result.scores = decode(result.encoding, cfg.effective_decoder());
  return result;
}

ScoreMatrix predict(const ModelInputs& inputs, const ModelParams& params, const ModelConfig& cfg) {
  ad::Tape tape;
  const ModelVars vars = ModelVars::constants(tape, params);
  return {forward(tape, inputs, vars, cfg).scores.value()};
}

}  // namespace dfdrnn
