#include "dfdrnn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <utility>

namespace dfdrnn {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must be in [0,1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ConfigError("clamp_eps must be in (0, 0.5)");
}

LabelSets LabelSets::make(std::vector<Pair> positives, std::vector<Pair> negatives) {
  if (positives.empty()) throw DataError("label set has no positive pairs");
  const std::set<Pair> pos(positives.begin(), positives.end());
  for (const Pair& p : negatives) {
    if (pos.contains(p)) {
      throw DataError("pair (" + std::to_string(p.first) + "," + std::to_string(p.second) +
                      ") is both positive and negative");
    }
  }
  LabelSets out;
  out.lambda = static_cast<double>(negatives.size()) / static_cast<double>(positives.size());
  out.positives = std::move(positives);
  out.negatives = std::move(negatives);
  return out;
}

LabelSets labels_from_matrix(const Tensor& assoc, const PairSet& exclude) {
  std::vector<Pair> pos, neg;
  for (std::size_t i = 0; i < assoc.rows(); ++i) {
    for (std::size_t j = 0; j < assoc.cols(); ++j) {
      if (exclude.contains({i, j})) continue;
      (assoc(i, j) != 0.0 ? pos : neg).emplace_back(i, j);
    }
  }
  return LabelSets::make(std::move(pos), std::move(neg));
}

ad::Var weighted_bce(ad::Var scores, const LabelSets& labels, std::size_t nodes, double clamp_eps) {
  if (labels.positives.empty()) throw DataError("weighted_bce: no positive labels");
  const Tensor& s = scores.value();
  Tensor pos_w(s.rows(), s.cols());
  Tensor neg_w(s.rows(), s.cols());
  for (const auto& [i, j] : labels.positives) {
    if (i >= s.rows() || j >= s.cols()) throw ShapeError("weighted_bce: label pair out of range");
    pos_w(i, j) = labels.lambda;
  }
  for (const auto& [i, j] : labels.negatives) {
    if (i >= s.rows() || j >= s.cols()) throw ShapeError("weighted_bce: label pair out of range");
    neg_w(i, j) = 1.0;
  }
  const ad::Var pos = ad::weighted_total(ad::clamped_log(scores, clamp_eps), pos_w);
  const ad::Var neg =
      ad::weighted_total(ad::clamped_log(ad::affine(scores, -1.0, 1.0), clamp_eps), neg_w);
  return ad::affine(ad::add(pos, neg), -1.0 / static_cast<double>(nodes), 0.0);
}

Tensor xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (double& v : t.values()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return t;
}

AdamState AdamState::for_params(std::span<const Tensor* const> params) {
  AdamState s;
  for (const Tensor* p : params) {
    s.first.emplace_back(p->rows(), p->cols());
    s.second.emplace_back(p->rows(), p->cols());
  }
  return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.first.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = *params[p];
    const Tensor& g = *grads[p];
    if (!theta.same_shape(g)) throw ShapeError("adam_step: gradient shape mismatch");
    Tensor& m = state.first[p];
    Tensor& v = state.second[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

TrainResult train(const ModelInputs& inputs, const LabelSets& labels, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
  model_cfg.validate();
  train_cfg.validate();
  Rng init_rng = make_rng(train_cfg.seed, Stream::kInit);
  Rng feature_rng = make_rng(train_cfg.seed, Stream::kFeatureDropout);
  Rng edge_rng = make_rng(train_cfg.seed, Stream::kEdgeDropout);

  TrainResult result;
  result.params = init_params(inputs.nodes(), model_cfg, init_rng);
  const std::vector<Tensor*> params = result.params.tensors();
  AdamState state = AdamState::for_params(std::vector<const Tensor*>(params.begin(), params.end()));
  result.loss_trace.reserve(train_cfg.epochs);

  for (std::size_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    ad::Tape tape;
    const ModelVars vars = ModelVars::parameters(tape, result.params);
    const TrainNoise noise{&feature_rng, &edge_rng};
    const ForwardResult fr = forward(tape, inputs, vars, model_cfg, &noise);
    const ad::Var loss = weighted_bce(fr.scores, labels, inputs.nodes(), train_cfg.clamp_eps);
    const double value = loss.value()[0];
    if (!std::isfinite(value)) {
      throw Error("training diverged: loss " + std::to_string(value) + " at epoch " +
                  std::to_string(epoch + 1));
    }
    result.loss_trace.push_back(value);
    tape.backward(loss);
    std::vector<const Tensor*> grads;
    for (const ad::Var& v : vars.all()) grads.push_back(&v.grad());
    adam_step(params, grads, state, train_cfg);
  }
  return result;
}

ad::GradCheckResult model_gradcheck(const ModelInputs& inputs, const LabelSets& labels,
                                    const ModelConfig& model_cfg, std::uint64_t seed,
                                    double eps) {
  model_cfg.validate();
  Rng init_rng = make_rng(seed, Stream::kInit);
  ModelParams params = init_params(inputs.nodes(), model_cfg, init_rng);
  // Zero biases put LeakyReLU inputs of empty neighborhoods exactly on the
  // kink; check at a generic point instead.
  for (LayerParams& layer : params.layers) {
    for (SamParams* sam : {&layer.sddfe, &layer.cddfe})
      for (Tensor* b : {&sam->b_r, &sam->b_d})
        for (double& v : b->values()) v = 0.2 * uniform01(init_rng) - 0.1;
  }
  std::vector<Tensor> values;
  for (const Tensor* t : std::as_const(params).tensors()) values.push_back(*t);
  const ad::LossFn loss = [&](ad::Tape& tape, std::span<const ad::Var> vars) {
    Rng feature_rng = make_rng(seed, Stream::kFeatureDropout);
    Rng edge_rng = make_rng(seed, Stream::kEdgeDropout);
    const TrainNoise noise{&feature_rng, &edge_rng};
    const ModelVars mv = ModelVars::from_vars(vars, model_cfg.layers);
    const ForwardResult fr = forward(tape, inputs, mv, model_cfg, &noise);
    return weighted_bce(fr.scores, labels, inputs.nodes(), 1e-12);
  };
  return ad::finite_diff_check(loss, values, eps);
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, trace[e]);
    out << buf;
  }
}

}  // namespace dfdrnn
