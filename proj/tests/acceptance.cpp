// Acceptance run: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dfdrnn/cli.hpp"
#include "dfdrnn/dataset.hpp"
#include "dfdrnn/evaluation.hpp"
#include "dfdrnn/metrics.hpp"
#include "dfdrnn/model.hpp"
#include "dfdrnn/planted.hpp"
#include "dfdrnn/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace dfdrnn {
namespace {

using ad::Tape;
using ad::Var;
using Clock = std::chrono::steady_clock;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Records the first failure message and counts every failed check.
struct Tally {
  std::size_t failures = 0;
  std::string first;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    if (failures++ == 0) first = what;
  }
  Outcome outcome(const std::string& summary) const {
    if (failures == 0) return {Status::kPass, summary};
    return {Status::kFail, format("%zu failed checks, first: %s", failures, first.c_str())};
  }
};

int run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

ModelConfig toy_model() {
  ModelConfig cfg;
  cfg.k = 8;
  cfg.heads = 2;
  cfg.layers = 2;
  cfg.top_t = 3;
  return cfg;
}

Outcome gradient_correctness() {
  const auto start = Clock::now();
  const Dataset toy = make_planted_dataset({6, 4, 2, 0.0}, 42);
  const ModelConfig cfg = toy_model();
  const ModelInputs inputs = make_inputs(toy, cfg.top_t);
  const ad::GradCheckResult r =
      model_gradcheck(inputs, labels_from_matrix(toy.assoc.values), cfg, 42, 1e-5);
  const double elapsed = seconds_since(start);
  Rng rng(0);
  const std::size_t tensors = init_params(inputs.nodes(), cfg, rng).tensors().size();
  const bool ok = r.max_rel_error < 1e-4 && elapsed < 30.0 && r.per_param.size() == tensors;
  return {ok ? Status::kPass : Status::kFail,
          format("max relative error %.3e over %zu tensors (%zu entries), %.1f s", r.max_rel_error,
                 r.per_param.size(), r.entries_checked, elapsed)};
}

Outcome attention_invariants() {
  constexpr int kInstances = 120;
  Tally t;
  for (int idx = 0; idx < kInstances; ++idx) {
    const testing::AttentionInstance x = testing::AttentionInstance::make(idx);
    const Csr g = to_csr(x.nb);
    Tape tape;
    std::vector<Var> beta;
    const Var out0 = sam(testing::csr(x.nb), tape.constant(x.h), SamVars::constants(tape, x.params),
                         x.heads, &beta);
    const Var pout0 = sam(testing::csr(x.permuted_neighbors()), tape.constant(x.permuted_features()),
                          SamVars::constants(tape, x.params), x.heads);
    const Tensor out = out0.value();
    const Tensor pout = pout0.value();
    const std::size_t w = x.k / x.heads;
    for (std::size_t q = 0; q < x.heads; ++q) {
      const Tensor dense = ad::edges_to_dense(beta[q].value().values(), g);
      const testing::DenseHead ref = testing::dense_head(x.nb, x.h, x.params, x.heads, q);
      for (std::size_t i = 0; i < x.nodes; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < x.nodes; ++j) {
          const bool edge = std::binary_search(x.nb[i].begin(), x.nb[i].end(), j);
          t.check(edge || dense(i, j) == 0.0, format("instance %d: weight off the neighborhood", idx));
          t.check(std::abs(dense(i, j) - ref.beta[i][j]) <= 1e-9, format("instance %d: weight vs oracle", idx));
          row += dense(i, j);
        }
        if (!x.nb[i].empty()) t.check(std::abs(row - 1.0) <= 1e-9, format("instance %d: row sum %.17g", idx, row));
        for (std::size_t c = 0; c < w; ++c)
          t.check(std::abs(out(i, q * w + c) - ref.out(i, c)) <= 1e-9,
                  format("instance %d: head %zu output vs oracle", idx, q));
      }
    }
    for (std::size_t i = 0; i < x.nodes; ++i)
      for (std::size_t c = 0; c < x.k; ++c)
        t.check(std::abs(pout(x.perm[i], c) - out(i, c)) <= 1e-9, format("instance %d: permutation", idx));
  }
  return t.outcome(format("%d random graphs: row sums, masking, head partition, permutation", kInstances));
}

Outcome metric_oracles() {
  Tally t;
  const std::vector<double> s{0.8, 0.7, 0.3, 0.2};
  const std::vector<int> y{1, 0, 1, 0};
  t.check(auroc(s, y) == 0.75, "example AUROC");
  t.check(std::abs(aupr(s, y) - 5.0 / 6.0) <= 1e-15, "example AUPR");
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const testing::ScoredInstance x = testing::random_scored_instance(rng);
    const double e1 = std::abs(auroc(x.scores, x.labels) - testing::mann_whitney(x));
    const double e2 = std::abs(aupr(x.scores, x.labels) - testing::brute_aupr(x));
    worst = std::max({worst, e1, e2});
    t.check(e1 <= 1e-12, format("trial %d: AUROC off by %.3e", trial, e1));
    t.check(e2 <= 1e-12, format("trial %d: AUPR off by %.3e", trial, e2));
  }
  return t.outcome(format("example 0.75 / 5/6 exact, 200 random instances, worst error %.1e", worst));
}

Outcome encoder_algebra() {
  Tally t;
  const Dataset data = make_planted_dataset({8, 6, 2, 0.0}, 3);
  ModelConfig cfg = toy_model();
  const ModelInputs inputs = make_inputs(data, cfg.top_t);
  Rng rng(4);
  ModelParams params = init_params(inputs.nodes(), cfg, rng);

  // Residual identity.
  ModelParams frozen = params;
  for (LayerParams& l : frozen.layers) l = {SamParams::zeros(cfg.k), SamParams::zeros(cfg.k)};
  {
    Tape tape;
    const ForwardResult r = forward(tape, inputs, ModelVars::constants(tape, frozen), cfg);
    for (std::size_t l = 1; l < r.layers.size(); ++l) {
      t.check(max_abs_diff(r.layers[l].s.value(), r.layers[0].s.value()) <= 1e-12, "residual s");
      t.check(max_abs_diff(r.layers[l].a.value(), r.layers[0].a.value()) <= 1e-12, "residual a");
    }
  }

  // Fuse additivity and layer attention with a one-hot weight vector.
  {
    Tape tape;
    const ForwardResult r = forward(tape, inputs, ModelVars::constants(tape, params), cfg);
    const Tensor x = testing::random_tensor(inputs.nodes(), cfg.k, rng);
    const Tensor y = testing::random_tensor(inputs.nodes(), cfg.k, rng);
    const Tensor z = testing::random_tensor(inputs.nodes(), cfg.k, rng);
    const DualVars f = fuse({tape.constant(x), tape.constant(y)}, {tape.constant(y), tape.constant(z)},
                            {tape.constant(z), tape.constant(x)});
    const Tensor fs = f.s.value(), fa = f.a.value();
    for (std::size_t i = 0; i < x.size(); ++i) {
      t.check(std::abs(fs[i] - (x[i] + y[i] + z[i])) <= 1e-12, "fuse s");
      t.check(std::abs(fa[i] - (y[i] + z[i] + x[i])) <= 1e-12, "fuse a");
    }
    Tensor one_hot(1, cfg.layers);
    one_hot[0] = 1.0;
    const std::vector<DualVars> layers(r.layers.begin() + 1, r.layers.end());
    const FinalEncoding e = layer_attention(layers, tape.constant(one_hot), inputs.n);
    const Tensor l1s = r.layers[1].s.value(), l1a = r.layers[1].a.value();
    const Tensor rs = e.r_s.value(), ds = e.d_s.value(), ra = e.r_a.value(), da = e.d_a.value();
    for (std::size_t c = 0; c < cfg.k; ++c) {
      for (std::size_t i = 0; i < inputs.n; ++i) {
        t.check(std::abs(rs(i, c) - l1s(i, c)) <= 1e-12, "layer attention r_s");
        t.check(std::abs(ra(i, c) - l1a(i, c)) <= 1e-12, "layer attention r_a");
      }
      for (std::size_t j = 0; j < inputs.m; ++j) {
        t.check(std::abs(ds(j, c) - l1s(inputs.n + j, c)) <= 1e-12, "layer attention d_s");
        t.check(std::abs(da(j, c) - l1a(inputs.n + j, c)) <= 1e-12, "layer attention d_a");
      }
    }

    // Swapping drug and disease roles transposes the cross decoder.
    const FinalEncoding& enc = r.encoding;
    const Tensor s = decode_cross(enc).scores.value();
    const Tensor swapped = decode_cross({enc.d_s, enc.d_a, enc.r_s, enc.r_a}).scores.value();
    t.check(max_abs_diff(swapped, s.transposed()) <= 1e-12, "cross decoder transpose");
  }
  return t.outcome("residual identity, fuse, one-hot layer attention, cross-decoder transpose");
}

Outcome planted_learning() {
  const auto start = Clock::now();
  const Dataset data = make_planted_dataset({20, 15, 3, 0.1}, 42);
  ModelConfig model;
  model.k = 32;
  TrainConfig train;
  train.epochs = 300;
  CvSetup setup;
  setup.data = &data;
  setup.top_t = model.top_t;
  setup.options.folds = 5;
  setup.options.threads = 1;
  const MetricsReport r = cross_validate(setup, model_scorer(model, train));
  const double elapsed = seconds_since(start);
  const bool ok = r.auroc_mean > 0.90 && elapsed < 120.0;
  return {ok ? Status::kPass : Status::kFail,
          format("5-fold AUROC %.4f +- %.4f, AUPR %.4f, %.1f s single-threaded", r.auroc_mean,
                 r.auroc_std, r.aupr_mean, elapsed)};
}

Outcome determinism(const std::filesystem::path& root, const std::string& manifest) {
  auto cv = [&](const std::string& name, const std::string& threads) {
    const auto out = root / name;
    const int code = run({"cv", "--dataset", manifest, "--seed", "7", "--k", "16", "--epochs", "60",
                          "--folds", "5", "--threads", threads, "--out", out.string()});
    if (code != 0) throw Error("cv exited with " + std::to_string(code));
    return read_json(out / "metrics.json");
  };
  const nlohmann::json a = cv("det_a", "1");
  const nlohmann::json b = cv("det_b", "1");
  const nlohmann::json c = cv("det_c", "4");
  Tally t;
  t.check(a == b, "repeated run differs");
  t.check(a == c, "threads 1 vs 4 differ");
  return t.outcome(format("cv --seed 7 twice and with --threads 4: identical metrics.json (AUROC %.17g)",
                          a["auroc"]["mean"].get<double>()));
}

Outcome loss_arithmetic() {
  Tally t;
  Tape tape;
  const LabelSets two = LabelSets::make({{0, 0}}, {{0, 1}});
  const double loss = weighted_bce(tape.constant(Tensor::from_rows({{0.5, 0.5}})), two, 2).value()[0];
  t.check(std::abs(loss - std::log(2.0)) <= 1e-9, format("loss %.17g", loss));
  Tensor a(593, 313);
  for (std::size_t e = 0; e < 1933; ++e) a.values()[e * 96] = 1.0;
  const double lambda = labels_from_matrix(a).lambda;
  t.check(std::abs(lambda - 183676.0 / 1933.0) <= 1e-9, format("lambda %.17g", lambda));
  return t.outcome(format("loss %.6f (log 2), lambda %.6f (183676/1933)", loss, lambda));
}

const char* gdataset_path() { return std::getenv("DFDRNN_GDATASET"); }

std::size_t worker_threads() {
  if (const char* env = std::getenv("DFDRNN_THREADS")) return std::max(1, std::atoi(env));
  return std::max(1u, std::thread::hardware_concurrency());
}

Outcome gdataset_reproduction() {
  const char* path = gdataset_path();
  if (path == nullptr) return {Status::kSkip, "set DFDRNN_GDATASET to the Gdataset manifest to run"};
  const auto start = Clock::now();
  const Dataset data = load_dataset(path);
  const ModelConfig model;
  const TrainConfig train;
  CvSetup setup;
  setup.data = &data;
  setup.top_t = model.top_t;
  setup.options.folds = 10;
  setup.options.threads = worker_threads();
  const MetricsReport r = cross_validate(setup, model_scorer(model, train));
  const bool ok = std::abs(r.auroc_mean - 0.960) <= 0.015 && std::abs(r.aupr_mean - 0.623) <= 0.05;
  return {ok ? Status::kPass : Status::kFail,
          format("10-fold AUROC %.4f (target 0.960 +- 0.015), AUPR %.4f (target 0.623 +- 0.05), %.0f s",
                 r.auroc_mean, r.aupr_mean, seconds_since(start))};
}

Outcome topt_trend() {
  const char* path = gdataset_path();
  if (path == nullptr) return {Status::kSkip, "set DFDRNN_GDATASET to the Gdataset manifest to run"};
  const Dataset data = load_dataset(path);
  CvSetup setup;
  setup.data = &data;
  setup.options.folds = 10;
  setup.options.threads = worker_threads();
  const auto rows = sweep_topt(setup, ModelConfig{}, TrainConfig{}, {1, 7});
  const double a1 = rows[0].report.auroc_mean, a7 = rows[1].report.auroc_mean;
  return {a1 < a7 ? Status::kPass : Status::kFail, format("AUROC t=1 %.4f, t=7 %.4f", a1, a7)};
}

Outcome ablation_harness(const std::filesystem::path& root, const std::string& manifest) {
  Tally t;
  std::string summary;
  auto cv = [&](const std::string& flag, const std::string& value) {
    const auto out = root / ("ablation_" + value);
    const int code = run({"cv", "--dataset", manifest, flag, value, "--k", "16", "--epochs", "60",
                          "--folds", "3", "--out", out.string()});
    t.check(code == 0, flag + " " + value + " exited with " + std::to_string(code));
    if (code != 0) return;
    const nlohmann::json m = read_json(out / "metrics.json");
    const double au = m["auroc"]["mean"].get<double>();
    t.check(std::isfinite(au) && au >= 0.0 && au <= 1.0, value + " AUROC out of range");
    t.check(m["folds"].size() == 3, value + " fold count");
    summary += format(" %s=%.3f", value.c_str(), au);
  };
  for (const char* v : {"full", "sf_only", "af_only", "gcn", "no_cf"}) cv("--variant", v);
  for (const char* d : {"cross", "noncross", "drug_only", "disease_only"}) cv("--decoder", d);
  return t.outcome("AUROC" + summary);
}

}  // namespace
}  // namespace dfdrnn

int main() {
  using namespace dfdrnn;
  testing::TempDir dir;
  const std::filesystem::path root = dir.path();
  const std::string manifest = (root / "planted" / "manifest.json").string();

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradient_correctness},
      {2, "attention invariants", attention_invariants},
      {3, "metric oracle equivalence", metric_oracles},
      {4, "encoder algebra", encoder_algebra},
      {5, "planted-data learning", planted_learning},
      {6, "determinism", [&] { return determinism(root, manifest); }},
      {7, "loss arithmetic", loss_arithmetic},
      {8, "Gdataset reproduction", gdataset_reproduction},
      {9, "top-t trend", topt_trend},
      {10, "ablation harness", [&] { return ablation_harness(root, manifest); }},
  };

  if (run({"planted", "--out", (root / "planted").string(), "--seed", "42"}) != 0) {
    std::cout << "could not write the planted dataset\n";
    return 1;
  }
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failed += o.status == Status::kFail;
    std::cout << "criterion " << c.id << ": " << tag << "  " << c.name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
