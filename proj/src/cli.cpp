#include "dfdrnn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dfdrnn/checkpoint.hpp"
#include "dfdrnn/config.hpp"
#include "dfdrnn/dataset.hpp"
#include "dfdrnn/error.hpp"
#include "dfdrnn/evaluation.hpp"
#include "dfdrnn/planted.hpp"

namespace dfdrnn {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Flags are collected as JSON overrides and merged after the config file, so
// they share its validation and win over it.
struct Overrides {
  std::vector<std::function<void(json&)>> pending;

  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key,
                   const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    pending.push_back([opt, value, key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
    return opt;
  }

  json collect() const {
    json j = json::object();
    for (const auto& f : pending) f(j);
    return j;
  }
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  Overrides overrides;
};

void add_common(Command& c) {
  c.app->add_option("--config", c.config_path, "JSON config file");
  auto& o = c.overrides;
  o.add<std::string>(c.app, "--dataset", "dataset", "dataset manifest (JSON)");
  o.add<std::string>(c.app, "--out", "out", "output directory");
  o.add<std::uint64_t>(c.app, "--seed", "seed", "master seed");
  o.add<std::size_t>(c.app, "--threads", "threads", "concurrent training runs");
}

void add_model(Command& c) {
  auto& o = c.overrides;
  o.add<std::size_t>(c.app, "--k", "k", "embedding dimension");
  o.add<std::size_t>(c.app, "--layers", "layers", "encoder layers");
  o.add<std::size_t>(c.app, "--heads", "heads", "attention heads");
  o.add<double>(c.app, "--dropout", "dropout", "feature dropout rate");
  o.add<double>(c.app, "--edge-dropout", "edge_dropout", "edge dropout rate");
  o.add<std::size_t>(c.app, "--top-t", "top_t", "neighbors kept per similarity row");
  o.add<std::string>(c.app, "--variant", "variant", "full, sf_only, af_only, gcn or no_cf");
  o.add<std::string>(c.app, "--decoder", "decoder",
                     "cross, noncross, drug_only, disease_only, noncross_drug or noncross_disease");
  o.add<double>(c.app, "--lr", "lr", "Adam learning rate");
  o.add<std::size_t>(c.app, "--epochs", "epochs", "training epochs");
}

void add_eval(Command& c) {
  auto& o = c.overrides;
  o.add<std::size_t>(c.app, "--folds", "folds", "cross-validation folds");
  o.add<std::size_t>(c.app, "--repeats", "repeats", "cross-validation repeats");
  o.add<std::string>(c.app, "--negatives", "negatives", "all or balanced");
  o.add<std::string>(c.app, "--lambda-mode", "lambda_mode", "per_fold or full_data");
  o.add<bool>(c.app, "--mask-features", "mask_features", "hide held-out positives from features");
}

RunConfig resolve(const Command& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  apply_json(cfg, c.overrides.collect());
  cfg.validate();
  return cfg;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path out(cfg.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

// Config as embedded in result files: only what affects the numbers.
json result_config(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("out");
  j.erase("threads");
  return j;
}

void write_manifest(const fs::path& out, const std::string& command, const RunConfig& cfg) {
  write_json(out / "run_manifest.json", {{"command", command},
                                         {"config", to_json(cfg)},
                                         {"config_hash", config_hash(cfg)},
                                         {"seed", cfg.train.seed},
                                         {"timestamp", utc_timestamp()}});
}

Dataset require_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("a dataset manifest is required (--dataset)");
  return load_dataset(cfg.dataset);
}

CvSetup make_setup(const RunConfig& cfg, const Dataset& data) {
  return {&data, cfg.model.top_t, cfg.eval, cfg.train.seed};
}

json fold_json(const MetricsReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"repeat", f.repeat},
                     {"fold", f.fold},
                     {"positives", f.positives},
                     {"negatives", f.negatives},
                     {"auroc", f.auroc},
                     {"aupr", f.aupr}});
  }
  return folds;
}

json report_json(const MetricsReport& r) {
  return {{"folds", fold_json(r)},
          {"auroc", {{"mean", r.auroc_mean}, {"std", r.auroc_std}}},
          {"aupr", {{"mean", r.aupr_mean}, {"std", r.aupr_std}}}};
}

json envelope(const std::string& command, const RunConfig& cfg) {
  return {{"command", command},
          {"config", result_config(cfg)},
          {"config_hash", config_hash(cfg)},
          {"seed", cfg.train.seed}};
}

void write_curves(const fs::path& out, const MetricsReport& r) {
  write_roc_csv(out / "roc.csv", roc_points(r.pooled_scores, r.pooled_labels));
  write_pr_csv(out / "pr.csv", pr_points(r.pooled_scores, r.pooled_labels));
}

void print_summary(std::ostream& out, const std::string& label, const MetricsReport& r) {
  out << std::fixed << std::setprecision(4) << label << "AUROC " << r.auroc_mean << " +/- "
      << r.auroc_std << "  AUPR " << r.aupr_mean << " +/- " << r.aupr_std << '\n';
  out.unsetf(std::ios::floatfield);
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const Dataset d = require_dataset(cfg);
  const ValidationReport report = validate_dataset(d);
  const fs::path dir = prepare_out(cfg);
  write_manifest(dir, "validate", cfg);
  out << "dataset " << d.name << ": " << report.drugs << " drugs, " << report.diseases
      << " diseases, " << report.associations << " associations (density " << report.density
      << ")\n";
  for (const auto& c : report.checks) {
    out << (c.passed ? "ok   " : c.warning_only ? "warn " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
  }
  if (report.drugs_without_associations + report.diseases_without_associations > 0) {
    out << "no associations: " << report.drugs_without_associations << " drugs, "
        << report.diseases_without_associations << " diseases\n";
  }
  return report.ok() ? kExitOk : kExitRuntime;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const Dataset d = require_dataset(cfg);
  const fs::path dir = prepare_out(cfg);
  write_manifest(dir, "train", cfg);
  const ModelInputs inputs = make_inputs(d, cfg.model.top_t);
  const TrainResult r = train(inputs, labels_from_matrix(d.assoc.values), cfg.model, cfg.train);
  write_loss_csv(dir / "loss.csv", r.loss_trace);
  save_checkpoint(dir / "checkpoint.bin", {cfg.model, r.params, DatasetFingerprint::of(d)});
  out << "trained " << r.loss_trace.size() << " epochs, final loss "
      << (r.loss_trace.empty() ? 0.0 : r.loss_trace.back()) << '\n'
      << "wrote " << (dir / "checkpoint.bin").string() << '\n';
  return kExitOk;
}

int cmd_cv(const RunConfig& cfg, std::ostream& out) {
  const Dataset d = require_dataset(cfg);
  const fs::path dir = prepare_out(cfg);
  write_manifest(dir, "cv", cfg);
  MetricsReport r = cross_validate(make_setup(cfg, d), model_scorer(cfg.model, cfg.train));
  r.config_hash = config_hash(cfg);
  json j = envelope("cv", cfg);
  j.update(report_json(r));
  write_json(dir / "metrics.json", j);
  write_curves(dir, r);
  print_summary(out, std::to_string(cfg.eval.folds) + "-fold CV  ", r);
  return kExitOk;
}

int cmd_loocv(const RunConfig& cfg, std::ostream& out) {
  const Dataset d = require_dataset(cfg);
  const fs::path dir = prepare_out(cfg);
  write_manifest(dir, "loocv", cfg);
  const LoocvReport r = loocv_new_disease(make_setup(cfg, d), model_scorer(cfg.model, cfg.train),
                                          cfg.loocv_max_diseases);
  json diseases = json::array();
  for (const auto& dr : r.diseases) {
    diseases.push_back({{"disease", d.ids.disease_ids[dr.disease]},
                        {"positives", dr.positives},
                        {"auroc", dr.auroc ? json(*dr.auroc) : json(nullptr)},
                        {"aupr", dr.aupr ? json(*dr.aupr) : json(nullptr)}});
  }
  json j = envelope("loocv", cfg);
  j["auroc"] = r.global.auroc_mean;
  j["aupr"] = r.global.aupr_mean;
  j["diseases"] = diseases;
  write_json(dir / "metrics.json", j);
  write_curves(dir, r.global);
  out << "LOOCV over " << r.diseases.size() << " diseases  AUROC " << r.global.auroc_mean
      << "  AUPR " << r.global.aupr_mean << '\n';
  return kExitOk;
}

int cmd_rank(const RunConfig& cfg, std::ostream& out) {
  if (cfg.disease.empty()) throw ConfigError("rank needs --disease");
  const Dataset d = require_dataset(cfg);
  const fs::path dir = prepare_out(cfg);
  write_manifest(dir, "rank", cfg);
  RankedCandidates ranked;
  if (!cfg.checkpoint.empty()) {
    const DatasetFingerprint fp = DatasetFingerprint::of(d);
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint, &fp);
    const ModelInputs inputs = make_inputs(d, ckpt.config.top_t);
    ranked = rank_candidates(predict(inputs, ckpt.params, ckpt.config).values, d, cfg.disease,
                             cfg.top_k);
  } else {
    ranked = rank_candidates(d, cfg.disease, cfg.top_k, cfg.model, cfg.train);
  }
  write_ranking_csv(dir / "ranking.csv", ranked);
  out << "top " << ranked.ranking.size() << " candidates for " << cfg.disease << '\n';
  for (std::size_t r = 0; r < ranked.ranking.size(); ++r) {
    out << std::setw(3) << r + 1 << "  " << ranked.ranking[r].drug_id << "  "
        << ranked.ranking[r].score << '\n';
  }
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const Dataset d = require_dataset(cfg);
  const fs::path dir = prepare_out(cfg);
  write_manifest(dir, "sweep-topt", cfg);
  const auto rows = sweep_topt(make_setup(cfg, d), cfg.model, cfg.train, cfg.t_values);
  write_topt_csv(dir / "topt.csv", rows);
  json points = json::array();
  for (const auto& row : rows) {
    json p = report_json(row.report);
    p["t"] = row.t;
    points.push_back(p);
    print_summary(out, "t=" + std::to_string(row.t) + "  ", row.report);
  }
  json j = envelope("sweep-topt", cfg);
  j["sweep"] = points;
  write_json(dir / "metrics.json", j);
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& base, double eps, std::ostream& out) {
  RunConfig cfg = base;
  cfg.model.k = 8;
  cfg.model.heads = 2;
  cfg.model.layers = 2;
  cfg.model.top_t = std::min<std::size_t>(cfg.model.top_t, 3);
  cfg.validate();
  const fs::path dir = prepare_out(cfg);
  write_manifest(dir, "gradcheck", cfg);

  const Dataset toy = make_planted_dataset({6, 4, 2, 0.0}, cfg.train.seed);
  const ModelInputs inputs = make_inputs(toy, cfg.model.top_t);
  const LabelSets labels = labels_from_matrix(toy.assoc.values);
  const ad::GradCheckResult r = model_gradcheck(inputs, labels, cfg.model, cfg.train.seed, eps);

  Rng unused(0);
  const auto names = init_params(inputs.nodes(), cfg.model, unused).tensor_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << std::left << std::setw(22) << names[i] << std::right << std::scientific
        << std::setprecision(3) << r.per_param[i] << '\n';
  }
  const bool pass = r.max_rel_error < 1e-4;
  out << "max relative error " << std::scientific << std::setprecision(3) << r.max_rel_error
      << " over " << r.entries_checked << " entries: " << (pass ? "PASS" : "FAIL") << '\n'
      << "max per-entry error " << r.max_entry_error << '\n';
  if (r.max_entry_error > 1e-4) {
    out << "worst entry " << names[r.worst_param] << '[' << r.worst_index << "]: analytic "
        << r.worst_analytic << ", numeric " << r.worst_numeric << '\n';
  }
  out.unsetf(std::ios::floatfield);
  return pass ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-feature graph attention model for drug repositioning"};
  app.name("dfdrnn");
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto command = [&](const std::string& name, const std::string& help) -> Command& {
    commands.push_back(std::make_unique<Command>());
    commands.back()->app = app.add_subcommand(name, help);
    add_common(*commands.back());
    return *commands.back();
  };

  command("validate", "check a dataset");
  Command& train_cmd = command("train", "train on all associations and save a checkpoint");
  add_model(train_cmd);
  Command& cv = command("cv", "k-fold cross-validation");
  add_model(cv);
  add_eval(cv);
  Command& loocv = command("loocv", "leave-one-disease-out evaluation");
  add_model(loocv);
  add_eval(loocv);
  loocv.overrides.add<std::size_t>(loocv.app, "--max-diseases", "loocv_max_diseases",
                                   "limit the number of diseases (0 = all)");
  Command& rank = command("rank", "top candidate drugs for one disease");
  add_model(rank);
  rank.overrides.add<std::string>(rank.app, "--disease", "disease", "disease id");
  rank.overrides.add<std::size_t>(rank.app, "--top-k", "top_k", "number of candidates");
  rank.overrides.add<std::string>(rank.app, "--checkpoint", "checkpoint",
                                  "checkpoint to score with instead of training");
  Command& sweep = command("sweep-topt", "cross-validation across top-t values");
  add_model(sweep);
  add_eval(sweep);
  sweep.overrides
      .add<std::vector<std::size_t>>(sweep.app, "--t-values", "t_values", "values of t to evaluate")
      ->delimiter(',');
  Command& gradcheck = command("gradcheck", "finite-difference check of all gradients");
  gradcheck.overrides.add<std::string>(gradcheck.app, "--variant", "variant", "model variant");
  gradcheck.overrides.add<std::string>(gradcheck.app, "--decoder", "decoder", "decoder");
  double gradcheck_eps = 1e-5;
  gradcheck.app->add_option("--eps", gradcheck_eps, "finite difference step")
      ->check(CLI::PositiveNumber);

  PlantedSpec planted_spec;
  std::string planted_out = "planted";
  std::uint64_t planted_seed = 42;
  CLI::App* planted = app.add_subcommand("planted", "write a synthetic block-structured dataset");
  planted->add_option("--out", planted_out, "output directory");
  planted->add_option("--seed", planted_seed, "generator seed");
  planted->add_option("--drugs", planted_spec.drugs, "number of drugs");
  planted->add_option("--diseases", planted_spec.diseases, "number of diseases");
  planted->add_option("--blocks", planted_spec.blocks, "number of planted blocks");
  planted->add_option("--noise", planted_spec.label_noise, "fraction of planted links hidden");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (planted->parsed()) {
      const fs::path manifest = write_dataset(make_planted_dataset(planted_spec, planted_seed), planted_out);
      out << "wrote " << manifest.string() << '\n';
      return kExitOk;
    }
    for (const auto& c : commands) {
      if (!c->app->parsed()) continue;
      const RunConfig cfg = resolve(*c);
      const std::string& name = c->app->get_name();
      if (name == "validate") return cmd_validate(cfg, out);
      if (name == "train") return cmd_train(cfg, out);
      if (name == "cv") return cmd_cv(cfg, out);
      if (name == "loocv") return cmd_loocv(cfg, out);
      if (name == "rank") return cmd_rank(cfg, out);
      if (name == "sweep-topt") return cmd_sweep(cfg, out);
      if (name == "gradcheck") return cmd_gradcheck(cfg, gradcheck_eps, out);
    }
    err << "error: no command\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace dfdrnn
