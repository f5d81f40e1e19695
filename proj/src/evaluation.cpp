#include "dfdrnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>

namespace dfdrnn {

namespace {

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(items[i - 1], items[std::min(j, i - 1)]);
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// Runs body(0..count-1) on up to `threads` threads and rethrows the first
// failure in index order.
template <typename F>
void run_indexed(std::size_t count, std::size_t threads, F&& body) {
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::int64_t>(count);
  const int team = static_cast<int>(std::max<std::size_t>(threads, 1));
#pragma omp parallel for schedule(dynamic, 1) num_threads(team) if (team > 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double full_data_lambda(const Tensor& assoc) {
  double pos = 0.0;
  for (double v : assoc.values()) pos += v != 0.0;
  return (static_cast<double>(assoc.size()) - pos) / pos;
}

}  // namespace

FoldPlan kfold_split(const Tensor& assoc, std::size_t k, Rng& rng, NegativeMode negatives) {
  if (k < 2) throw ConfigError("fold count must be at least 2");
  std::vector<Pair> pos, neg;
  for (std::size_t i = 0; i < assoc.rows(); ++i)
    for (std::size_t j = 0; j < assoc.cols(); ++j) (assoc(i, j) != 0.0 ? pos : neg).emplace_back(i, j);
  if (pos.size() < k) {
    throw ConfigError("too few positives (" + std::to_string(pos.size()) + ") for " +
                      std::to_string(k) + " folds");
  }
  shuffle(pos, rng);
  shuffle(neg, rng);
  FoldPlan plan;
  plan.k = k;
  plan.folds.resize(k);
  for (std::size_t t = 0; t < pos.size(); ++t) plan.folds[t % k].positives.push_back(pos[t]);
  for (std::size_t t = 0; t < neg.size(); ++t) plan.folds[t % k].negatives.push_back(neg[t]);
  if (negatives == NegativeMode::kBalanced) {
    for (Fold& f : plan.folds) {
      if (f.negatives.size() > f.positives.size()) f.negatives.resize(f.positives.size());
    }
  }
  return plan;
}

ScoreFn model_scorer(const ModelConfig& model_cfg, const TrainConfig& train_cfg) {
  return [model_cfg, train_cfg](const TrainingView& view) {
    TrainConfig tc = train_cfg;
    tc.seed = view.seed;
    const TrainResult trained = train(view.inputs, view.labels, model_cfg, tc);
    return predict(view.inputs, trained.params, model_cfg).values;
  };
}

void summarize(MetricsReport& report) {
  const double n = static_cast<double>(report.folds.size());
  if (report.folds.empty()) return;
  double sa = 0.0, sp = 0.0;
  for (const auto& f : report.folds) {
    sa += f.auroc;
    sp += f.aupr;
  }
  report.auroc_mean = sa / n;
  report.aupr_mean = sp / n;
  double va = 0.0, vp = 0.0;
  for (const auto& f : report.folds) {
    va += (f.auroc - report.auroc_mean) * (f.auroc - report.auroc_mean);
    vp += (f.aupr - report.aupr_mean) * (f.aupr - report.aupr_mean);
  }
  report.auroc_std = report.folds.size() > 1 ? std::sqrt(va / (n - 1.0)) : 0.0;
  report.aupr_std = report.folds.size() > 1 ? std::sqrt(vp / (n - 1.0)) : 0.0;
}

MetricsReport cross_validate(const CvSetup& setup, const ScoreFn& scorer) {
  const Dataset& data = *setup.data;
  const EvalOptions& opt = setup.options;
  if (opt.repeats < 1) throw ConfigError("repeats must be at least 1");
  const Tensor& assoc = data.assoc.values;

  std::vector<FoldPlan> plans;
  for (std::size_t r = 0; r < opt.repeats; ++r) {
    Rng rng = make_rng(setup.seed, Stream::kFolds, r);
    plans.push_back(kfold_split(assoc, opt.folds, rng, opt.negatives));
  }
  const double lambda_full = full_data_lambda(assoc);

  const std::size_t runs = opt.repeats * opt.folds;
  std::vector<FoldMetrics> metrics(runs);
  std::vector<std::vector<double>> fold_scores(runs);
  std::vector<std::vector<int>> fold_labels(runs);

  run_indexed(runs, opt.threads, [&](std::size_t idx) {
    const std::size_t r = idx / opt.folds;
    const std::size_t f = idx % opt.folds;
    const Fold& fold = plans[r].folds[f];

    TrainingView view;
    view.data = &data;
    view.held_out = PairSet(fold.positives.begin(), fold.positives.end());
    PairSet exclude = view.held_out;
    exclude.insert(fold.negatives.begin(), fold.negatives.end());
    view.labels = labels_from_matrix(assoc, exclude);
    if (opt.lambda == LambdaMode::kFullData) view.labels.lambda = lambda_full;
    view.inputs = make_inputs(data, setup.top_t, view.held_out, opt.mask_features);
    view.seed = derive_seed(setup.seed, Stream::kRun, idx);

    const Tensor scores = scorer(view);
    if (scores.rows() != data.drugs() || scores.cols() != data.diseases()) {
      throw ShapeError("scorer returned " + scores.shape_string());
    }
    auto& s = fold_scores[idx];
    auto& l = fold_labels[idx];
    for (const auto& [i, j] : fold.positives) {
      s.push_back(scores(i, j));
      l.push_back(1);
    }
    for (const auto& [i, j] : fold.negatives) {
      s.push_back(scores(i, j));
      l.push_back(0);
    }
    metrics[idx] = {r, f, fold.positives.size(), fold.negatives.size(), auroc(s, l), aupr(s, l)};
  });

  MetricsReport report;
  report.seed = setup.seed;
  report.folds = std::move(metrics);
  for (std::size_t f = 0; f < opt.folds; ++f) {
    report.pooled_scores.insert(report.pooled_scores.end(), fold_scores[f].begin(),
                                fold_scores[f].end());
    report.pooled_labels.insert(report.pooled_labels.end(), fold_labels[f].begin(),
                                fold_labels[f].end());
  }
  summarize(report);
  return report;
}

LoocvReport loocv_new_disease(const CvSetup& setup, const ScoreFn& scorer,
                              std::size_t max_diseases) {
  const Dataset& data = *setup.data;
  const Tensor& assoc = data.assoc.values;
  const std::size_t n = data.drugs();
  std::vector<std::size_t> targets;
  for (std::size_t x = 0; x < data.diseases(); ++x) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) any |= assoc(i, x) != 0.0;
    if (any) targets.push_back(x);
  }
  if (targets.empty()) throw DataError("no disease has associations");
  const std::size_t associated = targets.size();
  if (max_diseases > 0 && targets.size() > max_diseases) targets.resize(max_diseases);
  const double lambda_full = full_data_lambda(assoc);

  std::vector<std::vector<double>> column_scores(targets.size());
  run_indexed(targets.size(), setup.options.threads, [&](std::size_t idx) {
    const std::size_t x = targets[idx];
    TrainingView view;
    view.data = &data;
    PairSet column;
    for (std::size_t i = 0; i < n; ++i) {
      column.insert({i, x});
      if (assoc(i, x) != 0.0) view.held_out.insert({i, x});
    }
    // With a single associated disease nothing positive is left to train on;
    // scorers that need positives report that themselves.
    if (associated > 1) {
      view.labels = labels_from_matrix(assoc, column);
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < data.diseases(); ++j)
          if (j != x) view.labels.negatives.emplace_back(i, j);
    }
    if (setup.options.lambda == LambdaMode::kFullData) view.labels.lambda = lambda_full;
    view.inputs = make_inputs(data, setup.top_t, view.held_out, setup.options.mask_features);
    view.seed = derive_seed(setup.seed, Stream::kRun, x);
    const Tensor scores = scorer(view);
    for (std::size_t i = 0; i < n; ++i) column_scores[idx].push_back(scores(i, x));
  });

  LoocvReport out;
  for (std::size_t idx = 0; idx < targets.size(); ++idx) {
    const std::size_t x = targets[idx];
    std::vector<int> labels(n);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = assoc(i, x) != 0.0;
      pos += labels[i];
    }
    DiseaseResult dr;
    dr.disease = x;
    dr.positives = pos;
    if (pos < n) {
      dr.auroc = auroc(column_scores[idx], labels);
      dr.aupr = aupr(column_scores[idx], labels);
    }
    out.diseases.push_back(dr);
    out.global.pooled_scores.insert(out.global.pooled_scores.end(), column_scores[idx].begin(),
                                    column_scores[idx].end());
    out.global.pooled_labels.insert(out.global.pooled_labels.end(), labels.begin(), labels.end());
  }
  out.global.seed = setup.seed;
  const auto& s = out.global.pooled_scores;
  const auto& l = out.global.pooled_labels;
  const std::size_t pos = static_cast<std::size_t>(std::count(l.begin(), l.end(), 1));
  out.global.folds.push_back(
      {0, 0, pos, l.size() - pos, auroc(s, l), aupr(s, l)});
  summarize(out.global);
  return out;
}

RankedCandidates rank_candidates(const Tensor& scores, const Dataset& data,
                                 const std::string& disease_id, std::size_t top_k) {
  const auto& ids = data.ids.disease_ids;
  const auto it = std::find(ids.begin(), ids.end(), disease_id);
  if (it == ids.end()) throw DataError("unknown disease id '" + disease_id + "'");
  const auto x = static_cast<std::size_t>(it - ids.begin());
  if (scores.rows() != data.drugs() || scores.cols() != data.diseases()) {
    throw ShapeError("score matrix " + scores.shape_string() + " does not match dataset");
  }
  std::vector<std::size_t> unknown;
  for (std::size_t i = 0; i < data.drugs(); ++i)
    if (data.assoc.values(i, x) == 0.0) unknown.push_back(i);
  std::stable_sort(unknown.begin(), unknown.end(),
                   [&](std::size_t a, std::size_t b) { return scores(a, x) > scores(b, x); });
  if (unknown.size() > top_k) unknown.resize(top_k);

  RankedCandidates out;
  out.disease_id = disease_id;
  out.top_k = top_k;
  for (std::size_t i : unknown) out.ranking.push_back({i, data.ids.drug_ids[i], scores(i, x)});
  return out;
}

RankedCandidates rank_candidates(const Dataset& data, const std::string& disease_id,
                                 std::size_t top_k, const ModelConfig& model_cfg,
                                 const TrainConfig& train_cfg) {
  const ModelInputs inputs = make_inputs(data, model_cfg.top_t);
  const TrainResult trained = train(inputs, labels_from_matrix(data.assoc.values), model_cfg, train_cfg);
  return rank_candidates(predict(inputs, trained.params, model_cfg).values, data, disease_id, top_k);
}

std::vector<TopTRow> sweep_topt(const CvSetup& setup, const ModelConfig& model_cfg,
                                const TrainConfig& train_cfg,
                                const std::vector<std::size_t>& t_values) {
  if (t_values.empty()) throw ConfigError("top-t sweep needs at least one value");
  std::vector<TopTRow> rows;
  for (std::size_t t : t_values) {
    CvSetup s = setup;
    s.top_t = t;
    ModelConfig mc = model_cfg;
    mc.top_t = t;
    rows.push_back({t, cross_validate(s, model_scorer(mc, train_cfg))});
  }
  return rows;
}

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points) {
  auto out = open_csv(path);
  out << "threshold,fpr,tpr\n";
  for (const auto& p : points) out << fmt(p.threshold) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << '\n';
}

void write_pr_csv(const std::filesystem::path& path, const std::vector<PrPoint>& points) {
  auto out = open_csv(path);
  out << "threshold,recall,precision\n";
  for (const auto& p : points)
    out << fmt(p.threshold) << ',' << fmt(p.recall) << ',' << fmt(p.precision) << '\n';
}

void write_ranking_csv(const std::filesystem::path& path, const RankedCandidates& ranked) {
  auto out = open_csv(path);
  out << "rank,drug_id,score\n";
  for (std::size_t r = 0; r < ranked.ranking.size(); ++r) {
    out << r + 1 << ',' << ranked.ranking[r].drug_id << ',' << fmt(ranked.ranking[r].score) << '\n';
  }
}

void write_topt_csv(const std::filesystem::path& path, const std::vector<TopTRow>& rows) {
  auto out = open_csv(path);
  out << "t,auroc_mean,auroc_std,aupr_mean,aupr_std\n";
  for (const auto& row : rows) {
    out << row.t << ',' << fmt(row.report.auroc_mean) << ',' << fmt(row.report.auroc_std) << ','
        << fmt(row.report.aupr_mean) << ',' << fmt(row.report.aupr_std) << '\n';
  }
}

}  // namespace dfdrnn
