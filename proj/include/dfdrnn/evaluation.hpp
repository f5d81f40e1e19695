#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dfdrnn/dataset.hpp"
#include "dfdrnn/metrics.hpp"
#include "dfdrnn/model.hpp"
#include "dfdrnn/trainer.hpp"

namespace dfdrnn {

// kAll partitions every unknown pair across the folds; kBalanced keeps only
// as many held-out negatives per fold as it has held-out positives.
enum class NegativeMode { kAll, kBalanced };
// Class weight from each training split, or once from the full matrix.
enum class LambdaMode { kPerFold, kFullData };

struct Fold {
  std::vector<Pair> positives;
  std::vector<Pair> negatives;
};

struct FoldPlan {
  std::size_t k = 0;
  std::vector<Fold> folds;
};

// Shuffles positives and negatives independently and deals them round-robin,
// so fold sizes differ by at most one. Throws ConfigError if k < 2 or there
// are fewer than k positives.
FoldPlan kfold_split(const Tensor& assoc, std::size_t k, Rng& rng,
                     NegativeMode negatives = NegativeMode::kAll);

struct EvalOptions {
  std::size_t folds = 10;
  std::size_t repeats = 1;
  std::size_t threads = 1;  // concurrent training runs; never changes results
  NegativeMode negatives = NegativeMode::kAll;
  LambdaMode lambda = LambdaMode::kPerFold;
  bool mask_features = true;  // also hide held-out positives from h_init_a
};

// Everything one training run may see.
struct TrainingView {
  const Dataset* data = nullptr;
  PairSet held_out;  // positives hidden from the graph, features and labels
  LabelSets labels;
  ModelInputs inputs;
  std::uint64_t seed = 0;
};

// Produces an n x m score matrix for a training view.
using ScoreFn = std::function<Tensor(const TrainingView&)>;

// Trains the configured model on the view and returns eval-mode scores.
ScoreFn model_scorer(const ModelConfig& model_cfg, const TrainConfig& train_cfg);

struct FoldMetrics {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double auroc = 0.0;
  double aupr = 0.0;
};

struct MetricsReport {
  std::vector<FoldMetrics> folds;
  double auroc_mean = 0.0;
  double auroc_std = 0.0;
  double aupr_mean = 0.0;
  double aupr_std = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  // Held-out scores of the first repeat, concatenated in fold order.
  std::vector<double> pooled_scores;
  std::vector<int> pooled_labels;
};

// Fills the mean and sample standard deviation from `folds`.
void summarize(MetricsReport& report);

struct CvSetup {
  const Dataset* data = nullptr;
  std::size_t top_t = 7;
  EvalOptions options;
  std::uint64_t seed = 42;
};

// Repeated k-fold cross-validation. Each fold's positives are hidden from the
// training labels, from E_a and (optionally) from h_init_a; held-out fold
// negatives are excluded from the training labels. Metrics are computed over
// the held-out pairs only.
MetricsReport cross_validate(const CvSetup& setup, const ScoreFn& scorer);

struct DiseaseResult {
  std::size_t disease = 0;
  std::size_t positives = 0;
  std::optional<double> auroc;  // absent when the column has a single class
  std::optional<double> aupr;
};

struct LoocvReport {
  MetricsReport global;  // one fold entry holding the pooled curve metrics
  std::vector<DiseaseResult> diseases;
};

// Leave-one-disease-out: for every disease with associations, all of its
// associations are removed from training and its column is scored. Curves
// pool every scored column. `max_diseases` limits the run (0 = all).
LoocvReport loocv_new_disease(const CvSetup& setup, const ScoreFn& scorer,
                              std::size_t max_diseases = 0);

struct RankedCandidate {
  std::size_t drug = 0;
  std::string drug_id;
  double score = 0.0;
};

struct RankedCandidates {
  std::string disease_id;
  std::size_t top_k = 0;
  std::vector<RankedCandidate> ranking;  // scores non-increasing
};

// Top unknown drugs for a disease from a full-data score matrix. Ties go to
// the smaller drug index. Throws DataError for an unknown disease id.
RankedCandidates rank_candidates(const Tensor& scores, const Dataset& data,
                                 const std::string& disease_id, std::size_t top_k);

// Trains on every association, then ranks.
RankedCandidates rank_candidates(const Dataset& data, const std::string& disease_id,
                                 std::size_t top_k, const ModelConfig& model_cfg,
                                 const TrainConfig& train_cfg);

struct TopTRow {
  std::size_t t = 0;
  MetricsReport report;
};

std::vector<TopTRow> sweep_topt(const CvSetup& setup, const ModelConfig& model_cfg,
                                const TrainConfig& train_cfg, const std::vector<std::size_t>& t_values);

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points);
void write_pr_csv(const std::filesystem::path& path, const std::vector<PrPoint>& points);
void write_ranking_csv(const std::filesystem::path& path, const RankedCandidates& ranked);
void write_topt_csv(const std::filesystem::path& path, const std::vector<TopTRow>& rows);

}  // namespace dfdrnn
