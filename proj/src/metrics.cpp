#include "dfdrnn/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "dfdrnn/error.hpp"

namespace dfdrnn {

namespace {

struct Counts {
  double threshold;
  double tp;
  double fp;
};

// Cumulative (TP, FP) after each group of equal scores, highest first.
std::vector<Counts> cumulative_counts(std::span<const double> scores, std::span<const int> labels,
                                      double* positives, double* negatives) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  double pos = 0.0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
    pos += l;
  }
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw DataError("need at least one positive and one negative");
  *positives = pos;
  *negatives = neg;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Counts> out;
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] ? tp : fp) += 1.0;
      ++i;
    }
    out.push_back({s, tp, fp});
  }
  return out;
}

}  // namespace

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels) {
  double pos = 0.0, neg = 0.0;
  const auto counts = cumulative_counts(scores, labels, &pos, &neg);
  std::vector<RocPoint> pts;
  pts.reserve(counts.size() + 1);
  pts.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (const Counts& c : counts) pts.push_back({c.threshold, c.fp / neg, c.tp / pos});
  return pts;
}

std::vector<PrPoint> pr_points(std::span<const double> scores, std::span<const int> labels) {
  double pos = 0.0, neg = 0.0;
  const auto counts = cumulative_counts(scores, labels, &pos, &neg);
  std::vector<PrPoint> pts;
  pts.reserve(counts.size());
  for (const Counts& c : counts) pts.push_back({c.threshold, c.tp / pos, c.tp / (c.tp + c.fp)});
  return pts;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const auto pts = roc_points(scores, labels);
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2.0;
  }
  return area;
}

double aupr(std::span<const double> scores, std::span<const int> labels) {
  const auto pts = pr_points(scores, labels);
  double area = 0.0;
  double prev_recall = 0.0;
  for (const PrPoint& p : pts) {
    area += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return area;
}

}  // namespace dfdrnn
