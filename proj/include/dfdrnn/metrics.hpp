#pragma once

#include <span>
#include <vector>

namespace dfdrnn {

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct PrPoint {
  double threshold;
  double recall;
  double precision;
};

// ROC points over all distinct thresholds, from (0,0) to (1,1). Equal scores
// form one step. Throws DataError unless both classes are present.
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels);

// Precision-recall points at each distinct threshold, in descending score
// order (no synthetic recall-0 point).
std::vector<PrPoint> pr_points(std::span<const double> scores, std::span<const int> labels);

// Trapezoidal area under roc_points; equals the Mann-Whitney statistic with
// ties counted one half.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Step integration sum (R_t - R_{t-1}) * P_t over descending thresholds.
double aupr(std::span<const double> scores, std::span<const int> labels);

}  // namespace dfdrnn
