#pragma once

// Reference implementations used by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <vector>

#include "dfdrnn/attention.hpp"
#include "dfdrnn/graph.hpp"
#include "dfdrnn/rng.hpp"
#include "test_util.hpp"

namespace dfdrnn::testing {

using Neighbors = std::vector<std::vector<std::size_t>>;

inline ad::CsrPtr csr(const Neighbors& nb) { return std::make_shared<const Csr>(to_csr(nb)); }

// Xavier weights with nonzero biases.
inline SamParams random_sam(std::size_t k, Rng& rng) {
  SamParams p = SamParams::xavier(k, rng);
  p.b_r = random_tensor(1, k, rng, -0.5, 0.5);
  p.b_d = random_tensor(1, k, rng, -0.5, 0.5);
  return p;
}

// Dense per-head attention straight from the definition.
struct DenseHead {
  std::vector<std::vector<double>> beta;  // nodes x nodes
  Tensor out;                             // nodes x width
};

inline DenseHead dense_head(const Neighbors& nb, const Tensor& h, const SamParams& p,
                            std::size_t heads, std::size_t head) {
  const std::size_t n = h.rows(), k = h.cols(), w = k / heads, lo = head * w;
  auto project = [&](const Tensor& weight) {
    Tensor out(n, w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < w; ++c)
        for (std::size_t r = 0; r < k; ++r) out(i, c) += h(i, r) * weight(r, lo + c);
    return out;
  };
  const Tensor q = project(p.w_q), kk = project(p.w_k), v = project(p.w_v);
  DenseHead res{std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)), Tensor(n, w)};
  for (std::size_t i = 0; i < n; ++i) {
    if (nb[i].empty()) continue;
    std::vector<double> logits;
    for (std::size_t j : nb[i]) {
      double dot = 0.0;
      for (std::size_t c = 0; c < w; ++c) dot += q(i, c) * kk(j, c);
      logits.push_back(dot / std::sqrt(static_cast<double>(w)));
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t e = 0; e < nb[i].size(); ++e) res.beta[i][nb[i][e]] = logits[e] / z;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < w; ++c) res.out(i, c) += res.beta[i][j] * v(j, c);
  }
  return res;
}

// Random graph, features and weights for one attention property instance.
struct AttentionInstance {
  std::size_t nodes = 0, heads = 1, k = 1;
  Neighbors nb;
  Tensor h;
  SamParams params;
  std::vector<std::size_t> perm;  // random relabelling of the nodes

  static AttentionInstance make(int index) {
    Rng rng(static_cast<std::uint64_t>(index) * 104729 + 17);
    AttentionInstance x;
    x.nodes = 3 + static_cast<std::size_t>(uniform01(rng) * 12);
    x.heads = index % 3 == 0 ? 1 : (index % 3 == 1 ? 2 : 4);
    x.k = x.heads * (1 + static_cast<std::size_t>(uniform01(rng) * 3));
    x.nb = random_neighbors(x.nodes, 0.1 + 0.5 * uniform01(rng), rng, index % 2 == 0);
    x.h = random_tensor(x.nodes, x.k, rng);
    x.params = random_sam(x.k, rng);
    x.perm.resize(x.nodes);
    std::iota(x.perm.begin(), x.perm.end(), 0);
    for (std::size_t i = x.nodes; i > 1; --i)
      std::swap(x.perm[i - 1], x.perm[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i))]);
    return x;
  }

  Neighbors permuted_neighbors() const {
    Neighbors out(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      for (std::size_t j : nb[i]) out[perm[i]].push_back(perm[j]);
      std::sort(out[perm[i]].begin(), out[perm[i]].end());
    }
    return out;
  }

  Tensor permuted_features() const {
    Tensor out(nodes, k);
    for (std::size_t i = 0; i < nodes; ++i)
      for (std::size_t c = 0; c < k; ++c) out(perm[i], c) = h(i, c);
    return out;
  }
};

struct ScoredInstance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Up to 50 scores, both classes present; half the instances use coarse
// scores so that ties are common.
inline ScoredInstance random_scored_instance(Rng& rng) {
  ScoredInstance x;
  const std::size_t n = 2 + rng() % 49;
  const bool coarse = rng() % 2 == 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    x.scores.push_back(coarse ? std::floor(u * 6.0) / 6.0 : u);
    x.labels.push_back(uniform01(rng) < 0.4 ? 1 : 0);
  }
  x.labels[0] = 1;
  x.labels[1] = 0;
  return x;
}

// Pairwise counting with ties worth one half.
inline double mann_whitney(const ScoredInstance& x) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < x.scores.size(); ++i) {
    if (x.labels[i] != 1) continue;
    for (std::size_t j = 0; j < x.scores.size(); ++j) {
      if (x.labels[j] != 0) continue;
      pairs += 1.0;
      if (x.scores[i] > x.scores[j]) wins += 1.0;
      else if (x.scores[i] == x.scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// For every distinct threshold, descending: predict positive when score >=
// threshold, then sum the recall increments times precision.
inline double brute_aupr(const ScoredInstance& x) {
  std::set<double, std::greater<>> thresholds(x.scores.begin(), x.scores.end());
  const double total_pos = static_cast<double>(std::count(x.labels.begin(), x.labels.end(), 1));
  double area = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, predicted = 0.0;
    for (std::size_t i = 0; i < x.scores.size(); ++i) {
      if (x.scores[i] >= t) {
        predicted += 1.0;
        tp += x.labels[i];
      }
    }
    const double recall = tp / total_pos;
    area += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return area;
}

}  // namespace dfdrnn::testing
