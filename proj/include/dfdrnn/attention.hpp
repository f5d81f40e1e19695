#pragma once

#include <cstddef>
#include <vector>

#include "dfdrnn/autodiff.hpp"
#include "dfdrnn/tensor.hpp"

namespace dfdrnn {

inline constexpr double kLeakySlope = 0.01;

// Weights of one sam + FC block. Biases are 1 x k rows.
struct SamParams {
  Tensor w_q, w_k, w_v;
  Tensor w_r, w_d;
  Tensor b_r, b_d;

  static SamParams zeros(std::size_t k);
  static SamParams xavier(std::size_t k, Rng& rng);
};

// SamParams as tape nodes.
struct SamVars {
  ad::Var w_q, w_k, w_v;
  ad::Var w_r, w_d;
  ad::Var b_r, b_d;

  static SamVars constants(ad::Tape& tape, const SamParams& p);
  static SamVars parameters(ad::Tape& tape, const SamParams& p);
};

struct AttentionShape {
  std::size_t drugs = 0;   // first rows of the feature matrix
  std::size_t heads = 1;
  double slope = kLeakySlope;
};

// Multi-head graph-masked self-attention. Q, K, V are split column-wise into
// `heads` blocks; each node attends over its neighbors with scaled dot
// products. If `head_weights` is given it receives the per-head (edges x 1)
// attention weights.
ad::Var sam(const ad::CsrPtr& graph, ad::Var h_in, const SamVars& params, std::size_t heads,
            std::vector<ad::Var>* head_weights = nullptr);

// sam followed by the per-domain fully connected layer with LeakyReLU:
// rows [0, drugs) use (w_r, b_r), the rest use (w_d, b_d).
ad::Var samf(const ad::CsrPtr& graph, ad::Var h_in, const SamVars& params,
             const AttentionShape& shape);

// Symmetric-normalized neighbor aggregation followed by one dense layer:
// out_i = LeakyReLU((sum_j h_j / sqrt(d_i d_j)) * weight + bias), with d the
// neighbor count of each node.
ad::Var gcn_aggregate(const ad::CsrPtr& graph, ad::Var h_in, ad::Var weight, ad::Var bias,
                      double slope = kLeakySlope);

}  // namespace dfdrnn
