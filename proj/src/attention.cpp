#include "dfdrnn/attention.hpp"

#include <algorithm>
#include <cmath>

#include "dfdrnn/trainer.hpp"

namespace dfdrnn {

SamParams SamParams::zeros(std::size_t k) {
  return {Tensor(k, k), Tensor(k, k), Tensor(k, k), Tensor(k, k), Tensor(k, k),
          Tensor(1, k), Tensor(1, k)};
}

SamParams SamParams::xavier(std::size_t k, Rng& rng) {
  SamParams p = zeros(k);
  for (Tensor* w : {&p.w_q, &p.w_k, &p.w_v, &p.w_r, &p.w_d}) *w = xavier_init(k, k, rng);
  return p;
}

SamVars SamVars::constants(ad::Tape& tape, const SamParams& p) {
  return {tape.constant(p.w_q), tape.constant(p.w_k), tape.constant(p.w_v), tape.constant(p.w_r),
          tape.constant(p.w_d), tape.constant(p.b_r), tape.constant(p.b_d)};
}

SamVars SamVars::parameters(ad::Tape& tape, const SamParams& p) {
  return {tape.parameter(p.w_q), tape.parameter(p.w_k), tape.parameter(p.w_v),
          tape.parameter(p.w_r), tape.parameter(p.w_d), tape.parameter(p.b_r),
          tape.parameter(p.b_d)};
}

ad::Var sam(const ad::CsrPtr& graph, ad::Var h_in, const SamVars& params, std::size_t heads,
            std::vector<ad::Var>* head_weights) {
  const std::size_t k = h_in.cols();
  if (heads == 0 || k % heads != 0) {
    throw ShapeError("sam: embedding size " + std::to_string(k) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  for (const ad::Var* w : {&params.w_q, &params.w_k, &params.w_v}) {
    if (w->rows() != k || w->cols() != k) throw ShapeError("sam: projection must be k x k");
  }
  if (h_in.rows() != graph->nodes) throw ShapeError("sam: feature rows != graph nodes");

  const ad::Var q = ad::matmul(h_in, params.w_q);
  const ad::Var kk = ad::matmul(h_in, params.w_k);
  const ad::Var v = ad::matmul(h_in, params.w_v);
  const std::size_t width = k / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));

  if (head_weights) head_weights->clear();
  std::vector<ad::Var> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t lo = h * width;
    const std::size_t hi = lo + width;
    const bool whole = heads == 1;
    const ad::Var qh = whole ? q : ad::slice_cols(q, lo, hi);
    const ad::Var kh = whole ? kk : ad::slice_cols(kk, lo, hi);
    const ad::Var vh = whole ? v : ad::slice_cols(v, lo, hi);
    const ad::Var beta = ad::masked_row_softmax(ad::edge_scores(qh, kh, graph, scale), graph);
    if (head_weights) head_weights->push_back(beta);
    outputs.push_back(ad::weighted_sum(beta, vh, graph));
  }
  return heads == 1 ? outputs.front() : ad::concat_cols(outputs);
}

ad::Var samf(const ad::CsrPtr& graph, ad::Var h_in, const SamVars& params,
             const AttentionShape& shape) {
  const ad::Var h = sam(graph, h_in, params, shape.heads);
  const std::size_t total = h.rows();
  if (shape.drugs > total) throw ShapeError("samf: more drugs than rows");
  std::vector<ad::Var> blocks;
  if (shape.drugs > 0) {
    const ad::Var hr = ad::slice_rows(h, 0, shape.drugs);
    blocks.push_back(
        ad::leaky_relu(ad::add_bias_row(ad::matmul(hr, params.w_r), params.b_r), shape.slope));
  }
  if (shape.drugs < total) {
    const ad::Var hd = ad::slice_rows(h, shape.drugs, total);
    blocks.push_back(
        ad::leaky_relu(ad::add_bias_row(ad::matmul(hd, params.w_d), params.b_d), shape.slope));
  }
  return blocks.size() == 1 ? blocks.front() : ad::stack_rows(blocks);
}

ad::Var gcn_aggregate(const ad::CsrPtr& graph, ad::Var h_in, ad::Var weight, ad::Var bias,
                      double slope) {
  if (h_in.rows() != graph->nodes) throw ShapeError("gcn_aggregate: feature rows != graph nodes");
  Tensor coeff(graph->edges(), 1);
  for (std::size_t e = 0; e < graph->edges(); ++e) {
    const double di = static_cast<double>(std::max<std::size_t>(graph->degree(graph->rows[e]), 1));
    const double dj = static_cast<double>(std::max<std::size_t>(graph->degree(graph->cols[e]), 1));
    coeff[e] = 1.0 / std::sqrt(di * dj);
  }
  const ad::Var norm = h_in.tape()->constant(std::move(coeff));
  const ad::Var agg = ad::weighted_sum(norm, h_in, graph);
  return ad::leaky_relu(ad::add_bias_row(ad::matmul(agg, weight), bias), slope);
}

}  // namespace dfdrnn
