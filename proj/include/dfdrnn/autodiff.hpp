#pragma once

// Tape-based reverse-mode differentiation over a fixed set of matrix
// primitives. A Tape records nodes in creation order, which is always a
// topological order; backward() walks it in reverse.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dfdrnn/graph.hpp"
#include "dfdrnn/rng.hpp"
#include "dfdrnn/tensor.hpp"

namespace dfdrnn::ad {

class Tape;

enum class Op {
  kConstant,
  kParameter,
  kMatmul,
  kAdd,
  kAddBiasRow,
  kScale,
  kScaleBy,
  kTranspose,
  kLeakyRelu,
  kSigmoid,
  kConcatCols,
  kSliceCols,
  kSliceRows,
  kStackRows,
  kHadamard,
  kEdgeScores,
  kMaskedRowSoftmax,
  kWeightedSum,
  kLog,
  kClampedLog,
  kAffine,
  kSum,
  kWeightedTotal,
  kDropout,
};

const char* op_name(Op op);

// Lightweight handle to a node on a tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Input that never receives a gradient (features, masks).
  Var constant(Tensor value);
  // Trainable leaf; its gradient is available after backward().
  Var parameter(Tensor value);

  // Accumulates d(loss)/d(node) into every node that depends on a parameter.
  // Throws ShapeError unless loss is 1x1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  Op op(std::size_t id) const { return nodes_[id].op; }
  const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_[id].parents; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Primitive plumbing: appends a node whose gradient flows to `parents`
  // through `fn`. `fn` is skipped when no parent requires a gradient.
  Var record(Op op, Tensor value, std::vector<std::size_t> parents, Backprop fn);
  // Gradient buffer of a node during backward(); allocated on first use.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Op op = Op::kConstant;
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    Backprop backprop;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
};

using CsrPtr = std::shared_ptr<const Csr>;

Var matmul(Var a, Var b);
Var add(Var a, Var b);
// a (r x c) + b (1 x c) broadcast over rows.
Var add_bias_row(Var a, Var b);
Var scale(Var a, double c);
// a * s where s is a 1x1 node.
Var scale_by(Var a, Var s);
Var transpose(Var a);
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t from, std::size_t to);
Var slice_rows(Var a, std::size_t from, std::size_t to);
Var stack_rows(std::span<const Var> parts);
Var hadamard(Var a, Var b);

// Scaled dot products along graph edges: an (edges x 1) node of logits.
Var edge_scores(Var q, Var k, CsrPtr graph, double scale);
// Row-wise softmax restricted to each row's neighbors. Off-neighborhood
// entries are structurally zero; rows without neighbors stay empty.
Var masked_row_softmax(Var logits, CsrPtr graph);
// out_i = sum_{j in N(i)} beta_ij * v_j; rows without neighbors are zero.
Var weighted_sum(Var beta, Var v, CsrPtr graph);

Var log(Var a);
// log(clamp(a, eps, 1 - eps)); zero gradient where the clamp is active.
Var clamped_log(Var a, double eps);
// alpha * a + beta, covering negation and scalar shifts.
Var affine(Var a, double alpha, double beta);
inline Var neg(Var a) { return affine(a, -1.0, 0.0); }
inline Var add_scalar(Var a, double c) { return affine(a, 1.0, c); }
Var sum(Var a);
// sum_ij w_ij * a_ij with constant weights, as a 1x1 node.
Var weighted_total(Var a, const Tensor& weights);

// Inverted dropout: kept entries scale by 1/(1-rate). The mask is a constant
// of the tape. Throws ConfigError unless 0 <= rate < 1.
Var dropout(Var a, double rate, Rng& rng);

// Expands per-edge weights into a dense nodes x nodes matrix (tests, dumps).
Tensor edges_to_dense(std::span<const double> edge_values, const Csr& graph);

// Finite-difference verification of backward(). Errors per tensor are
// ||a - n|| / max(||a|| + ||n||, 1e-8) over all of its entries; the per-entry figure
// |a - n| / (|a| + |n| + 1e-12) is kept as a diagnostic since it is dominated
// by roundoff wherever a gradient entry is tiny.
struct GradCheckResult {
  double max_rel_error = 0.0;       // worst per-tensor error
  std::vector<double> per_param;    // per-tensor error
  double max_entry_error = 0.0;     // worst per-entry error
  std::size_t entries_checked = 0;
  // Location and values of the worst entry.
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

using LossFn = std::function<Var(Tape&, std::span<const Var> params)>;

// Central differences (f(x+eps) - f(x-eps)) / 2eps against the reverse-mode
// gradient for every entry of every parameter.
// `loss` must be a deterministic function of the parameters.
GradCheckResult finite_diff_check(const LossFn& loss, const std::vector<Tensor>& params,
                                  double eps = 1e-5);

}  // namespace dfdrnn::ad
