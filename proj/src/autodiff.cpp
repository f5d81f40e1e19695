#include "dfdrnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dfdrnn/kernels.hpp"

namespace dfdrnn::ad {

namespace k = kernels::parallel;

const char* op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kAddBiasRow: return "add_bias_row";
    case Op::kScale: return "scale";
    case Op::kScaleBy: return "scale_by";
    case Op::kTranspose: return "transpose";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kConcatCols: return "concat_cols";
    case Op::kSliceCols: return "slice_cols";
    case Op::kSliceRows: return "slice_rows";
    case Op::kStackRows: return "stack_rows";
    case Op::kHadamard: return "hadamard";
    case Op::kEdgeScores: return "edge_scores";
    case Op::kMaskedRowSoftmax: return "masked_row_softmax";
    case Op::kWeightedSum: return "weighted_sum";
    case Op::kLog: return "log";
    case Op::kClampedLog: return "clamped_log";
    case Op::kAffine: return "affine";
    case Op::kSum: return "sum";
    case Op::kWeightedTotal: return "weighted_total";
    case Op::kDropout: return "dropout";
  }
  return "?";
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{Op::kConstant, std::move(value), {}, {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{Op::kParameter, std::move(value), {}, {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Op op, Tensor value, std::vector<std::size_t> parents, Backprop fn) {
  bool needs = false;
  for (std::size_t p : parents) needs |= nodes_[p].requires_grad;
  Node node{op, std::move(value), {}, std::move(parents), {}, needs};
  if (needs) node.backprop = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.value.same_shape(node.grad)) node.grad = Tensor(node.value.rows(), node.value.cols());
  return node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ShapeError("backward: loss belongs to another tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  for (Node& node : nodes_) {
    if (node.requires_grad) {
      node.grad = Tensor(node.value.rows(), node.value.cols());
    } else {
      node.grad = Tensor();
    }
  }
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.requires_grad && node.backprop) node.backprop(*this, id);
  }
}

namespace {

// Gradient buffer of a parent, or null when it needs none.
Tensor* grad_of(Tape& t, std::size_t id) {
  return t.requires_grad(id) ? &t.grad_buffer(id) : nullptr;
}

void same_tape(Var a, Var b, const char* op) {
  if (a.tape() != b.tape()) throw ShapeError(std::string(op) + ": operands on different tapes");
}

void need_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + av.shape_string() + " * " + bv.shape_string());
  }
  Tensor c(av.rows(), bv.cols());
  k::gemm_nn(av, bv, c);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(Op::kMatmul, std::move(c), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* da = grad_of(t, ia)) k::gemm_nt(g, t.value(ib), *da);
    if (Tensor* db = grad_of(t, ib)) k::gemm_tn(t.value(ia), g, *db);
  });
}

Var add(Var a, Var b) {
  same_tape(a, b, "add");
  need_same_shape(a.value(), b.value(), "add");
  Tensor c = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(Op::kAdd, std::move(c), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t id : {ia, ib})
      if (Tensor* d = grad_of(t, id))
        for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
  });
}

Var add_bias_row(Var a, Var b) {
  same_tape(a, b, "add_bias_row");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_bias_row: bias " + bv.shape_string() + " for " + av.shape_string());
  }
  Tensor c = av;
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (std::size_t j = 0; j < c.cols(); ++j) c(r, j) += bv[j];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(Op::kAddBiasRow, std::move(c), {ia, ib},
                          [ia, ib](Tape& t, std::size_t self) {
                            const Tensor& g = t.grad(self);
                            if (Tensor* da = grad_of(t, ia))
                              for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i];
                            if (Tensor* db = grad_of(t, ib))
                              for (std::size_t r = 0; r < g.rows(); ++r)
                                for (std::size_t j = 0; j < g.cols(); ++j) (*db)[j] += g(r, j);
                          });
}

Var scale(Var a, double c) {
  Tensor y = a.value();
  for (double& v : y.values()) v *= c;
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kScale, std::move(y), {ia}, [ia, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& da = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += c * g[i];
  });
}

Var scale_by(Var a, Var s) {
  same_tape(a, s, "scale_by");
  const Tensor& sv = s.value();
  if (sv.rows() != 1 || sv.cols() != 1) throw ShapeError("scale_by: factor must be 1x1");
  const double f = sv[0];
  Tensor y = a.value();
  for (double& v : y.values()) v *= f;
  const std::size_t ia = a.id(), is = s.id();
  return a.tape()->record(Op::kScaleBy, std::move(y), {ia, is}, [ia, is](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const double f = t.value(is)[0];
    if (Tensor* da = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += f * g[i];
    if (Tensor* ds = grad_of(t, is)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * x[i];
      (*ds)[0] += acc;
    }
  });
}

Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kTranspose, a.value().transposed(), {ia},
                          [ia](Tape& t, std::size_t self) {
                            const Tensor& g = t.grad(self);
                            Tensor& da = t.grad_buffer(ia);
                            for (std::size_t r = 0; r < g.rows(); ++r)
                              for (std::size_t c = 0; c < g.cols(); ++c) da(c, r) += g(r, c);
                          });
}

Var leaky_relu(Var a, double slope) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kLeakyRelu, std::move(y), {ia}, [ia, slope](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    Tensor& da = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
  });
}

Var sigmoid(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (v >= 0.0) {
      y[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      y[i] = e / (1.0 + e);
    }
  }
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kSigmoid, std::move(y), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& s = t.value(self);
    Tensor& da = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape* tape = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, offsets;
  for (const Var& p : parts) {
    same_tape(parts.front(), p, "concat_cols");
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
  }
  Tensor y(rows, cols);
  for (std::size_t q = 0; q < parts.size(); ++q) {
    const Tensor& v = parts[q].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) y(r, offsets[q] + c) = v(r, c);
  }
  return tape->record(Op::kConcatCols, std::move(y), ids, [ids, offsets](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t q = 0; q < ids.size(); ++q) {
      Tensor* d = grad_of(t, ids[q]);
      if (!d) continue;
      for (std::size_t r = 0; r < d->rows(); ++r)
        for (std::size_t c = 0; c < d->cols(); ++c) (*d)(r, c) += g(r, offsets[q] + c);
    }
  });
}

Var slice_cols(Var a, std::size_t from, std::size_t to) {
  const Tensor& x = a.value();
  if (from > to || to > x.cols()) throw ShapeError("slice_cols: bad range for " + x.shape_string());
  Tensor y(x.rows(), to - from);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = from; c < to; ++c) y(r, c - from) = x(r, c);
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kSliceCols, std::move(y), {ia}, [ia, from](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& da = t.grad_buffer(ia);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) da(r, from + c) += g(r, c);
  });
}

Var slice_rows(Var a, std::size_t from, std::size_t to) {
  const Tensor& x = a.value();
  if (from > to || to > x.rows()) throw ShapeError("slice_rows: bad range for " + x.shape_string());
  const std::size_t cols = x.cols();
  std::vector<double> data(x.data() + from * cols, x.data() + to * cols);
  Tensor y(to - from, cols, std::move(data));
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kSliceRows, std::move(y), {ia}, [ia, from](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& da = t.grad_buffer(ia);
    const std::size_t base = from * g.cols();
    for (std::size_t i = 0; i < g.size(); ++i) da[base + i] += g[i];
  });
}

Var stack_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("stack_rows: no inputs");
  Tape* tape = parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::vector<std::size_t> ids, offsets;
  std::vector<double> data;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    same_tape(parts.front(), p, "stack_rows");
    if (p.cols() != cols) throw ShapeError("stack_rows: column counts differ");
    ids.push_back(p.id());
    offsets.push_back(rows * cols);
    rows += p.rows();
    data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  }
  return tape->record(Op::kStackRows, Tensor(rows, cols, std::move(data)), ids,
                      [ids, offsets](Tape& t, std::size_t self) {
                        const Tensor& g = t.grad(self);
                        for (std::size_t q = 0; q < ids.size(); ++q) {
                          Tensor* d = grad_of(t, ids[q]);
                          if (!d) continue;
                          for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += g[offsets[q] + i];
                        }
                      });
}

Var hadamard(Var a, Var b) {
  same_tape(a, b, "hadamard");
  need_same_shape(a.value(), b.value(), "hadamard");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(Op::kHadamard, std::move(y), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (Tensor* da = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i] * bv[i];
    if (Tensor* db = grad_of(t, ib))
      for (std::size_t i = 0; i < g.size(); ++i) (*db)[i] += g[i] * av[i];
  });
}

Var edge_scores(Var q, Var kv, CsrPtr graph, double scale) {
  same_tape(q, kv, "edge_scores");
  need_same_shape(q.value(), kv.value(), "edge_scores");
  if (q.rows() != graph->nodes) throw ShapeError("edge_scores: feature rows != graph nodes");
  Tensor logits(graph->edges(), 1);
  k::edge_dot(q.value(), kv.value(), *graph, scale, logits.values());
  const std::size_t iq = q.id(), ik = kv.id();
  return q.tape()->record(Op::kEdgeScores, std::move(logits), {iq, ik},
                          [iq, ik, graph, scale](Tape& t, std::size_t self) {
                            k::edge_dot_backward(t.grad(self).values(), t.value(iq), t.value(ik),
                                                 *graph, scale, grad_of(t, iq), grad_of(t, ik));
                          });
}

Var masked_row_softmax(Var logits, CsrPtr graph) {
  if (logits.rows() != graph->edges() || logits.cols() != 1) {
    throw ShapeError("masked_row_softmax: expected one logit per edge");
  }
  Tensor beta(graph->edges(), 1);
  k::segment_softmax(logits.value().values(), *graph, beta.values());
  const std::size_t il = logits.id();
  return logits.tape()->record(Op::kMaskedRowSoftmax, std::move(beta), {il},
                               [il, graph](Tape& t, std::size_t self) {
                                 k::segment_softmax_backward(t.value(self).values(),
                                                             t.grad(self).values(), *graph,
                                                             t.grad_buffer(il).values());
                               });
}

Var weighted_sum(Var beta, Var v, CsrPtr graph) {
  same_tape(beta, v, "weighted_sum");
  if (beta.rows() != graph->edges() || beta.cols() != 1) {
    throw ShapeError("weighted_sum: expected one weight per edge");
  }
  if (v.rows() != graph->nodes) throw ShapeError("weighted_sum: value rows != graph nodes");
  Tensor out(graph->nodes, v.cols());
  k::gather(beta.value().values(), v.value(), *graph, out);
  const std::size_t ib = beta.id(), iv = v.id();
  return beta.tape()->record(
      Op::kWeightedSum, std::move(out), {ib, iv}, [ib, iv, graph](Tape& t, std::size_t self) {
        Tensor scratch;
        Tensor* db = grad_of(t, ib);
        if (!db) {
          scratch = Tensor(graph->edges(), 1);
          db = &scratch;
        }
        k::gather_backward(t.value(ib).values(), t.value(iv), t.grad(self), *graph, db->values(),
                           grad_of(t, iv));
      });
}

Var log(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw Error("log: argument must be positive");
    y[i] = std::log(x[i]);
  }
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kLog, std::move(y), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    Tensor& da = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / x[i];
  });
}

Var clamped_log(Var a, double eps) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::log(std::clamp(x[i], eps, 1.0 - eps));
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kClampedLog, std::move(y), {ia}, [ia, eps](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    Tensor& da = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] >= eps && x[i] <= 1.0 - eps) da[i] += g[i] / x[i];
  });
}

Var affine(Var a, double alpha, double beta) {
  Tensor y = a.value();
  for (double& v : y.values()) v = alpha * v + beta;
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kAffine, std::move(y), {ia}, [ia, alpha](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& da = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += alpha * g[i];
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kSum, Tensor(1, 1, acc), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& d : t.grad_buffer(ia).values()) d += g;
  });
}

Var weighted_total(Var a, const Tensor& weights) {
  need_same_shape(a.value(), weights, "weighted_total");
  const Tensor& x = a.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += weights[i] * x[i];
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kWeightedTotal, Tensor(1, 1, acc), {ia},
                          [ia, weights](Tape& t, std::size_t self) {
                            const double g = t.grad(self)[0];
                            Tensor& da = t.grad_buffer(ia);
                            for (std::size_t i = 0; i < da.size(); ++i) da[i] += g * weights[i];
                          });
}

Var dropout(Var a, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0,1)");
  const Tensor& x = a.value();
  const double keep = 1.0 - rate;
  const double inv = 1.0 / keep;
  std::vector<double> mask(x.size());
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rate == 0.0 || uniform01(rng) < keep ? inv : 0.0;
    y[i] = x[i] * mask[i];
  }
  const std::size_t ia = a.id();
  return a.tape()->record(Op::kDropout, std::move(y), {ia},
                          [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
                            const Tensor& g = t.grad(self);
                            Tensor& da = t.grad_buffer(ia);
                            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * mask[i];
                          });
}

Tensor edges_to_dense(std::span<const double> edge_values, const Csr& graph) {
  Tensor dense(graph.nodes, graph.nodes);
  for (std::size_t e = 0; e < graph.edges(); ++e) dense(graph.rows[e], graph.cols[e]) = edge_values[e];
  return dense;
}

}  // namespace dfdrnn::ad
