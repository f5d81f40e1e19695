#include <algorithm>
#include <cmath>
#include <limits>

#include "dfdrnn/kernels.hpp"

namespace dfdrnn::kernels::serial {

void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(j, k);
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t p = 0; p < a.cols(); ++p)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t i = 0; i < a.rows(); ++i) c(p, j) += a(i, p) * b(i, j);
}

void edge_dot(const Tensor& q, const Tensor& k, const Csr& g, double scale,
              std::span<double> logits) {
  for (std::size_t e = 0; e < g.edges(); ++e) {
    double dot = 0.0;
    for (std::size_t c = 0; c < q.cols(); ++c) dot += q(g.rows[e], c) * k(g.cols[e], c);
    logits[e] = scale * dot;
  }
}

void edge_dot_backward(std::span<const double> dlogits, const Tensor& q, const Tensor& k,
                       const Csr& g, double scale, Tensor* dq, Tensor* dk) {
  for (std::size_t e = 0; e < g.edges(); ++e) {
    const double w = scale * dlogits[e];
    const std::size_t i = g.rows[e];
    const std::size_t j = g.cols[e];
    for (std::size_t c = 0; c < q.cols(); ++c) {
      if (dq) (*dq)(i, c) += w * k(j, c);
      if (dk) (*dk)(j, c) += w * q(i, c);
    }
  }
}

void segment_softmax(std::span<const double> logits, const Csr& g, std::span<double> beta) {
  for (std::size_t i = 0; i < g.nodes; ++i) {
    const std::size_t lo = g.offsets[i];
    const std::size_t hi = g.offsets[i + 1];
    if (lo == hi) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t e = lo; e < hi; ++e) top = std::max(top, logits[e]);
    double total = 0.0;
    for (std::size_t e = lo; e < hi; ++e) {
      beta[e] = std::exp(logits[e] - top);
      total += beta[e];
    }
    for (std::size_t e = lo; e < hi; ++e) beta[e] /= total;
  }
}

void segment_softmax_backward(std::span<const double> beta, std::span<const double> dbeta,
                              const Csr& g, std::span<double> dlogits) {
  for (std::size_t i = 0; i < g.nodes; ++i) {
    double dot = 0.0;
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) dot += beta[e] * dbeta[e];
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e)
      dlogits[e] += beta[e] * (dbeta[e] - dot);
  }
}

void gather(std::span<const double> beta, const Tensor& v, const Csr& g, Tensor& out) {
  for (std::size_t e = 0; e < g.edges(); ++e)
    for (std::size_t c = 0; c < v.cols(); ++c) out(g.rows[e], c) += beta[e] * v(g.cols[e], c);
}

void gather_backward(std::span<const double> beta, const Tensor& v, const Tensor& dout,
                     const Csr& g, std::span<double> dbeta, Tensor* dv) {
  for (std::size_t e = 0; e < g.edges(); ++e) {
    const std::size_t i = g.rows[e];
    const std::size_t j = g.cols[e];
    double dot = 0.0;
    for (std::size_t c = 0; c < v.cols(); ++c) {
      dot += dout(i, c) * v(j, c);
      if (dv) (*dv)(j, c) += beta[e] * dout(i, c);
    }
    dbeta[e] += dot;
  }
}

}  // namespace dfdrnn::kernels::serial
