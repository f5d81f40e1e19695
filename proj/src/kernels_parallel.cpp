#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "dfdrnn/kernels.hpp"

// Every loop below is parallel over output rows (or, for column reductions,
// over output columns via the reverse edge index). Inner reductions keep the
// serial order.

namespace dfdrnn::kernels::parallel {

namespace {
using Index = std::int64_t;
}

void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const Index rows = static_cast<Index>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    double* out = c.data() + static_cast<std::size_t>(i) * cols;
    const double* arow = a.data() + static_cast<std::size_t>(i) * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data() + k * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += aik * brow[j];
    }
  }
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  const Index rows = static_cast<Index>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.rows();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    const double* arow = a.data() + static_cast<std::size_t>(i) * inner;
    double* out = c.data() + static_cast<std::size_t>(i) * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      const double* brow = b.data() + j * inner;
      double acc = out[j];
      for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
      out[j] = acc;
    }
  }
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  const Index outer = static_cast<Index>(a.cols());
  const std::size_t rows = a.rows();
  const std::size_t cols = b.cols();
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < outer; ++p) {
    double* out = c.data() + static_cast<std::size_t>(p) * cols;
    for (std::size_t i = 0; i < rows; ++i) {
      const double aip = a(i, static_cast<std::size_t>(p));
      if (aip == 0.0) continue;
      const double* brow = b.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += aip * brow[j];
    }
  }
}

void edge_dot(const Tensor& q, const Tensor& k, const Csr& g, double scale,
              std::span<double> logits) {
  const Index edges = static_cast<Index>(g.edges());
  const std::size_t width = q.cols();
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < edges; ++e) {
    const double* qi = q.data() + g.rows[e] * width;
    const double* kj = k.data() + g.cols[e] * width;
    double dot = 0.0;
    for (std::size_t c = 0; c < width; ++c) dot += qi[c] * kj[c];
    logits[e] = scale * dot;
  }
}

void edge_dot_backward(std::span<const double> dlogits, const Tensor& q, const Tensor& k,
                       const Csr& g, double scale, Tensor* dq, Tensor* dk) {
  const Index nodes = static_cast<Index>(g.nodes);
  const std::size_t width = q.cols();
  if (dq) {
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < nodes; ++i) {
      double* out = dq->data() + static_cast<std::size_t>(i) * width;
      for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
        const double w = scale * dlogits[e];
        const double* kj = k.data() + g.cols[e] * width;
        for (std::size_t c = 0; c < width; ++c) out[c] += w * kj[c];
      }
    }
  }
  if (dk) {
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < nodes; ++j) {
      double* out = dk->data() + static_cast<std::size_t>(j) * width;
      for (std::size_t r = g.rev_offsets[j]; r < g.rev_offsets[j + 1]; ++r) {
        const std::size_t e = g.rev_edges[r];
        const double w = scale * dlogits[e];
        const double* qi = q.data() + g.rows[e] * width;
        for (std::size_t c = 0; c < width; ++c) out[c] += w * qi[c];
      }
    }
  }
}

void segment_softmax(std::span<const double> logits, const Csr& g, std::span<double> beta) {
  const Index nodes = static_cast<Index>(g.nodes);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < nodes; ++i) {
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
  const Index nodes = static_cast<Index>(g.nodes);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < nodes; ++i) {
    double dot = 0.0;
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) dot += beta[e] * dbeta[e];
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e)
      dlogits[e] += beta[e] * (dbeta[e] - dot);
  }
}

void gather(std::span<const double> beta, const Tensor& v, const Csr& g, Tensor& out) {
  const Index nodes = static_cast<Index>(g.nodes);
  const std::size_t width = v.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < nodes; ++i) {
    double* o = out.data() + static_cast<std::size_t>(i) * width;
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      const double w = beta[e];
      const double* vj = v.data() + g.cols[e] * width;
      for (std::size_t c = 0; c < width; ++c) o[c] += w * vj[c];
    }
  }
}

void gather_backward(std::span<const double> beta, const Tensor& v, const Tensor& dout,
                     const Csr& g, std::span<double> dbeta, Tensor* dv) {
  const Index edges = static_cast<Index>(g.edges());
  const Index nodes = static_cast<Index>(g.nodes);
  const std::size_t width = v.cols();
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < edges; ++e) {
    const double* di = dout.data() + g.rows[e] * width;
    const double* vj = v.data() + g.cols[e] * width;
    double dot = 0.0;
    for (std::size_t c = 0; c < width; ++c) dot += di[c] * vj[c];
    dbeta[e] += dot;
  }
  if (dv) {
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < nodes; ++j) {
      double* out = dv->data() + static_cast<std::size_t>(j) * width;
      for (std::size_t r = g.rev_offsets[j]; r < g.rev_offsets[j + 1]; ++r) {
        const std::size_t e = g.rev_edges[r];
        const double w = beta[e];
        const double* di = dout.data() + g.rows[e] * width;
        for (std::size_t c = 0; c < width; ++c) out[c] += w * di[c];
      }
    }
  }
}

}  // namespace dfdrnn::kernels::parallel
