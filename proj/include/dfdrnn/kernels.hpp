#pragma once

// Numeric kernels behind the autodiff primitives. `parallel` is what the
// library runs (OpenMP over output rows); `serial` is the plain reference kept
// for tests and benchmarks. Both accumulate into their outputs and reduce
// every output entry in the same order, so results are bitwise independent
// of the thread count.

#include <span>

#include "dfdrnn/graph.hpp"
#include "dfdrnn/tensor.hpp"

namespace dfdrnn::kernels {

namespace serial {

// c += a * b
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c);
// c += a * b^T
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c);
// c += a^T * b
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c);

// logits[e] = scale * <q[row(e)], k[col(e)]>
void edge_dot(const Tensor& q, const Tensor& k, const Csr& g, double scale,
              std::span<double> logits);
void edge_dot_backward(std::span<const double> dlogits, const Tensor& q, const Tensor& k,
                       const Csr& g, double scale, Tensor* dq, Tensor* dk);

// Softmax within each row's edge segment (max-subtracted). Empty rows
// produce nothing.
void segment_softmax(std::span<const double> logits, const Csr& g, std::span<double> beta);
void segment_softmax_backward(std::span<const double> beta, std::span<const double> dbeta,
                              const Csr& g, std::span<double> dlogits);

// out[i] += sum over edges e of row i of beta[e] * v[col(e)]
void gather(std::span<const double> beta, const Tensor& v, const Csr& g, Tensor& out);
void gather_backward(std::span<const double> beta, const Tensor& v, const Tensor& dout,
                     const Csr& g, std::span<double> dbeta, Tensor* dv);

}  // namespace serial

namespace parallel {

// c += a * b
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c);
// c += a * b^T
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c);
// c += a^T * b
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c);

// logits[e] = scale * <q[row(e)], k[col(e)]>
void edge_dot(const Tensor& q, const Tensor& k, const Csr& g, double scale,
              std::span<double> logits);
void edge_dot_backward(std::span<const double> dlogits, const Tensor& q, const Tensor& k,
                       const Csr& g, double scale, Tensor* dq, Tensor* dk);

// Softmax within each row's edge segment (max-subtracted). Empty rows
// produce nothing.
void segment_softmax(std::span<const double> logits, const Csr& g, std::span<double> beta);
void segment_softmax_backward(std::span<const double> beta, std::span<const double> dbeta,
                              const Csr& g, std::span<double> dlogits);

// out[i] += sum over edges e of row i of beta[e] * v[col(e)]
void gather(std::span<const double> beta, const Tensor& v, const Csr& g, Tensor& out);
void gather_backward(std::span<const double> beta, const Tensor& v, const Tensor& dout,
                     const Csr& g, std::span<double> dbeta, Tensor* dv);

}  // namespace parallel

}  // namespace dfdrnn::kernels
