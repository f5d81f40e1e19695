#include <algorithm>
#include <cmath>

#include "dfdrnn/autodiff.hpp"

namespace dfdrnn::ad {

namespace {

// Below this gradient norm a tensor is compared in absolute terms; finite
// differences cannot resolve anything smaller.
constexpr double kNormFloor = 1e-8;

double evaluate(const LossFn& loss, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.parameter(p));
  const Var out = loss(tape, vars);
  if (out.rows() != 1 || out.cols() != 1) throw ShapeError("gradient check: loss must be 1x1");
  return out.value()[0];
}

}  // namespace

GradCheckResult finite_diff_check(const LossFn& loss, const std::vector<Tensor>& params,
                                  double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite difference step must be positive");
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.parameter(p));
    const Var out = loss(tape, vars);
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(v.grad());
  }

  GradCheckResult result;
  result.per_param.assign(params.size(), 0.0);
  std::vector<Tensor> work = params;
  for (std::size_t p = 0; p < work.size(); ++p) {
    double diff2 = 0.0, exact2 = 0.0, numeric2 = 0.0;
    for (std::size_t i = 0; i < work[p].size(); ++i) {
      const double saved = work[p][i];
      work[p][i] = saved + eps;
      const double up = evaluate(loss, work);
      work[p][i] = saved - eps;
      const double down = evaluate(loss, work);
      work[p][i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double exact = analytic[p][i];
      diff2 += (exact - numeric) * (exact - numeric);
      exact2 += exact * exact;
      numeric2 += numeric * numeric;
      const double rel = std::abs(exact - numeric) / (std::abs(exact) + std::abs(numeric) + 1e-12);
      if (rel > result.max_entry_error) {
        result.max_entry_error = rel;
        result.worst_param = p;
        result.worst_index = i;
        result.worst_analytic = exact;
        result.worst_numeric = numeric;
      }
      ++result.entries_checked;
    }
    const double scale = std::max(std::sqrt(exact2) + std::sqrt(numeric2), kNormFloor);
    result.per_param[p] = std::sqrt(diff2) / scale;
    result.max_rel_error = std::max(result.max_rel_error, result.per_param[p]);
  }
  return result;
}

}  // namespace dfdrnn::ad
