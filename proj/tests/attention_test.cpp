#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dfdrnn/attention.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace dfdrnn {
namespace {

using ad::Tape;
using ad::Var;
using testing::random_neighbors;
using testing::random_tensor;
using testing::Neighbors;

using testing::csr;
using testing::random_sam;

TEST(Sam, SingleNeighborCopiesValue) {
  Rng rng(1);
  const Neighbors nb{{1}, {2}, {0}};
  const Tensor h = random_tensor(3, 4, rng);
  const SamParams p = random_sam(4, rng);
  Tape tape;
  const Var out = sam(csr(nb), tape.constant(h), SamVars::constants(tape, p), 2);
  Tape t2;
  const Tensor v = ad::matmul(t2.constant(h), t2.constant(p.w_v)).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out.value()(i, c), v(nb[i][0], c), 1e-15);
}

TEST(Sam, ZeroQueryKeyGivesUniformWeights) {
  Rng rng(2);
  const Neighbors nb = random_neighbors(8, 0.4, rng);
  SamParams p = random_sam(4, rng);
  p.w_q = Tensor(4, 4);
  p.w_k = Tensor(4, 4);
  Tape tape;
  std::vector<Var> beta;
  sam(csr(nb), tape.constant(random_tensor(8, 4, rng)), SamVars::constants(tape, p), 2, &beta);
  const Csr g = to_csr(nb);
  for (const Var& b : beta)
    for (std::size_t e = 0; e < g.edges(); ++e)
      EXPECT_DOUBLE_EQ(b.value()[e], 1.0 / static_cast<double>(g.degree(g.rows[e])));
}

TEST(Sam, TwoNodeHandExample) {
  SamParams p = SamParams::zeros(2);
  p.w_q = p.w_k = p.w_v = Tensor::identity(2);
  Tape tape;
  const Var out = sam(csr({{1}, {0}}), tape.constant(Tensor::identity(2)),
                      SamVars::constants(tape, p), 1);
  EXPECT_EQ(out.value(), Tensor::from_rows({{0, 1}, {1, 0}}));
}

TEST(Sam, EmptyNeighborhoodGivesZeroRow) {
  Rng rng(3);
  const SamParams p = random_sam(4, rng);
  Tape tape;
  const Var out = sam(csr({{0, 1}, {}, {1}}), tape.constant(random_tensor(3, 4, rng)),
                      SamVars::constants(tape, p), 2);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out.value()(1, c), 0.0);
}

TEST(Sam, RejectsIndivisibleHeads) {
  Rng rng(4);
  Tape tape;
  const SamParams p = random_sam(6, rng);
  EXPECT_THROW(sam(csr({{0}}), tape.constant(Tensor(1, 6)), SamVars::constants(tape, p), 4),
               ShapeError);
}

// 120 random graphs and feature matrices.
class AttentionProperties : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
    x = testing::AttentionInstance::make(GetParam());
    nodes = x.nodes;
    heads = x.heads;
    k = x.k;
  }

  testing::AttentionInstance x;
  std::size_t nodes = 0, heads = 1, k = 1;
  const Neighbors& nb = x.nb;
  const Tensor& h = x.h;
  const SamParams& params = x.params;
};

TEST_P(AttentionProperties, WeightsAreDistributionsOverNeighbors) {
  Tape tape;
  std::vector<Var> beta;
  sam(csr(nb), tape.constant(h), SamVars::constants(tape, params), heads, &beta);
  ASSERT_EQ(beta.size(), heads);
  const Csr g = to_csr(nb);
  for (const Var& b : beta) {
    const Tensor dense = ad::edges_to_dense(b.value().values(), g);
    for (std::size_t i = 0; i < nodes; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < nodes; ++j) {
        const bool edge = std::binary_search(nb[i].begin(), nb[i].end(), j);
        if (!edge) EXPECT_EQ(dense(i, j), 0.0);
        EXPECT_GE(dense(i, j), 0.0);
        row += dense(i, j);
      }
      if (!nb[i].empty()) EXPECT_NEAR(row, 1.0, 1e-9);
      else EXPECT_EQ(row, 0.0);
    }
  }
}

TEST_P(AttentionProperties, HeadsMatchIndependentDenseOracle) {
  Tape tape;
  std::vector<Var> beta;
  const Var out = sam(csr(nb), tape.constant(h), SamVars::constants(tape, params), heads, &beta);
  const Csr g = to_csr(nb);
  const std::size_t w = k / heads;
  for (std::size_t q = 0; q < heads; ++q) {
    const testing::DenseHead ref = testing::dense_head(nb, h, params, heads, q);
    const Tensor dense = ad::edges_to_dense(beta[q].value().values(), g);
    for (std::size_t i = 0; i < nodes; ++i) {
      for (std::size_t j = 0; j < nodes; ++j) EXPECT_NEAR(dense(i, j), ref.beta[i][j], 1e-9);
      for (std::size_t c = 0; c < w; ++c) EXPECT_NEAR(out.value()(i, q * w + c), ref.out(i, c), 1e-9);
    }
  }
}

TEST_P(AttentionProperties, PermutationEquivariance) {
  const std::vector<std::size_t>& perm = x.perm;
  Tape tape;
  const Var out = sam(csr(nb), tape.constant(h), SamVars::constants(tape, params), heads);
  const Var pout = sam(csr(x.permuted_neighbors()), tape.constant(x.permuted_features()),
                       SamVars::constants(tape, params), heads);
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t c = 0; c < k; ++c) EXPECT_NEAR(pout.value()(perm[i], c), out.value()(i, c), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(RandomGraphs, AttentionProperties, ::testing::Range(0, 120));

// Every tenth instance, since each check runs hundreds of forward passes.
class AttentionGradients : public AttentionProperties {};

TEST_P(AttentionGradients, GradientsMatchFiniteDifferences) {
  const auto g = csr(nb);
  const std::size_t drugs = nodes / 2;
  const std::size_t p = heads;
  Rng wr(5);
  const Tensor weights = random_tensor(nodes, k, wr, -1, 1);
  const ad::LossFn f = [&](Tape&, std::span<const Var> v) {
    const SamVars sv{v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
    return ad::weighted_total(samf(g, v[0], sv, {drugs, p, kLeakySlope}), weights);
  };
  const ad::GradCheckResult r = ad::finite_diff_check(
      f, {h, params.w_q, params.w_k, params.w_v, params.w_r, params.w_d, params.b_r, params.b_d});
  EXPECT_LT(r.max_rel_error, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(RandomGraphs, AttentionGradients, ::testing::Range(0, 120, 10));

TEST(Samf, IdentityFcOnNonNegativeInput) {
  Rng rng(6);
  const Neighbors nb = random_neighbors(6, 0.5, rng);
  SamParams p = random_sam(4, rng);
  for (double& v : p.w_v.values()) v = std::abs(v);
  p.w_r = p.w_d = Tensor::identity(4);
  p.b_r = p.b_d = Tensor(1, 4);
  const Tensor h = random_tensor(6, 4, rng, 0.0, 1.0);
  Tape tape;
  const SamVars sv = SamVars::constants(tape, p);
  const Var plain = sam(csr(nb), tape.constant(h), sv, 2);
  const Var full = samf(csr(nb), tape.constant(h), sv, {3, 2, kLeakySlope});
  EXPECT_EQ(full.value(), plain.value());
}

TEST(Samf, ZeroInputGivesActivatedBias) {
  Rng rng(7);
  const SamParams p = random_sam(4, rng);
  Tape tape;
  const Var out = samf(csr({{0, 1}, {0, 1}, {2}}), tape.constant(Tensor(3, 4)),
                       SamVars::constants(tape, p), {2, 2, kLeakySlope});
  auto act = [](double x) { return x > 0 ? x : 0.01 * x; };
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_DOUBLE_EQ(out.value()(0, c), act(p.b_r(0, c)));
    EXPECT_DOUBLE_EQ(out.value()(1, c), act(p.b_r(0, c)));
    EXPECT_DOUBLE_EQ(out.value()(2, c), act(p.b_d(0, c)));
  }
}

TEST(Samf, TwoNodeHandExampleWithFc) {
  SamParams p = SamParams::zeros(2);
  p.w_q = p.w_k = p.w_v = Tensor::identity(2);
  p.w_r = Tensor::from_rows({{1, -2}, {3, 0.5}});
  p.w_d = Tensor::from_rows({{2, 0}, {0, -1}});
  p.b_r = Tensor::from_rows({{0.5, 0}});
  p.b_d = Tensor::from_rows({{0, 1}});
  Tape tape;
  // sam output is [[0,1],[1,0]]; drug row -> [0,1]*w_r + b_r = [3.5, 0.5]; disease row
  // -> [1,0]*w_d + b_d = [2, 1].
  const Var out = samf(csr({{1}, {0}}), tape.constant(Tensor::identity(2)),
                       SamVars::constants(tape, p), {1, 1, kLeakySlope});
  EXPECT_EQ(out.value(), Tensor::from_rows({{3.5, 0.5}, {2, 1}}));

  p.b_r = Tensor::from_rows({{-4, -1}});
  const Var neg = samf(csr({{1}, {0}}), tape.constant(Tensor::identity(2)),
                       SamVars::constants(tape, p), {1, 1, kLeakySlope});
  // [3, 0.5] + [-4, -1] = [-1, -0.5] before the activation.
  EXPECT_NEAR(neg.value()(0, 0), -0.01, 1e-15);
  EXPECT_NEAR(neg.value()(0, 1), -0.005, 1e-15);
}

TEST(Gcn, SingleSelfLoop) {
  Tape tape;
  const Var out = gcn_aggregate(csr({{0}}), tape.constant(Tensor::from_rows({{2}})),
                                tape.constant(Tensor::identity(1)), tape.constant(Tensor(1, 1)));
  EXPECT_EQ(out.value(), Tensor::from_rows({{2}}));
}

TEST(Gcn, SymmetricPairGivesEqualRows) {
  Rng rng(8);
  const Tensor row = random_tensor(1, 3, rng);
  Tensor h(2, 3);
  for (std::size_t c = 0; c < 3; ++c) h(0, c) = h(1, c) = row(0, c);
  Tape tape;
  const Var out = gcn_aggregate(csr({{0, 1}, {0, 1}}), tape.constant(h),
                                tape.constant(random_tensor(3, 3, rng)),
                                tape.constant(random_tensor(1, 3, rng)));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.value()(0, c), out.value()(1, c));
}

TEST(Gcn, PathGraphHandComputation) {
  Tape tape;
  const Var out = gcn_aggregate(csr({{0, 1}, {0, 1, 2}, {1, 2}}),
                                tape.constant(Tensor::from_rows({{1}, {2}, {3}})),
                                tape.constant(Tensor::identity(1)), tape.constant(Tensor(1, 1)));
  const double s6 = std::sqrt(6.0);
  EXPECT_NEAR(out.value()(0, 0), 1.0 / 2.0 + 2.0 / s6, 1e-14);
  EXPECT_NEAR(out.value()(1, 0), 1.0 / s6 + 2.0 / 3.0 + 3.0 / s6, 1e-14);
  EXPECT_NEAR(out.value()(2, 0), 2.0 / s6 + 3.0 / 2.0, 1e-14);
}

}  // namespace
}  // namespace dfdrnn
