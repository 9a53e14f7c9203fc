#include <gtest/gtest.h>

#include "helpers.hpp"
#include "qdf/exchange.hpp"

using namespace qdf;
using testutil::diag;
using testutil::random_hermitian;

namespace {

// Partial trace by explicit index summation over the discarded subsystems.
CMatrix partial_trace_oracle(const CMatrix& op, std::size_t d, std::size_t n,
                             const std::vector<std::size_t>& keep) {
  std::vector<bool> kept(n, false);
  for (auto k : keep) kept[k] = true;
  std::size_t dk = 1;
  for (std::size_t i = 0; i < keep.size(); ++i) dk *= d;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= d;
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  auto digits = [&](std::size_t f) {
    std::vector<std::size_t> v(n);
    for (std::size_t k = n; k-- > 0; f /= d) v[k] = f % d;
    return v;
  };
  for (std::size_t r = 0; r < total; ++r) {
    for (std::size_t c = 0; c < total; ++c) {
      const auto dr = digits(r), dc = digits(c);
      bool same_traced = true;
      for (std::size_t k = 0; k < n; ++k)
        if (!kept[k] && dr[k] != dc[k]) same_traced = false;
      if (!same_traced) continue;
      std::size_t rr = 0, cc = 0;
      for (std::size_t k = 0; k < n; ++k)
        if (kept[k]) rr = rr * d + dr[k], cc = cc * d + dc[k];
      out(static_cast<Eigen::Index>(rr), static_cast<Eigen::Index>(cc)) +=
          op(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

HermitianOperator ghz_projector() { return ghz_state().op(); }

}  // namespace

TEST(HermitianOperator, RejectsNonHermitianAndBadShapes) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_QDF_ERROR(HermitianOperator{m}, ErrorKind::Invariant);
  EXPECT_QDF_ERROR(HermitianOperator{CMatrix(2, 3)}, ErrorKind::Shape);
  EXPECT_QDF_ERROR(HermitianOperator{CMatrix(0, 0)}, ErrorKind::Shape);
  CMatrix nan = CMatrix::Identity(2, 2);
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_QDF_ERROR(HermitianOperator{nan}, ErrorKind::Invariant);
}

TEST(Tensor, IdentityTimesIdentity) {
  const auto i4 = tensor(HermitianOperator::identity(2), HermitianOperator::identity(2));
  EXPECT_EQ(max_abs_diff(i4, HermitianOperator::identity(4)), 0.0);
}

TEST(Tensor, Sigma2Squared) {
  const auto t = tensor(pauli(2), pauli(2));
  EXPECT_NEAR(t.matrix().imag().cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR(frobenius_norm(t), 2.0, 1e-14);
  // direct expansion: antidiagonal (-1, 1, 1, -1)
  CMatrix expect = CMatrix::Zero(4, 4);
  expect(0, 3) = -1.0;
  expect(1, 2) = 1.0;
  expect(2, 1) = 1.0;
  expect(3, 0) = -1.0;
  EXPECT_LE(max_abs_diff(t, HermitianOperator(expect)), 1e-15);
}

TEST(Tensor, TraceMultiplicative) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto rho = random_density(3, rng);
    EXPECT_NEAR(tensor(rho.op(), rho.op()).trace(), 1.0, 1e-12);
  }
}

TEST(TensorPower, Examples) {
  EXPECT_EQ(max_abs_diff(tensor_power(HermitianOperator::identity(2), 3), HermitianOperator::identity(8)), 0.0);
  const HermitianOperator rho(diag({0.75, 0.25}));
  EXPECT_LE(max_abs_diff(tensor_power(rho, 2), HermitianOperator(diag({9.0 / 16, 3.0 / 16, 3.0 / 16, 1.0 / 16}))),
            1e-15);
  std::mt19937_64 rng(2);
  const auto r = random_density(2, rng);
  for (std::size_t n = 1; n <= 6; ++n) EXPECT_NEAR(tensor_power(r.op(), n).trace(), 1.0, 1e-12);
  EXPECT_QDF_ERROR(tensor_power(rho, 0), ErrorKind::Argument);
}

TEST(SubsystemShape, OverflowAndInvalid) {
  EXPECT_QDF_ERROR(SubsystemShape(1, 2), ErrorKind::Argument);
  EXPECT_QDF_ERROR(SubsystemShape(2, 0), ErrorKind::Argument);
  EXPECT_QDF_ERROR(SubsystemShape(2, 200).total_dim(), ErrorKind::Overflow);
}

TEST(PartialTrace, ProductFactorizes) {
  std::mt19937_64 rng(3);
  const auto rho = random_density(2, rng);
  const auto s2 = random_density(2, rng);
  const auto prod = tensor(rho.op(), s2.op());
  EXPECT_LE(max_abs_diff(partial_trace(prod, SubsystemShape(2, 2), {0}), rho.op()), 1e-14);
  EXPECT_LE(max_abs_diff(partial_trace(prod, SubsystemShape(2, 2), {1}), s2.op()), 1e-14);
}

TEST(PartialTrace, GhzAgainstIndexSummation) {
  const auto ghz = ghz_projector();
  const auto pt = partial_trace(ghz, SubsystemShape(2, 3), {1, 2});
  EXPECT_LE(max_abs(pt.matrix() - partial_trace_oracle(ghz.matrix(), 2, 3, {1, 2})), 1e-15);
  EXPECT_LE(max_abs_diff(pt, HermitianOperator(diag({0.5, 0, 0, 0.5}))), 1e-15);
}

TEST(PartialTrace, RandomAgainstIndexSummation) {
  std::mt19937_64 rng(4);
  const auto op = random_hermitian(27, rng);
  for (const std::vector<std::size_t>& keep : {std::vector<std::size_t>{0}, {1}, {2}, {0, 2}, {1, 2}}) {
    const auto pt = partial_trace(op, SubsystemShape(3, 3), keep);
    EXPECT_LE(max_abs(pt.matrix() - partial_trace_oracle(op.matrix(), 3, 3, keep)), 1e-12);
  }
}

TEST(PartialTrace, KeepAllIsIdentityMap) {
  std::mt19937_64 rng(5);
  const auto op = random_hermitian(8, rng);
  EXPECT_EQ(max_abs_diff(partial_trace(op, SubsystemShape(2, 3), {0, 1, 2}), op), 0.0);
}

TEST(PartialTrace, Errors) {
  const auto op = HermitianOperator::identity(8);
  EXPECT_QDF_ERROR(partial_trace(op, SubsystemShape(2, 3), {}), ErrorKind::Shape);
  EXPECT_QDF_ERROR(partial_trace(op, SubsystemShape(2, 3), {3}), ErrorKind::Shape);
  EXPECT_QDF_ERROR(partial_trace(op, SubsystemShape(2, 3), {1, 1}), ErrorKind::Shape);
  EXPECT_QDF_ERROR(partial_trace(op, SubsystemShape(2, 2), {0}), ErrorKind::Shape);
}

TEST(PermuteSubsystems, SwapProduct) {
  std::mt19937_64 rng(6);
  const auto a = random_density(2, rng).op();
  const auto b = random_density(2, rng).op();
  EXPECT_LE(max_abs_diff(permute_subsystems(tensor(a, b), SubsystemShape(2, 2), {1, 0}), tensor(b, a)), 1e-15);
}

TEST(PermuteSubsystems, MovesFactorKToPermK) {
  std::mt19937_64 rng(7);
  const auto a = random_density(2, rng).op();
  const auto b = random_density(2, rng).op();
  const auto c = random_density(2, rng).op();
  const auto abc = tensor(tensor(a, b), c);
  // a -> slot 2, b -> slot 0, c -> slot 1
  EXPECT_LE(max_abs_diff(permute_subsystems(abc, SubsystemShape(2, 3), {2, 0, 1}), tensor(tensor(b, c), a)), 1e-15);
}

TEST(PermuteSubsystems, GhzInvariantAndIdentity) {
  const auto ghz = ghz_projector();
  std::vector<std::size_t> perm{0, 1, 2};
  do {
    EXPECT_LE(max_abs_diff(permute_subsystems(ghz, SubsystemShape(2, 3), perm), ghz), 1e-15);
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::mt19937_64 rng(8);
  const auto op = random_hermitian(27, rng);
  EXPECT_EQ(max_abs_diff(permute_subsystems(op, SubsystemShape(3, 3), {0, 1, 2}), op), 0.0);
}

TEST(PermuteSubsystems, InverseRoundTripAndErrors) {
  std::mt19937_64 rng(9);
  const auto op = random_hermitian(16, rng);
  const SubsystemShape shape(2, 4);
  const std::vector<std::size_t> p{3, 0, 2, 1};
  const auto back = permute_subsystems(permute_subsystems(op, shape, p), shape, inverse_permutation(p));
  EXPECT_LE(max_abs_diff(back, op), 1e-15);
  EXPECT_QDF_ERROR(permute_subsystems(op, shape, {0, 0, 1, 2}), ErrorKind::Argument);
  EXPECT_QDF_ERROR(permute_subsystems(op, shape, {0, 1, 2}), ErrorKind::Argument);
}

TEST(EigHermitian, Paulis) {
  for (int k : {1, 2, 3}) {
    const auto e = eig_hermitian(pauli(k));
    EXPECT_NEAR(e.values(0), 1.0, 1e-15);
    EXPECT_NEAR(e.values(1), -1.0, 1e-15);
  }
}

TEST(EigHermitian, ReconstructsAndPhaseConvention) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const auto h = random_hermitian(4, rng);
    const auto e = eig_hermitian(h);
    const CMatrix rec = e.vectors * e.values.cast<cplx>().asDiagonal() * e.vectors.adjoint();
    EXPECT_LE(max_abs(rec - h.matrix()), 1e-9);
    EXPECT_LE(max_abs(e.vectors.adjoint() * e.vectors - CMatrix::Identity(4, 4)), 1e-12);
    for (Eigen::Index k = 0; k + 1 < 4; ++k) EXPECT_GE(e.values(k), e.values(k + 1));
    for (Eigen::Index k = 0; k < 4; ++k) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < 4; ++i)
        if (std::abs(e.vectors(i, k)) > std::abs(e.vectors(best, k)) + 1e-12) best = i;
      EXPECT_NEAR(e.vectors(best, k).imag(), 0.0, 1e-14);
      EXPECT_GT(e.vectors(best, k).real(), 0.0);
    }
  }
}

TEST(InvSqrt, Analytic) {
  EXPECT_LE(max_abs_diff(inv_sqrt(HermitianOperator::identity(3)), HermitianOperator::identity(3)), 1e-15);
  EXPECT_LE(max_abs_diff(inv_sqrt(HermitianOperator(diag({4, 1}))), HermitianOperator(diag({0.5, 1}))), 1e-15);
}

TEST(InvSqrt, MinimalPovmGram) {
  const auto proj = minimal_ic_projectors(2);
  HermitianOperator g = HermitianOperator::zero(2);
  for (const auto& p : proj.projectors) g = g + p;
  const CMatrix r = inv_sqrt(g).matrix();
  EXPECT_LE(max_abs(r * g.matrix() * r - CMatrix::Identity(2, 2)), 1e-9);
}

TEST(InvSqrt, SingularRejected) {
  EXPECT_QDF_ERROR(inv_sqrt(HermitianOperator(diag({1, 0}))), ErrorKind::NotPositiveDefinite);
  EXPECT_QDF_ERROR(inv_sqrt(HermitianOperator(diag({1, -1}))), ErrorKind::NotPositiveDefinite);
}

TEST(TraceDistance, Basic) {
  const HermitianOperator a(diag({1, 0}));
  const HermitianOperator b(diag({0, 1}));
  EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-15);
  EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-15);
}
