#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "qdf/states_povm.hpp"

using namespace qdf;
using testutil::diag;

namespace {

Povm von_neumann_z() {
  return Povm({HermitianOperator(diag({1, 0})), HermitianOperator(diag({0, 1}))});
}

// n_+- = e3/2 +- (sqrt(3)/2) e1
BlochVector n_plus() { return {std::sqrt(3.0) / 2.0, 0.0, 0.5}; }
BlochVector n_minus() { return {-std::sqrt(3.0) / 2.0, 0.0, 0.5}; }

}  // namespace

TEST(DensityOperator, RejectsInvalidAndClipsRoundoff) {
  EXPECT_QDF_ERROR(DensityOperator(HermitianOperator(diag({0.6, 0.6}))), ErrorKind::Invariant);
  EXPECT_QDF_ERROR(DensityOperator(HermitianOperator(diag({1.1, -0.1}))), ErrorKind::Invariant);
  const DensityOperator clipped(HermitianOperator(diag({1.0 + 5e-10, -5e-10})));
  EXPECT_GE(min_eigenvalue(clipped.op()), 0.0);
  EXPECT_NEAR(clipped.op().trace(), 1.0, 1e-15);
}

TEST(DensityFromBloch, Examples) {
  EXPECT_LE(max_abs_diff(density_from_bloch({0, 0, 0}).op(), HermitianOperator::identity(2) * 0.5), 1e-15);
  const auto half = density_from_bloch({0, 0, 0.5});
  const auto e = eig_hermitian(half.op());
  EXPECT_NEAR(e.values(0), 0.75, 1e-15);
  EXPECT_NEAR(e.values(1), 0.25, 1e-15);
  EXPECT_LE(max_abs_diff(density_from_bloch({0, 0, 1}).op(), HermitianOperator(diag({1, 0}))), 1e-15);
  EXPECT_QDF_ERROR(density_from_bloch({1, 1, 0}), ErrorKind::Invariant);
}

TEST(DensityFromBloch, BlochRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto rho = random_density(2, rng);
    const auto back = density_from_bloch(bloch_of(rho));
    EXPECT_LE(max_abs_diff(back.op(), rho.op()), 1e-14);
  }
}

TEST(EnsembleToDensity, TwoDecompositionsAgree) {
  const auto target = density_from_bloch({0, 0, 0.5});
  const Ensemble eigen({0.75, 0.25}, {density_from_bloch({0, 0, 1}), density_from_bloch({0, 0, -1})});
  const Ensemble tilted({0.5, 0.5}, {density_from_bloch(n_plus()), density_from_bloch(n_minus())});
  EXPECT_LE(max_abs_diff(ensemble_to_density(eigen).op(), target.op()), 1e-12);
  EXPECT_LE(max_abs_diff(ensemble_to_density(tilted).op(), target.op()), 1e-12);
  EXPECT_LE(max_abs_diff(ensemble_to_density(eigen).op(), ensemble_to_density(tilted).op()), 1e-12);
  EXPECT_LE(max_abs_diff(ensemble_to_density(Ensemble({1.0}, {target})).op(), target.op()), 1e-15);
}

TEST(EnsembleToDensity, Errors) {
  const auto s = density_from_bloch({0, 0, 0});
  EXPECT_QDF_ERROR(Ensemble({0.5}, {s, s}), ErrorKind::Shape);
  EXPECT_QDF_ERROR(Ensemble({0.5, 0.6}, {s, s}), ErrorKind::Normalization);
  EXPECT_QDF_ERROR(Ensemble({1.5, -0.5}, {s, s}), ErrorKind::Argument);
}

TEST(Povm, Validation) {
  EXPECT_QDF_ERROR(Povm({HermitianOperator(diag({1, 0}))}), ErrorKind::Invariant);
  EXPECT_QDF_ERROR(Povm({HermitianOperator(diag({1.5, 0})), HermitianOperator(diag({-0.5, 1}))}),
                   ErrorKind::Invariant);
  EXPECT_QDF_ERROR(Povm({}), ErrorKind::Argument);
}

TEST(Born, Examples) {
  const auto mixed = DensityOperator(HermitianOperator::identity(3) * (1.0 / 3.0));
  const auto povm3 = build_minimal_ic_povm(3);
  const auto p = born(mixed, povm3);
  for (std::size_t a = 0; a < p.size(); ++a) EXPECT_NEAR(p[a], povm3[a].trace() / 3.0, 1e-14);

  const auto half = density_from_bloch({0, 0, 0.5});
  const auto q = born(half, von_neumann_z());
  EXPECT_NEAR(q[0], 0.75, 1e-12);
  EXPECT_NEAR(q[1], 0.25, 1e-12);

  // |<e3|n_+->|^2 = 3/4
  EXPECT_NEAR(born(density_from_bloch(n_plus()), von_neumann_z())[0], 0.75, 1e-12);
  EXPECT_NEAR(born(density_from_bloch(n_minus()), von_neumann_z())[0], 0.75, 1e-12);
}

TEST(Born, TetrahedronVertexState) {
  const auto v = tetrahedron_vertices();
  const auto rho = density_from_bloch({v[0][0], v[0][1], v[0][2]});
  const auto p = born(rho, tetrahedron_povm());
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  for (int a = 1; a < 4; ++a) EXPECT_NEAR(p[a], 1.0 / 6.0, 1e-15);
  const auto u = born(density_from_bloch({0, 0, 0}), tetrahedron_povm());
  for (double x : u) EXPECT_NEAR(x, 0.25, 1e-15);
}

TEST(Born, DimensionMismatch) {
  EXPECT_QDF_ERROR(born(density_from_bloch({0, 0, 0}), build_minimal_ic_povm(3)), ErrorKind::Shape);
}

TEST(MinimalIcPovm, ElementCountsAndSteps) {
  for (std::size_t d = 2; d <= 5; ++d) {
    const auto povm = build_minimal_ic_povm(d);
    EXPECT_EQ(povm.size(), d * d);
    EXPECT_LE(povm.identity_residual(), 1e-9);
    for (const auto& e : povm.elements()) EXPECT_GE(min_eigenvalue(e), -1e-12);
    EXPECT_EQ(gram_summary(povm.elements()).rank, d * d);
  }
  const auto steps = minimal_ic_projectors(3).steps;
  ASSERT_EQ(steps.size(), 9u);
  EXPECT_EQ(std::count(steps.begin(), steps.end(), IcStep::Diagonal), 3);
  EXPECT_EQ(std::count(steps.begin(), steps.end(), IcStep::RealSuperposition), 3);
  EXPECT_EQ(std::count(steps.begin(), steps.end(), IcStep::ImaginarySuperposition), 3);
  // step boundaries: alpha <= d, <= d(d+1)/2, <= d^2
  for (std::size_t a = 0; a < 9; ++a) {
    const auto expect = a < 3 ? IcStep::Diagonal : a < 6 ? IcStep::RealSuperposition : IcStep::ImaginarySuperposition;
    EXPECT_EQ(steps[a], expect);
  }
  EXPECT_QDF_ERROR(build_minimal_ic_povm(1), ErrorKind::Argument);
}

TEST(MinimalIcPovm, GramRankBySingularValues) {
  const auto g = gram_matrix(build_minimal_ic_povm(2).elements());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  EXPECT_GT(svd.singularValues().minCoeff(), 1e-3);
  EXPECT_EQ(gram_summary(build_minimal_ic_povm(2).elements()).rank, 4u);
}

TEST(Tetrahedron, SumAndMaxProbability) {
  const auto t = tetrahedron_povm();
  EXPECT_LE(t.identity_residual(), 1e-12);
  double sum[3] = {0, 0, 0};
  for (const auto& v : tetrahedron_vertices())
    for (int k = 0; k < 3; ++k) sum[k] += v[k];
  for (double s : sum) EXPECT_NEAR(s, 0.0, 1e-15);
  for (const auto& e : t.elements()) EXPECT_NEAR(max_eigenvalue(e), 0.5, 1e-15);
}

TEST(Tetrahedron, RandomStatesNeverExceedHalf) {
  std::mt19937_64 rng(12);
  const auto t = tetrahedron_povm();
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i)
    for (double p : born(random_density(2, rng), t)) worst = std::max(worst, p);
  EXPECT_LE(worst, 0.5 + 1e-12);
}

TEST(DualFrame, RoundTripRandomStates) {
  std::mt19937_64 rng(13);
  for (std::size_t d : {2u, 3u, 4u}) {
    const DualFrame frame(build_minimal_ic_povm(d));
    for (int i = 0; i < 100; ++i) {
      const auto rho = random_density(d, rng);
      const auto p = born(rho, frame.povm());
      EXPECT_LE(trace_distance(reconstruct_operator(p, frame), rho.op()), 1e-8);
    }
  }
}

TEST(DualFrame, TetrahedronExamples) {
  const DualFrame frame(tetrahedron_povm());
  const std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
  EXPECT_LE(max_abs_diff(reconstruct_operator(uniform, frame), HermitianOperator::identity(2) * 0.5), 1e-14);

  // 4 linear equations tr(A E_a) = p_a, solved independently in Bloch form:
  // p_a = (1 + n_a . s) / 4  =>  s = 3 sum_a p_a n_a  (since sum n_a n_a^T = 4/3 I)
  const std::vector<double> p{0.75, 0.125, 0.0625, 0.0625};
  const auto a = reconstruct_operator(p, frame);
  const auto v = tetrahedron_vertices();
  double s[3] = {0, 0, 0};
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 3; ++j) s[j] += 3.0 * p[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
  const double norm = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
  EXPECT_NEAR(a.trace(), 1.0, 1e-12);
  EXPECT_NEAR(min_eigenvalue(a), 0.5 * (1.0 - norm), 1e-12);
  EXPECT_LT(min_eigenvalue(a), 0.0);
}

TEST(DualFrame, MaximallyMixedImage) {
  const DualFrame frame(build_minimal_ic_povm(3));
  std::vector<double> p;
  for (const auto& e : frame.povm().elements()) p.push_back(e.trace() / 3.0);
  EXPECT_LE(max_abs_diff(reconstruct_operator(p, frame), HermitianOperator::identity(3) * (1.0 / 3.0)), 1e-12);
}

TEST(DualFrame, Errors) {
  EXPECT_QDF_ERROR(DualFrame{von_neumann_z()}, ErrorKind::NotInformationallyComplete);
  // four elements but rank 2: split the von Neumann POVM in halves
  const Povm redundant({HermitianOperator(diag({0.5, 0})), HermitianOperator(diag({0.5, 0})),
                        HermitianOperator(diag({0, 0.5})), HermitianOperator(diag({0, 0.5}))});
  EXPECT_QDF_ERROR(DualFrame{redundant}, ErrorKind::NotInformationallyComplete);
  const DualFrame frame(tetrahedron_povm());
  EXPECT_QDF_ERROR(reconstruct_operator(std::vector<double>{0.5, 0.5}, frame), ErrorKind::Shape);
  EXPECT_QDF_ERROR(reconstruct_operator(std::vector<double>{0.5, 0.5, 0.5, 0.5}, frame), ErrorKind::Normalization);
}
