#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace symform;
using symform::testing::random_vector;
using symform::testing::reflection_graph;
using symform::testing::reference_flow;
using symform::testing::rotation_graph;

namespace {

void expect_spectrum_invariants(const BlockMatrix& q, const Spectrum& s) {
  const Eigen::MatrixXd& v = s.eigenvectors;
  const Eigen::MatrixXd recon = v * s.eigenvalues.asDiagonal() * v.transpose();
  EXPECT_LE((q.dense() - recon).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, q.dense().cwiseAbs().maxCoeff()));
  EXPECT_LE((v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff(), 1e-9);
  for (Eigen::Index k = 1; k < s.eigenvalues.size(); ++k) EXPECT_LE(s.eigenvalues(k - 1), s.eigenvalues(k));
}

}  // namespace

TEST(Eigendecompose, ZeroMatrix) {
  const BlockMatrix q(1, 1);
  const Spectrum s = eigendecompose(q);
  EXPECT_EQ(s.null_dim, 2);
  EXPECT_EQ(s.eigenvalues.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(convergence_rate(s), Error);
}

TEST(Eigendecompose, FreeReflectionHexagonHasTwoDimensionalNullSpace) {
  const BlockMatrix q = laplacian(reflection_graph(6, false));
  const Spectrum s = eigendecompose(q);
  EXPECT_EQ(s.null_dim, 2);
  expect_spectrum_invariants(q, s);
}

TEST(Eigendecompose, AnchoredHexagonHasOneDimensionalNullSpace) {
  const BlockMatrix q = augmented_laplacian(reflection_graph(6, true, 0));
  const Spectrum s = eigendecompose(q);
  EXPECT_EQ(s.null_dim, 1);
  EXPECT_GE(s.gap_ratio, 1e3);
  expect_spectrum_invariants(q, s);
}

TEST(Eigendecompose, AgreesWithReferenceSolver) {
  std::mt19937_64 rng(23);
  for (int n : {3, 5, 8, 16}) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(2 * n, 2 * n, [&] { return random_vector(rng, 1)(0); });
    const BlockMatrix q(Eigen::MatrixXd(a + a.transpose()));
    const Spectrum s = eigendecompose(q, -std::numeric_limits<double>::infinity());
    const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q.dense()).eigenvalues();
    EXPECT_LE((s.eigenvalues - ref).cwiseAbs().maxCoeff(), 1e-10);
    expect_spectrum_invariants(q, s);
  }
}

TEST(Eigendecompose, RejectsAsymmetricInput) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
  a(0, 3) = 1e-3;
  try {
    eigendecompose(BlockMatrix(a));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Asymmetry);
  }
}

TEST(Eigendecompose, FlagsAmbiguousNullSpace) {
  const Eigen::Vector4d d(1e-10, 2e-9, 1.0, 2.0);
  try {
    eigendecompose(BlockMatrix(Eigen::MatrixXd(d.asDiagonal())));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AmbiguousNullspace);
  }
  const Eigen::Vector4d clear(1e-14, 5e-9, 1.0, 2.0);
  EXPECT_EQ(eigendecompose(BlockMatrix(Eigen::MatrixXd(clear.asDiagonal()))).null_dim, 1);
}

TEST(NullSpace, DimensionsAcrossOrders) {
  for (int n : {4, 6, 8, 10}) {
    EXPECT_EQ(eigendecompose(laplacian(reflection_graph(n, false))).null_dim, 2) << n;
    EXPECT_EQ(eigendecompose(augmented_laplacian(reflection_graph(n, true, 0))).null_dim, 1) << n;
  }
  for (int n : {4, 6, 8}) EXPECT_EQ(eigendecompose(laplacian(rotation_graph(n))).null_dim, 2) << n;
}

TEST(NullSpace, VectorsFollowTheChain) {
  const int n = 8;
  const int l = 3;
  const InteractionGraph g = reflection_graph(n, true, l);
  const Spectrum s = eigendecompose(augmented_laplacian(g));
  const ChainedTransforms chain = chain_transforms(g, l);
  const Eigen::VectorXd v = s.null_basis().col(0);
  const Vec2 pl = v.segment<2>(2 * l);
  const Vec2 dir = g.anchor->mirror.direction;
  EXPECT_LE(std::abs(pl.x() * dir.y() - pl.y() * dir.x()), 1e-8);
  for (int i = 0; i < n; ++i)
    EXPECT_LE((v.segment<2>(2 * i) - chain.S[static_cast<std::size_t>(i)] * pl).norm(), 1e-8);
}

TEST(ChainTransforms, AnchorIsIdentity) {
  const ChainedTransforms c = chain_transforms(reflection_graph(5, false), 2);
  EXPECT_EQ(c.S[2], Mat2::Identity());
}

TEST(ChainTransforms, TriangleRotationalChain) {
  const ChainedTransforms c = chain_transforms(rotation_graph(3, {2, 0}), 0);
  // R(2pi/3) R(2pi/3) = R(4pi/3)
  Mat2 expected;
  expected << -0.5, std::sqrt(3.0) / 2, -std::sqrt(3.0) / 2, -0.5;
  EXPECT_LE((c.S[2] - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ChainTransforms, ReflectionDeterminantAlternates) {
  const int n = 7;
  const ChainedTransforms c = chain_transforms(reflection_graph(n, false, 0, {6, 0}), 0);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(c.S[static_cast<std::size_t>(i)].determinant(), i % 2 == 0 ? 1.0 : -1.0, 1e-12);
    const Mat2& m = c.S[static_cast<std::size_t>(i)];
    EXPECT_LE((m * m.transpose() - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ChainTransforms, DisconnectedGraphHasNoPath) {
  InteractionGraph g = reflection_graph(6, false);
  g.edges[2] = {0, 1};
  try {
    chain_transforms(g, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPath);
  }
}

TEST(PropagateMirrors, MatchesCanonicalVertexMirrors) {
  for (int n : {4, 5, 6, 8}) {
    const double base = default_base_angle(n);
    for (int l : {0, n - 1}) {
      const InteractionGraph g = reflection_graph(n, true, l, {1, 2});
      const auto lines = propagate_mirrors(g, l, g.anchor->mirror);
      EXPECT_TRUE(lines[static_cast<std::size_t>(l)].same_line(g.anchor->mirror, 1e-12));
      for (int i = 0; i < n; ++i)
        EXPECT_TRUE(lines[static_cast<std::size_t>(i)].same_line(
            MirrorLine::from_angle(vertex_mirror_angle(i, n, base)), 1e-9))
            << "n=" << n << " i=" << i;
    }
  }
}

TEST(PropagateMirrors, EdgeRelationHolds) {
  const InteractionGraph g = reflection_graph(6, true, 2);
  const auto lines = propagate_mirrors(g, 2, g.anchor->mirror);
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto [i, j] = g.edges[k];
    const MirrorLine mapped{g.edge_elems[k].rep * lines[static_cast<std::size_t>(i)].direction,
                            g.edge_elems[k].rep * lines[static_cast<std::size_t>(i)].normal};
    EXPECT_TRUE(mapped.same_line(lines[static_cast<std::size_t>(j)], 1e-10));
  }
}

TEST(BuildV0, NormAndAnchorBlock) {
  const int n = 6;
  const InteractionGraph g = reflection_graph(n, true, 4);
  const ChainedTransforms c = chain_transforms(g, 4);
  const Eigen::VectorXd v0 = build_v0(c, g.anchor->mirror.direction);
  EXPECT_NEAR(v0.squaredNorm(), n, 1e-10);
  EXPECT_LE((v0.segment<2>(8) - g.anchor->mirror.direction).norm(), 1e-15);
  EXPECT_LE((augmented_laplacian(g).dense() * v0).norm(), 1e-9);
  EXPECT_THROW(build_v0(c, Vec2(1.0, 1.0)), Error);
}

TEST(PredictSteadyState, ProjectionFixesRangeAndKillsComplement) {
  const int n = 6;
  const InteractionGraph g = reflection_graph(n, true, 0);
  const Eigen::VectorXd v0 = build_v0(chain_transforms(g, 0), g.anchor->mirror.direction);
  EXPECT_LE((predict_steady_state(2.5 * v0, v0, n) - 2.5 * v0).norm(), 1e-12);

  std::mt19937_64 rng(9);
  Configuration p = random_vector(rng, 2 * n);
  p -= v0 * (v0.dot(p) / n);
  EXPECT_LE(predict_steady_state(p, v0, n).norm(), 1e-12);
  EXPECT_THROW(predict_steady_state(Configuration::Zero(4), v0, n), Error);
}

TEST(PredictSteadyState, MatchesLongTimeReferenceFlow) {
  const int n = 6;
  const InteractionGraph g = reflection_graph(n, true, 0);
  const BlockMatrix q = augmented_laplacian(g);
  const double rate = convergence_rate(eigendecompose(q));
  const ChainedTransforms chain = chain_transforms(g, 0);
  const Eigen::VectorXd v0 = build_v0(chain, g.anchor->mirror.direction);
  std::mt19937_64 rng(31);
  for (int k = 0; k < 5; ++k) {
    const Configuration p0 = random_vector(rng, 2 * n, 2.0);
    const Configuration limit = reference_flow(q.dense(), p0, 30.0 / rate);
    EXPECT_LE((predict_steady_state(p0, v0, n) - limit).norm(), 1e-6);
    EXPECT_LE((predict_steady_state_per_agent(p0, chain, g.anchor->mirror.direction) - limit).norm(), 1e-6);
  }
}

TEST(PredictSteadyState, ProjectorIsIdempotentAndSymmetric) {
  const int n = 8;
  const InteractionGraph g = reflection_graph(n, true, 5);
  const Eigen::VectorXd v0 = build_v0(chain_transforms(g, 5), g.anchor->mirror.direction);
  const Eigen::MatrixXd p = v0 * v0.transpose() / n;
  EXPECT_LE((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Residuals, CanonicalPolygonIsFullySymmetric) {
  for (int n : {3, 4, 6, 7}) {
    const double base = default_base_angle(n);
    const auto group = dihedral_group(n, base);
    const ResidualReport r = residuals(canonical_embedding(n, base), reflection_graph(n, true, 0), group);
    EXPECT_LE(r.full_group_residual, 1e-14);
    EXPECT_LE(r.edge_residual, 1e-14);
    EXPECT_LE(r.anchor_residual, 1e-15);
  }
}

TEST(Residuals, DisplacedAnchorIsReported) {
  const int n = 6;
  const double base = default_base_angle(n);
  const InteractionGraph g = reflection_graph(n, true, 0);
  Configuration p = canonical_embedding(n, base);
  p.segment<2>(0) += 0.3 * g.anchor->mirror.normal;
  const ResidualReport r = residuals(p, g, dihedral_group(n, base));
  EXPECT_NEAR(r.anchor_residual, 0.3, 1e-12);
  EXPECT_GT(r.full_group_residual, 0.1);
}

TEST(Residuals, FreeReflectionLimitIsAFlex) {
  const int n = 6;
  const double base = default_base_angle(n);
  const InteractionGraph g = reflection_graph(n, false);
  const Spectrum s = eigendecompose(laplacian(g));
  std::mt19937_64 rng(2);
  const Configuration limit = project_onto(s.null_basis(), random_vector(rng, 2 * n));
  const ResidualReport r = residuals(limit, g, dihedral_group(n, base));
  EXPECT_LE(r.edge_residual, 1e-12);
  EXPECT_GT(r.full_group_residual, 0.05 * limit.norm());
}

TEST(ConvergenceRate, PositiveAndAngleInvariant) {
  const InteractionGraph g = reflection_graph(6, true, 0);
  const double r0 = convergence_rate(eigendecompose(rotated_laplacian(g, 0.0)));
  const double r1 = convergence_rate(eigendecompose(rotated_laplacian(g, 0.7)));
  EXPECT_GT(r0, 0.0);
  EXPECT_NEAR(r0, r1, 1e-10);
  EXPECT_GT(convergence_rate(eigendecompose(laplacian(rotation_graph(5)))), 0.0);
}
