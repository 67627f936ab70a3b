#pragma once

// Spectral analysis of the Laplacians, chained edge transforms and mirror-line
// propagation from the anchor, closed-form steady states, and symmetry residuals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "symform/error.hpp"
#include "symform/laplacian.hpp"
#include "symform/symmetry.hpp"

namespace symform {

using Configuration = Eigen::VectorXd;

inline constexpr double kDefaultZeroTol = 1e-9;
/// Minimum ratio between the smallest positive and largest "zero" eigenvalue.
inline constexpr double kNullspaceGap = 1e3;

struct Spectrum {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal
  int null_dim = 0;
  double gap_ratio = std::numeric_limits<double>::infinity();

  /// Orthonormal basis of the computed null space.
  Eigen::MatrixXd null_basis() const { return eigenvectors.leftCols(null_dim); }
};

namespace detail {

/// Cyclic two-sided Jacobi sweeps. Returns eigenvalues (unsorted) and vectors.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index m = a.rows();
  vectors = Eigen::MatrixXd::Identity(m, m);
  const double fro = a.norm();
  const double threshold = 1e-12 * fro;
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index p = 0; p < m; ++p)
      for (Eigen::Index q = p + 1; q < m; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > threshold; ++sweep) {
    for (Eigen::Index p = 0; p < m; ++p) {
      for (Eigen::Index q = p + 1; q < m; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const Eigen::VectorXd col_p = a.col(p);
        a.col(p) = c * col_p - s * a.col(q);
        a.col(q) = s * col_p + c * a.col(q);
        const Eigen::RowVectorXd row_p = a.row(p);
        a.row(p) = c * row_p - s * a.row(q);
        a.row(q) = s * row_p + c * a.row(q);
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        const Eigen::VectorXd v_p = vectors.col(p);
        vectors.col(p) = c * v_p - s * vectors.col(q);
        vectors.col(q) = s * v_p + c * vectors.col(q);
      }
    }
  }
  values = a.diagonal();
}

}  // namespace detail

/// Symmetric eigendecomposition with a null-space count.
///
/// Throws ambiguous-nullspace when the smallest eigenvalue counted as positive
/// is less than kNullspaceGap times the largest one counted as zero.
inline Spectrum eigendecompose(const BlockMatrix& q, double zero_tol = kDefaultZeroTol) {
  const Eigen::MatrixXd& a = q.dense();
  detail::require(a.rows() == a.cols(), ErrorCode::ShapeError, "eigendecompose: matrix is not square");
  const double scale = a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
  detail::require(a.size() == 0 || (a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, scale),
                  ErrorCode::Asymmetry, "eigendecompose: matrix is not symmetric");

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  detail::jacobi_eigen(0.5 * (a + a.transpose()), values, vectors);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return values(x) < values(y); });

  Spectrum s;
  s.eigenvalues.resize(values.size());
  s.eigenvectors.resize(vectors.rows(), vectors.cols());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    s.eigenvalues(k) = values(order[static_cast<std::size_t>(k)]);
    s.eigenvectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
  }

  double largest_zero = 0.0;
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
    if (s.eigenvalues(k) < zero_tol) {
      ++s.null_dim;
      largest_zero = std::max(largest_zero, std::abs(s.eigenvalues(k)));
    }
  }
  if (s.null_dim < s.eigenvalues.size()) {
    const double floor = std::numeric_limits<double>::epsilon() * std::max(scale, 1.0);
    s.gap_ratio = s.eigenvalues(s.null_dim) / std::max(largest_zero, floor);
    if (s.null_dim > 0 && s.gap_ratio < kNullspaceGap)
      detail::fail(ErrorCode::AmbiguousNullspace,
                   "eigendecompose: no clear gap between zero and positive eigenvalues (ratio " +
                       std::to_string(s.gap_ratio) + ")");
  }
  return s;
}

/// Smallest positive eigenvalue: decay rate of the slowest transient.
inline double convergence_rate(const Spectrum& s) {
  detail::require(s.null_dim < s.eigenvalues.size(), ErrorCode::NoPositiveEigenvalue,
                  "convergence_rate: spectrum has no positive eigenvalue");
  return s.eigenvalues(s.null_dim);
}

/// Orthogonal maps S_i carrying the anchor's frame to agent i along the tree.
struct ChainedTransforms {
  int anchor = 0;
  std::vector<Mat2> S;
};

/// S_i is the ordered product of edge representations along the unique tree
/// path anchor -> i, applied nearest-to-anchor first.
inline ChainedTransforms chain_transforms(const InteractionGraph& g, int anchor) {
  detail::require_assigned(g, "chain_transforms");
  detail::require(anchor >= 0 && anchor < g.n, ErrorCode::NoPath, "chain_transforms: anchor out of range");

  ChainedTransforms out;
  out.anchor = anchor;
  out.S.assign(static_cast<std::size_t>(g.n), Mat2::Identity());
  std::vector<bool> seen(static_cast<std::size_t>(g.n), false);
  seen[static_cast<std::size_t>(anchor)] = true;
  std::queue<int> frontier;
  frontier.push(anchor);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      const auto [i, j] = g.edges[k];
      int w = -1;
      Mat2 step;
      if (i == u) {
        w = j;
        step = g.edge_elems[k].rep;
      } else if (j == u) {
        w = i;
        step = g.edge_elems[k].rep.transpose();
      }
      if (w < 0 || seen[static_cast<std::size_t>(w)]) continue;
      seen[static_cast<std::size_t>(w)] = true;
      out.S[static_cast<std::size_t>(w)] = step * out.S[static_cast<std::size_t>(u)];
      frontier.push(w);
    }
  }
  detail::require(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }), ErrorCode::NoPath,
                  "chain_transforms: graph is disconnected");
  return out;
}

/// L_i = S_i L_anchor, sign-canonical.
inline std::vector<MirrorLine> propagate_mirrors(const InteractionGraph& g, int anchor, const MirrorLine& line) {
  const ChainedTransforms chain = chain_transforms(g, anchor);
  std::vector<MirrorLine> lines;
  lines.reserve(chain.S.size());
  for (const Mat2& s : chain.S) lines.push_back(MirrorLine{s * line.direction, s * line.normal}.canonical());
  return lines;
}

/// Stacked S_i * direction; spans the null space of the anchored Laplacian.
inline Eigen::VectorXd build_v0(const ChainedTransforms& chain, const Vec2& direction) {
  detail::require(std::abs(direction.norm() - 1.0) <= kInputTol, ErrorCode::NormalizationError,
                  "build_v0: mirror direction is not a unit vector");
  const int n = static_cast<int>(chain.S.size());
  Eigen::VectorXd v0(2 * n);
  for (int i = 0; i < n; ++i) v0.segment<2>(2 * i) = chain.S[static_cast<std::size_t>(i)] * direction;
  return v0;
}

/// p_inf = (1/n) V0 V0^T p0.
inline Configuration predict_steady_state(const Configuration& p0, const Eigen::VectorXd& v0, int n) {
  detail::require(p0.size() == 2 * n && v0.size() == 2 * n, ErrorCode::ShapeError,
                  "predict_steady_state: dimension mismatch");
  return v0 * (v0.dot(p0) / n);
}

/// Per-agent form: p_inf_i = (1/n) S_i L L^T sum_k S_k^T p_k(0).
inline Configuration predict_steady_state_per_agent(const Configuration& p0, const ChainedTransforms& chain,
                                                    const Vec2& direction) {
  const int n = static_cast<int>(chain.S.size());
  detail::require(p0.size() == 2 * n, ErrorCode::ShapeError, "predict_steady_state_per_agent: dimension mismatch");
  Vec2 pulled = Vec2::Zero();
  for (int k = 0; k < n; ++k) pulled += chain.S[static_cast<std::size_t>(k)].transpose() * p0.segment<2>(2 * k);
  const Mat2 proj = direction * direction.transpose();
  Configuration out(2 * n);
  for (int i = 0; i < n; ++i) out.segment<2>(2 * i) = chain.S[static_cast<std::size_t>(i)] * proj * pulled / n;
  return out;
}

/// Orthogonal projector onto a null space: V0 V0^T for an orthonormal basis.
inline Configuration project_onto(const Eigen::MatrixXd& basis, const Configuration& p) {
  return basis * (basis.transpose() * p);
}

struct ResidualReport {
  double edge_residual = 0.0;        // |E^T p|
  double anchor_residual = 0.0;      // |n_l^T p_l|
  double full_group_residual = 0.0;  // max_{gamma, i} |tau(gamma) p_i - p_gamma(i)|
};

inline double full_group_residual(const Configuration& p, std::span<const GroupElement> group) {
  double worst = 0.0;
  for (const auto& gamma : group) {
    for (int i = 0; i < gamma.order(); ++i) {
      const Vec2 diff = gamma.rep * p.segment<2>(2 * i) - p.segment<2>(2 * gamma(i));
      worst = std::max(worst, diff.norm());
    }
  }
  return worst;
}

inline ResidualReport residuals(const Configuration& p, const InteractionGraph& g,
                                std::span<const GroupElement> full_group) {
  detail::require(p.size() == 2 * g.n, ErrorCode::ShapeError, "residuals: dimension mismatch");
  ResidualReport r;
  if (g.assigned()) {
    double sq = 0.0;
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      const auto [i, j] = g.edges[k];
      sq += (p.segment<2>(2 * i) - g.edge_elems[k].rep.transpose() * p.segment<2>(2 * j)).squaredNorm();
    }
    r.edge_residual = std::sqrt(sq);
  }
  if (g.anchor) r.anchor_residual = std::abs(g.anchor->mirror.normal.dot(p.segment<2>(2 * g.anchor->vertex)));
  r.full_group_residual = full_group_residual(p, full_group);
  return r;
}

}  // namespace symform
