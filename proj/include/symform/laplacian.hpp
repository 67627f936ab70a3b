#pragma once

// Matrix-weighted incidence matrices and symmetry-constraining Laplacians on
// spanning trees of the cycle graph C_n.
//
// Edge convention: edge (i, j) is stored with i < j and carries the group
// element g with g(i) = j. The enforced relation is p_j = tau(g) p_i, so the
// edge term of the potential is 1/2 |p_i - tau(g)^T p_j|^2 and the Laplacian
// has block (i, j) = -tau(g)^T, block (j, i) = -tau(g).

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "symform/error.hpp"
#include "symform/symmetry.hpp"

namespace symform {

/// Dense matrix viewed as a grid of 2x2 blocks.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  BlockMatrix(int block_rows, int block_cols)
      : dense_(Eigen::MatrixXd::Zero(2 * block_rows, 2 * block_cols)) {}
  explicit BlockMatrix(Eigen::MatrixXd dense) : dense_(std::move(dense)) {
    detail::require(dense_.rows() % 2 == 0 && dense_.cols() % 2 == 0, ErrorCode::ShapeError,
                    "BlockMatrix: dimensions must be even");
  }

  int block_rows() const { return static_cast<int>(dense_.rows() / 2); }
  int block_cols() const { return static_cast<int>(dense_.cols() / 2); }

  auto block(int i, int j) { return dense_.block<2, 2>(2 * i, 2 * j); }
  Mat2 block(int i, int j) const { return dense_.block<2, 2>(2 * i, 2 * j); }

  const Eigen::MatrixXd& dense() const { return dense_; }
  Eigen::MatrixXd& dense() { return dense_; }

  BlockMatrix transpose() const { return BlockMatrix(Eigen::MatrixXd(dense_.transpose())); }

  friend BlockMatrix operator*(const BlockMatrix& a, const BlockMatrix& b) {
    return BlockMatrix(Eigen::MatrixXd(a.dense_ * b.dense_));
  }

  bool is_symmetric(double tol) const {
    return dense_.rows() == dense_.cols() && (dense_ - dense_.transpose()).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  Eigen::MatrixXd dense_;
};

struct Edge {
  int i = 0;
  int j = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Anchor: vertex pinned to its own mirror line by a self reflection.
struct Anchor {
  int vertex = 0;
  GroupElement element;
  MirrorLine mirror;
};

enum class EdgeFamily { Rotational, Reflectional };

struct InteractionGraph {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<GroupElement> edge_elems;  // parallel to edges once assigned
  std::optional<Anchor> anchor;

  bool assigned() const { return !edges.empty() && edge_elems.size() == edges.size(); }

  int degree(int v) const {
    return static_cast<int>(
        std::count_if(edges.begin(), edges.end(), [v](const Edge& e) { return e.i == v || e.j == v; }));
  }

  /// Checks the spanning-tree and assignment invariants; throws on violation.
  void validate() const;
};

namespace detail {

inline bool is_cycle_edge(int i, int j, int n) {
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) return false;
  const int d = positive_mod(j - i, n);
  return d == 1 || d == n - 1;
}

inline Edge normalized(int i, int j) { return i < j ? Edge{i, j} : Edge{j, i}; }

/// Union-find connectivity check for an edge list.
inline bool connects_all(int n, const std::vector<Edge>& edges) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) parent[static_cast<std::size_t>(v)] = v;
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  int components = n;
  for (const auto& e : edges) {
    const int a = find(e.i);
    const int b = find(e.j);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  return components == 1;
}

inline void require_assigned(const InteractionGraph& g, const char* who) {
  require(g.assigned(), ErrorCode::UnassignedEdges, std::string(who) + ": edge elements are not assigned");
}

}  // namespace detail

inline void InteractionGraph::validate() const {
  detail::require(n >= 3, ErrorCode::InvalidOrder, "graph: n must be >= 3");
  detail::require(static_cast<int>(edges.size()) == n - 1, ErrorCode::InvalidEdge,
                  "graph: a spanning tree needs exactly n-1 edges");
  for (const auto& e : edges)
    detail::require(e.i < e.j && detail::is_cycle_edge(e.i, e.j, n), ErrorCode::InvalidEdge,
                    "graph: edge is not an edge of C_n");
  detail::require(detail::connects_all(n, edges), ErrorCode::InvalidEdge, "graph: edges are not connected");
  if (!edge_elems.empty()) {
    detail::require(edge_elems.size() == edges.size(), ErrorCode::UnassignedEdges,
                    "graph: edge element count mismatch");
    for (std::size_t k = 0; k < edges.size(); ++k)
      detail::require(edge_elems[k].order() == n && edge_elems[k](edges[k].i) == edges[k].j,
                      ErrorCode::Incompatible, "graph: edge element does not map i to j");
  }
  if (anchor) {
    detail::require(anchor->element.is_reflection() && anchor->element(anchor->vertex) == anchor->vertex,
                    ErrorCode::InvalidAnchor, "graph: anchor element must be a self reflection fixing the anchor");
  }
}

/// All edges of C_n except removed (given in either orientation).
inline InteractionGraph spanning_tree(int n, Edge removed) {
  detail::require(n >= 3, ErrorCode::InvalidOrder, "spanning_tree: n must be >= 3");
  detail::require(detail::is_cycle_edge(removed.i, removed.j, n), ErrorCode::InvalidEdge,
                  "spanning_tree: removed edge is not an edge of C_n");
  const Edge drop = detail::normalized(removed.i, removed.j);
  InteractionGraph g;
  g.n = n;
  for (int v = 0; v < n; ++v) {
    const Edge e = detail::normalized(v, (v + 1) % n);
    if (!(e == drop)) g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  return g;
}

/// Rotational: c_n^{+-1} with g(i) = j. Reflectional: the mirror through the
/// midpoint of the canonical positions of i and j.
inline InteractionGraph assign_edges(InteractionGraph g, EdgeFamily family, double base_angle) {
  detail::require(g.edge_elems.empty(), ErrorCode::AlreadyAssigned, "assign_edges: graph already has edge elements");
  g.edge_elems.reserve(g.edges.size());
  for (const auto& e : g.edges) {
    if (family == EdgeFamily::Rotational)
      g.edge_elems.push_back(make_rotation(detail::positive_mod(e.j - e.i, g.n), g.n));
    else
      g.edge_elems.push_back(make_reflection(edge_mirror_angle(e.i, e.j, g.n, base_angle), g.n, base_angle));
  }
  return g;
}

/// Pins vertex to the dihedral mirror through its canonical position.
inline InteractionGraph with_anchor(InteractionGraph g, int vertex, double base_angle) {
  detail::require(vertex >= 0 && vertex < g.n, ErrorCode::InvalidAnchor, "with_anchor: vertex out of range");
  const double angle = vertex_mirror_angle(vertex, g.n, base_angle);
  GroupElement element = make_reflection(angle, g.n, base_angle);
  const MirrorLine mirror = element.mirror();
  g.anchor = Anchor{vertex, std::move(element), mirror};
  return g;
}

/// 2n x 2(n-1) incidence. Column k for edge (i, j): block i = I, block j = -tau(g).
inline BlockMatrix incidence(const InteractionGraph& g) {
  detail::require_assigned(g, "incidence");
  BlockMatrix e(g.n, static_cast<int>(g.edges.size()));
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const int col = static_cast<int>(k);
    e.block(g.edges[k].i, col) = Mat2::Identity();
    e.block(g.edges[k].j, col) = -g.edge_elems[k].rep;
  }
  return e;
}

/// Built from the edge list directly; independent of incidence().
inline BlockMatrix laplacian(const InteractionGraph& g) {
  detail::require_assigned(g, "laplacian");
  BlockMatrix q(g.n, g.n);
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto [i, j] = g.edges[k];
    const Mat2& t = g.edge_elems[k].rep;
    q.block(i, i) += Mat2::Identity();
    q.block(j, j) += Mat2::Identity();
    q.block(i, j) = -t.transpose();
    q.block(j, i) = -t;
  }
  return q;
}

/// Adds I - tau(anchor) = 2 n n^T to block (vertex, vertex).
inline BlockMatrix augment_anchor(BlockMatrix q, int vertex, const GroupElement& anchor_elem) {
  detail::require(anchor_elem.is_reflection() && vertex >= 0 && vertex < anchor_elem.order() &&
                      anchor_elem(vertex) == vertex,
                  ErrorCode::InvalidAnchor, "augment_anchor: element is not a self reflection fixing the anchor");
  detail::require(q.block_rows() == anchor_elem.order(), ErrorCode::ShapeError,
                  "augment_anchor: Laplacian size does not match the element");
  q.block(vertex, vertex) += Mat2::Identity() - anchor_elem.rep;
  return q;
}

/// Laplacian plus the anchor penalty of g.anchor.
inline BlockMatrix augmented_laplacian(const InteractionGraph& g) {
  detail::require(g.anchor.has_value(), ErrorCode::InvalidAnchor, "augmented_laplacian: graph has no anchor");
  return augment_anchor(laplacian(g), g.anchor->vertex, g.anchor->element);
}

/// Anchored Laplacian with every reflection block conjugated by R(theta),
/// the anchor block included.
inline BlockMatrix rotated_laplacian(const InteractionGraph& g, double theta) {
  detail::require_assigned(g, "rotated_laplacian");
  detail::require(g.anchor.has_value(), ErrorCode::InvalidAnchor, "rotated_laplacian: graph has no anchor");
  const Mat2 r = rotation_matrix(theta);
  BlockMatrix q(g.n, g.n);
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto [i, j] = g.edges[k];
    const Mat2 t = r * g.edge_elems[k].rep * r.transpose();
    q.block(i, i) += Mat2::Identity();
    q.block(j, j) += Mat2::Identity();
    q.block(i, j) = -t.transpose();
    q.block(j, i) = -t;
  }
  const int l = g.anchor->vertex;
  q.block(l, l) += r * (Mat2::Identity() - g.anchor->element.rep) * r.transpose();
  return q;
}

/// Block-diagonal I_n (x) R(theta).
inline Eigen::MatrixXd block_rotation(int n, double theta) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const Mat2 r = rotation_matrix(theta);
  for (int i = 0; i < n; ++i) out.block<2, 2>(2 * i, 2 * i) = r;
  return out;
}

}  // namespace symform
