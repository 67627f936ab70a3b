#pragma once

// Dihedral point groups acting on the vertices of the cycle graph C_n,
// together with their 2x2 orthogonal representations.
//
// Canonical embedding: vertex j (0-based) sits on the unit circle at angle
// base_angle + 2*pi*j/n. Every reflection permutation is derived from this
// embedding, so a permutation and its matrix can never disagree.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "symform/error.hpp"

namespace symform {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;

/// Tolerance for checks on matrices we construct ourselves.
inline constexpr double kConstructedTol = 1e-12;
/// Tolerance for user-supplied vectors and angles.
inline constexpr double kInputTol = 1e-9;

inline Mat2 rotation_matrix(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// Base angle that makes the mirror of edge (0,1) vertical.
inline double default_base_angle(int n) { return kPi / 2.0 - kPi / n; }

inline Vec2 canonical_position(int vertex, int n, double base_angle) {
  const double a = base_angle + 2.0 * kPi * vertex / n;
  return {std::cos(a), std::sin(a)};
}

/// Stacked unit-circle regular n-gon, the reference C_nv-symmetric configuration.
inline Eigen::VectorXd canonical_embedding(int n, double base_angle) {
  Eigen::VectorXd p(2 * n);
  for (int j = 0; j < n; ++j) p.segment<2>(2 * j) = canonical_position(j, n, base_angle);
  return p;
}

/// Angle of the mirror through the midpoint of the cycle edge {i, j}.
inline double edge_mirror_angle(int i, int j, int n, double base_angle) {
  return base_angle + (i + j) * kPi / n;
}

/// Angle of the mirror through vertex v.
inline double vertex_mirror_angle(int v, int n, double base_angle) {
  return base_angle + 2.0 * v * kPi / n;
}

/// Householder reflection I - 2 n n^T. The normal must already be unit length.
inline Mat2 householder(const Vec2& normal) {
  detail::require(std::abs(normal.norm() - 1.0) <= kInputTol, ErrorCode::NormalizationError,
                  "householder: normal is not a unit vector (norm " + std::to_string(normal.norm()) +
                      ")");
  return Mat2::Identity() - 2.0 * normal * normal.transpose();
}

/// A line through the origin.
struct MirrorLine {
  Vec2 direction;
  Vec2 normal;

  static MirrorLine from_angle(double angle) {
    return {Vec2(std::cos(angle), std::sin(angle)), Vec2(-std::sin(angle), std::cos(angle))};
  }

  /// Flips the direction into the upper half plane and rebuilds the normal
  /// as its +90 degree rotation.
  MirrorLine canonical() const {
    Vec2 d = direction.normalized();
    if (d.y() < 0.0 || (d.y() == 0.0 && d.x() < 0.0)) d = -d;
    return {d, Vec2(-d.y(), d.x())};
  }

  double angle() const {
    const MirrorLine c = canonical();
    return std::atan2(c.direction.y(), c.direction.x());
  }

  /// Line equality: directions agree up to sign.
  bool same_line(const MirrorLine& other, double tol) const {
    const Vec2 a = direction.normalized();
    const Vec2 b = other.direction.normalized();
    return std::abs(a.x() * b.y() - a.y() * b.x()) <= tol && std::abs(a.dot(b)) >= 1.0 - tol;
  }
};

struct Rotation {
  int k = 0;
};

struct Reflection {
  double axis_angle = 0.0;  // in [0, pi)
};

using ElementKind = std::variant<Rotation, Reflection>;

/// A cycle-graph automorphism paired with its planar orthogonal representation.
struct GroupElement {
  std::vector<int> perm;
  Mat2 rep = Mat2::Identity();
  ElementKind kind;

  int order() const { return static_cast<int>(perm.size()); }
  bool is_rotation() const { return std::holds_alternative<Rotation>(kind); }
  bool is_reflection() const { return std::holds_alternative<Reflection>(kind); }
  int operator()(int i) const { return perm[static_cast<std::size_t>(i)]; }

  MirrorLine mirror() const {
    detail::require(is_reflection(), ErrorCode::WrongKind, "mirror: element is a rotation");
    return MirrorLine::from_angle(std::get<Reflection>(kind).axis_angle);
  }

  bool approx_equal(const GroupElement& other, double tol = 1e-10) const {
    return perm == other.perm && (rep - other.rep).cwiseAbs().maxCoeff() <= tol;
  }
};

namespace detail {

inline double wrap_line_angle(double a) {
  double w = std::fmod(a, kPi);
  if (w < 0.0) w += kPi;
  if (w >= kPi - 1e-15) w = 0.0;
  return w;
}

inline int positive_mod(long long a, int n) {
  const long long r = a % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

/// Vertex whose canonical position is within tol of point, if any.
inline std::optional<int> vertex_at(const Vec2& point, int n, double base_angle, double tol) {
  for (int v = 0; v < n; ++v)
    if ((canonical_position(v, n, base_angle) - point).norm() <= tol) return v;
  return std::nullopt;
}

}  // namespace detail

/// Rotation c_n^k: vertex i maps to (i + k) mod n, represented by R(2*pi*k/n).
inline GroupElement make_rotation(int k, int n) {
  detail::require(n >= 3, ErrorCode::InvalidOrder, "make_rotation: n must be >= 3");
  detail::require(k >= 0 && k < n, ErrorCode::InvalidOrder, "make_rotation: k out of range [0, n)");
  GroupElement g;
  g.perm.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.perm[static_cast<std::size_t>(i)] = (i + k) % n;
  g.rep = rotation_matrix(2.0 * kPi * k / n);
  g.kind = Rotation{k};
  return g;
}

/// Reflection across the line at axis_angle. The axis must be one of the
/// dihedral mirrors of the canonical embedding (base_angle + k*pi/n).
inline GroupElement make_reflection(double axis_angle, int n, double base_angle) {
  detail::require(n >= 3, ErrorCode::InvalidOrder, "make_reflection: n must be >= 3");
  const double steps = (axis_angle - base_angle) / (kPi / n);
  const double k = std::round(steps);
  detail::require(std::abs(steps - k) * (kPi / n) <= kInputTol, ErrorCode::InvalidMirror,
                  "make_reflection: axis angle " + std::to_string(axis_angle) +
                      " is not a dihedral mirror of the canonical embedding");

  const MirrorLine line = MirrorLine::from_angle(axis_angle);
  GroupElement g;
  g.rep = householder(line.normal);
  g.kind = Reflection{detail::wrap_line_angle(axis_angle)};
  g.perm.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const Vec2 image = g.rep * canonical_position(j, n, base_angle);
    const auto target = detail::vertex_at(image, n, base_angle, 1e-9);
    detail::require(target.has_value(), ErrorCode::InvalidMirror,
                    "make_reflection: mirror image of a vertex is not a vertex");
    g.perm[static_cast<std::size_t>(j)] = *target;
  }
  return g;
}

/// Free or self reflection.
struct ReflectionClass {
  enum class Tag { Free, Self };
  Tag tag = Tag::Free;
  std::vector<int> fixed_vertices;

  bool is_free() const { return tag == Tag::Free; }
};

inline ReflectionClass classify(const GroupElement& g) {
  detail::require(g.is_reflection(), ErrorCode::WrongKind, "classify: element is a rotation");
  ReflectionClass c;
  for (int i = 0; i < g.order(); ++i)
    if (g(i) == i) c.fixed_vertices.push_back(i);
  c.tag = c.fixed_vertices.empty() ? ReflectionClass::Tag::Free : ReflectionClass::Tag::Self;
  return c;
}

/// a after b: perm = a.perm o b.perm, rep = a.rep * b.rep.
inline GroupElement compose(const GroupElement& a, const GroupElement& b) {
  detail::require(a.order() == b.order(), ErrorCode::Incompatible,
                  "compose: elements act on different vertex counts");
  const int n = a.order();
  GroupElement g;
  g.perm.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.perm[static_cast<std::size_t>(i)] = a(b(i));
  g.rep = a.rep * b.rep;

  const int k = g.perm[0];
  bool rotation_pattern = true;
  bool reflection_pattern = true;
  for (int i = 0; i < n; ++i) {
    rotation_pattern = rotation_pattern && g(i) == (i + k) % n;
    reflection_pattern = reflection_pattern && g(i) == detail::positive_mod(k - i, n);
  }
  const double det = g.rep.determinant();
  if (det > 0.0) {
    detail::require(rotation_pattern, ErrorCode::Incompatible,
                    "compose: result is not a dihedral rotation");
    g.kind = Rotation{k};
  } else {
    detail::require(reflection_pattern, ErrorCode::Incompatible,
                    "compose: result is not a dihedral reflection");
    g.kind = Reflection{detail::wrap_line_angle(0.5 * std::atan2(g.rep(1, 0), g.rep(0, 0)))};
  }
  return g;
}

inline GroupElement inverse(const GroupElement& g) {
  GroupElement h;
  h.perm.resize(g.perm.size());
  for (int i = 0; i < g.order(); ++i) h.perm[static_cast<std::size_t>(g(i))] = i;
  h.rep = g.rep.transpose();
  if (const auto* r = std::get_if<Rotation>(&g.kind))
    h.kind = Rotation{(g.order() - r->k) % g.order()};
  else
    h.kind = g.kind;
  return h;
}

/// The full point group C_nv: n rotations followed by n reflections.
inline std::vector<GroupElement> dihedral_group(int n, double base_angle) {
  detail::require(n >= 3, ErrorCode::InvalidOrder, "dihedral_group: n must be >= 3");
  std::vector<GroupElement> group;
  group.reserve(static_cast<std::size_t>(2 * n));
  for (int k = 0; k < n; ++k) group.push_back(make_rotation(k, n));
  for (int k = 0; k < n; ++k) group.push_back(make_reflection(base_angle + k * kPi / n, n, base_angle));
  return group;
}

}  // namespace symform
