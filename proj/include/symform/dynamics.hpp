#pragma once

// Closed-loop simulation of the symmetry-forcing gradient flows: static
// Laplacian laws (rotational, free reflection, anchored) and the maneuvering
// law that tracks a virtual trajectory (translation r, rotation theta, scale s).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "symform/analysis.hpp"
#include "symform/error.hpp"
#include "symform/laplacian.hpp"
#include "symform/piecewise.hpp"
#include "symform/symmetry.hpp"

namespace symform {

inline Vec2 agent(const Configuration& p, int i) { return p.segment<2>(2 * i); }

/// 1_n (x) x.
inline Configuration stack(int n, const Vec2& x) {
  Configuration out(2 * n);
  for (int i = 0; i < n; ++i) out.segment<2>(2 * i) = x;
  return out;
}

struct InputProfile {
  PiecewiseConstant<Vec2> v;        // translational velocity
  PiecewiseConstant<double> omega;  // angular rate
  PiecewiseConstant<double> alpha;  // scaling rate

  /// Sorted union of all breakpoints.
  std::vector<double> breakpoints() const {
    std::vector<double> out = v.breakpoints();
    out.insert(out.end(), omega.breakpoints().begin(), omega.breakpoints().end());
    out.insert(out.end(), alpha.breakpoints().begin(), alpha.breakpoints().end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

/// Inputs frozen over one integration step.
struct ManeuverInputs {
  Vec2 v = Vec2::Zero();
  double omega = 0.0;
  double alpha = 0.0;
};

inline ManeuverInputs inputs_at(const InputProfile& profile, double t) {
  return {profile.v.at(t), profile.omega.at(t), profile.alpha.at(t)};
}

struct VirtualState {
  double t = 0.0;
  Vec2 r = Vec2::Zero();
  double theta = 0.0;
  double s = 1.0;

  Mat2 rotation() const { return rotation_matrix(theta); }
};

struct VirtualTrajectory {
  VirtualState state;
  InputProfile inputs;
};

/// Exact virtual state at time t (>= start.t) under piecewise-constant inputs.
inline VirtualState virtual_state_at(const VirtualState& start, const InputProfile& inputs, double t) {
  VirtualState out;
  out.t = t;
  out.r = start.r + inputs.v.integral(start.t, t);
  out.theta = start.theta + inputs.omega.integral(start.t, t);
  out.s = start.s * std::exp(inputs.alpha.integral(start.t, t));
  return out;
}

/// r += v dt, theta += omega dt, s *= exp(alpha dt); exact across breakpoints.
inline VirtualTrajectory step_virtual(const VirtualTrajectory& chi, double dt) {
  detail::require(dt > 0.0, ErrorCode::InvalidValue, "step_virtual: dt must be positive");
  return {virtual_state_at(chi.state, chi.inputs, chi.state.t + dt), chi.inputs};
}

/// zeta_i = (1/s) R(theta)^T (p_i - r).
inline Configuration moving_frame(const Configuration& p, const VirtualState& chi) {
  detail::require(chi.s > 0.0, ErrorCode::InvalidScale, "moving_frame: scale must be positive");
  const Mat2 rt = chi.rotation().transpose();
  Configuration zeta(p.size());
  for (Eigen::Index i = 0; i < p.size() / 2; ++i) zeta.segment<2>(2 * i) = rt * (p.segment<2>(2 * i) - chi.r) / chi.s;
  return zeta;
}

/// p_i = s R(theta) zeta_i + r.
inline Configuration from_moving_frame(const Configuration& zeta, const VirtualState& chi) {
  detail::require(chi.s > 0.0, ErrorCode::InvalidScale, "from_moving_frame: scale must be positive");
  const Mat2 r = chi.rotation();
  Configuration p(zeta.size());
  for (Eigen::Index i = 0; i < zeta.size() / 2; ++i) p.segment<2>(2 * i) = chi.s * (r * zeta.segment<2>(2 * i)) + chi.r;
  return p;
}

/// F = 1/2 sum_edges |p_i - tau_ij^T p_j|^2 + 1/4 |(I - tau_l) p_l|^2, with
/// every representation conjugated by R(frame_angle).
inline double potential_value(const Configuration& p, const InteractionGraph& g, double frame_angle = 0.0) {
  detail::require_assigned(g, "potential_value");
  detail::require(p.size() == 2 * g.n, ErrorCode::ShapeError, "potential_value: dimension mismatch");
  const Mat2 r = rotation_matrix(frame_angle);
  double f = 0.0;
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto [i, j] = g.edges[k];
    const Mat2 t = r * g.edge_elems[k].rep * r.transpose();
    f += 0.5 * (agent(p, i) - t.transpose() * agent(p, j)).squaredNorm();
  }
  if (g.anchor) {
    const Mat2 t = r * g.anchor->element.rep * r.transpose();
    const int l = g.anchor->vertex;
    f += 0.25 * (agent(p, l) - t * agent(p, l)).squaredNorm();
  }
  return f;
}

/// u = -Q p.
inline Configuration control_static(const Configuration& p, const BlockMatrix& q) {
  detail::require(q.dense().cols() == p.size(), ErrorCode::ShapeError, "control_static: dimension mismatch");
  return -(q.dense() * p);
}

/// Q(theta) c evaluated edge by edge, without forming the dense matrix.
inline Configuration apply_rotated_laplacian(const InteractionGraph& g, double theta, const Configuration& c) {
  const Mat2 r = rotation_matrix(theta);
  Configuration out = Configuration::Zero(c.size());
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto [i, j] = g.edges[k];
    const Mat2 t = r * g.edge_elems[k].rep * r.transpose();
    const Vec2 ci = agent(c, i);
    const Vec2 cj = agent(c, j);
    out.segment<2>(2 * i) += ci - t.transpose() * cj;
    out.segment<2>(2 * j) += cj - t * ci;
  }
  const int l = g.anchor->vertex;
  out.segment<2>(2 * l) += r * (Mat2::Identity() - g.anchor->element.rep) * r.transpose() * agent(c, l);
  return out;
}

/// u = -Q(theta) c + 1 (x) v + (I (x) Omega + alpha) c with c = p - 1 (x) r.
inline Configuration control_maneuver(const Configuration& p, const VirtualState& chi, const ManeuverInputs& in,
                                      const InteractionGraph& g) {
  detail::require_assigned(g, "control_maneuver");
  detail::require(g.anchor.has_value(), ErrorCode::InvalidAnchor, "control_maneuver: graph has no anchor");
  detail::require(chi.s > 0.0, ErrorCode::InvalidScale, "control_maneuver: scale must be positive");
  detail::require(p.size() == 2 * g.n, ErrorCode::ShapeError, "control_maneuver: dimension mismatch");
  const Configuration c = p - stack(g.n, chi.r);
  Mat2 omega_alpha;
  omega_alpha << in.alpha, -in.omega, in.omega, in.alpha;
  Configuration u = -apply_rotated_laplacian(g, chi.theta, c);
  for (int i = 0; i < g.n; ++i) u.segment<2>(2 * i) += in.v + omega_alpha * agent(c, i);
  return u;
}

/// Inputs looked up at time t; chi is taken as the reference state at t.
inline Configuration control_maneuver(const Configuration& p, const VirtualTrajectory& chi, const InteractionGraph& g,
                                      double t) {
  return control_maneuver(p, chi.state, inputs_at(chi.inputs, t), g);
}

/// V exp(-Lambda t) V^T p0.
inline Configuration exact_flow(const Spectrum& s, const Configuration& p0, double t) {
  const Eigen::VectorXd decay = (-s.eigenvalues.array() * t).exp();
  return s.eigenvectors * decay.asDiagonal() * (s.eigenvectors.transpose() * p0);
}

struct StaticLaw {
  BlockMatrix q;
  InteractionGraph graph;
};

struct ManeuverLaw {
  InteractionGraph graph;
  VirtualTrajectory start;
};

using ControlLaw = std::variant<StaticLaw, ManeuverLaw>;

struct IntegrationOptions {
  std::optional<double> horizon;  // default: 30 / smallest positive eigenvalue
  std::optional<double> dt;       // default: 0.5 / largest eigenvalue
  std::size_t max_samples = 2000;
};

/// For maneuvers, residuals are evaluated on the moving-frame state zeta.
struct SimulationResult {
  std::vector<double> times;
  std::vector<Configuration> states;
  std::vector<ResidualReport> residual_series;
  std::optional<std::vector<VirtualState>> virtual_series;
  double dt = 0.0;
  double horizon = 0.0;
};

struct StepDefaults {
  double dt = 0.0;
  double horizon = 0.0;
  double lambda_max = 0.0;
  double rate = 0.0;
};

inline StepDefaults step_defaults(const Spectrum& s) {
  StepDefaults d;
  d.lambda_max = s.eigenvalues(s.eigenvalues.size() - 1);
  d.rate = convergence_rate(s);
  d.dt = 0.5 / d.lambda_max;
  d.horizon = 30.0 / d.rate;
  return d;
}

namespace detail {

template <class Rhs>
Configuration rk4_step(const Rhs& f, const Configuration& x, double t, double h) {
  const Configuration k1 = f(x, t);
  const Configuration k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
  const Configuration k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
  const Configuration k4 = f(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Uniform grid k*dt on [0, T] with extra nodes at the given breakpoints.
inline std::vector<double> step_grid(double horizon, double dt, const std::vector<double>& extra) {
  std::vector<double> grid;
  const auto steps = static_cast<long long>(std::ceil(horizon / dt - 1e-9));
  for (long long k = 0; k < steps; ++k) grid.push_back(static_cast<double>(k) * dt);
  grid.push_back(horizon);
  for (double b : extra)
    if (b > 0.0 && b < horizon) grid.push_back(b);
  std::sort(grid.begin(), grid.end());
  std::vector<double> out;
  for (double t : grid)
    if (out.empty() || t - out.back() > 1e-12 * std::max(1.0, horizon)) out.push_back(t);
  if (out.back() != horizon) out.back() = horizon;
  return out;
}

}  // namespace detail

/// Classical fixed-step RK4. Steps are split at input breakpoints for
/// maneuvers; stored samples are decimated to at most opts.max_samples.
inline SimulationResult integrate(const ControlLaw& law, const Configuration& p0, const IntegrationOptions& opts,
                                  std::span<const GroupElement> full_group) {
  const InteractionGraph& graph =
      std::visit([](const auto& l) -> const InteractionGraph& { return l.graph; }, law);
  detail::require(p0.size() == 2 * graph.n, ErrorCode::ShapeError, "integrate: initial state has wrong length");
  const auto* maneuver = std::get_if<ManeuverLaw>(&law);
  detail::require(!maneuver || maneuver->start.state.t == 0.0, ErrorCode::InvalidValue,
                  "integrate: virtual trajectory must start at t = 0");
  const BlockMatrix q = maneuver ? augmented_laplacian(graph) : std::get<StaticLaw>(law).q;

  double dt = opts.dt.value_or(0.0);
  double horizon = opts.horizon.value_or(0.0);
  if (!opts.dt || !opts.horizon || !maneuver) {
    const Spectrum spec = eigendecompose(q);
    const double lambda_max = spec.eigenvalues(spec.eigenvalues.size() - 1);
    if (!opts.dt || !opts.horizon) {
      const StepDefaults d = step_defaults(spec);
      if (!opts.dt) dt = d.dt;
      if (!opts.horizon) horizon = d.horizon;
    }
    if (!maneuver)
      detail::require(dt * lambda_max < 2.0, ErrorCode::UnstableStep,
                      "integrate: dt = " + std::to_string(dt) + " exceeds the stability limit 2/lambda_max = " +
                          std::to_string(2.0 / lambda_max));
  }
  detail::require(dt > 0.0, ErrorCode::InvalidValue, "integrate: dt must be positive");
  detail::require(horizon >= dt, ErrorCode::InvalidValue, "integrate: horizon must be at least dt");

  const std::vector<double> grid =
      detail::step_grid(horizon, dt, maneuver ? maneuver->start.inputs.breakpoints() : std::vector<double>{});
  const std::size_t steps = grid.size() - 1;
  const std::size_t keep = std::max<std::size_t>(opts.max_samples, 2);
  const std::size_t stride = std::max<std::size_t>(1, (steps + keep - 2) / (keep - 1));

  SimulationResult out;
  out.dt = dt;
  out.horizon = horizon;
  if (maneuver) out.virtual_series.emplace();

  auto record = [&](double t, const Configuration& p) {
    out.times.push_back(t);
    out.states.push_back(p);
    if (maneuver) {
      const VirtualState chi = virtual_state_at(maneuver->start.state, maneuver->start.inputs, t);
      out.virtual_series->push_back(chi);
      out.residual_series.push_back(residuals(moving_frame(p, chi), graph, full_group));
    } else {
      out.residual_series.push_back(residuals(p, graph, full_group));
    }
  };

  Configuration p = p0;
  record(grid[0], p);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = grid[k];
    const double h = grid[k + 1] - t;
    if (maneuver) {
      const ManeuverInputs in = inputs_at(maneuver->start.inputs, t + 0.5 * h);
      const auto rhs = [&](const Configuration& x, double tau) {
        return control_maneuver(x, virtual_state_at(maneuver->start.state, maneuver->start.inputs, tau), in, graph);
      };
      p = detail::rk4_step(rhs, p, t, h);
    } else {
      const auto rhs = [&](const Configuration& x, double) { return control_static(x, q); };
      p = detail::rk4_step(rhs, p, t, h);
    }
    if (!p.allFinite())
      detail::fail(ErrorCode::Divergence, "integrate: state became non-finite at t = " + std::to_string(grid[k + 1]));
    if ((k + 1) % stride == 0 || k + 1 == steps) record(grid[k + 1], p);
  }
  return out;
}

}  // namespace symform
