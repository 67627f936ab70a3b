#pragma once

// Scenario files (JSON) and the analyze / predict / simulate commands.
//
// Vertex labels in files are 1-based, matching the usual agent numbering;
// everything in memory is 0-based.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "symform/analysis.hpp"
#include "symform/dynamics.hpp"
#include "symform/error.hpp"
#include "symform/laplacian.hpp"
#include "symform/symmetry.hpp"

namespace symform {

inline constexpr const char* kVersion = "0.1.0";

enum class Family { Rotational, Reflection, AnchoredReflection, Maneuver };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::Rotational: return "rotational";
    case Family::Reflection: return "reflection";
    case Family::AnchoredReflection: return "anchored-reflection";
    case Family::Maneuver: return "maneuver";
  }
  return "unknown";
}

inline bool is_anchored(Family f) { return f == Family::AnchoredReflection || f == Family::Maneuver; }

/// Uniform box sampling from a 64-bit Mersenne Twister.
struct RandomInit {
  std::uint64_t seed = 0;
  double lo = -1.0;
  double hi = 1.0;
};

struct Scenario {
  std::string name;
  int n = 0;
  Edge removed_edge;  // 0-based
  Family family = Family::Rotational;
  double base_angle = 0.0;
  std::optional<int> anchor_vertex;  // 0-based
  std::variant<Configuration, RandomInit> p0_spec;
  Configuration p0;
  std::optional<double> horizon;
  std::optional<double> dt;
  std::optional<VirtualTrajectory> maneuver;
};

/// Stream-independent: draws 53-bit mantissas directly from mt19937_64.
inline Configuration sample_configuration(int n, const RandomInit& init) {
  std::mt19937_64 rng(init.seed);
  Configuration p(2 * n);
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
    p(k) = init.lo + (init.hi - init.lo) * u;
  }
  return p;
}

namespace detail {

/// 1-based line of the first occurrence of "key" in the source text.
inline int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class ScenarioReader {
 public:
  ScenarioReader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail_at(ErrorCode code, const std::string& key, const std::string& what) const {
    const int line = line_of_key(text_, key);
    fail(code, source_ + ":" + std::to_string(line) + ": " + what);
  }

  double number(const nlohmann::json& v, const std::string& key) const {
    if (!v.is_number()) fail_at(ErrorCode::MalformedNumber, key, "field '" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail_at(ErrorCode::MalformedNumber, key, "field '" + key + "' must be finite");
    return x;
  }

  int integer(const nlohmann::json& v, const std::string& key) const {
    if (!v.is_number_integer()) fail_at(ErrorCode::MalformedNumber, key, "field '" + key + "' must be an integer");
    return v.get<int>();
  }

  const nlohmann::json& field(const nlohmann::json& obj, const std::string& key) const {
    if (!obj.contains(key)) fail_at(ErrorCode::MissingField, key, "missing required field '" + key + "'");
    return obj.at(key);
  }

  Vec2 vec2(const nlohmann::json& v, const std::string& key) const {
    if (!v.is_array() || v.size() != 2) fail_at(ErrorCode::MalformedNumber, key, "field '" + key + "' must be [x, y]");
    return {number(v[0], key), number(v[1], key)};
  }

  /// [[t, value...], ...] breakpoint list.
  template <class T>
  PiecewiseConstant<T> profile(const nlohmann::json& v, const std::string& key, int width) const {
    if (!v.is_array()) fail_at(ErrorCode::InvalidValue, key, "field '" + key + "' must be a list of breakpoints");
    std::vector<double> starts;
    std::vector<T> values;
    for (const auto& row : v) {
      if (!row.is_array() || static_cast<int>(row.size()) != 1 + width)
        fail_at(ErrorCode::InvalidValue, key, "breakpoints of '" + key + "' must have " + std::to_string(1 + width) + " entries");
      const double t = number(row[0], key);
      if (!starts.empty() && t <= starts.back())
        fail_at(ErrorCode::InvalidValue, key, "breakpoints of '" + key + "' must be strictly increasing");
      starts.push_back(t);
      if constexpr (std::is_same_v<T, Vec2>)
        values.emplace_back(number(row[1], key), number(row[2], key));
      else
        values.push_back(number(row[1], key));
    }
    return PiecewiseConstant<T>(std::move(starts), std::move(values));
  }

 private:
  const std::string& text_;
  std::string source_;
};

}  // namespace detail

inline Scenario parse_scenario_text(const std::string& text, const std::string& source = "<scenario>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    detail::fail(ErrorCode::MalformedJson, source + ":" + std::to_string(line) + ": malformed JSON");
  }
  const detail::ScenarioReader rd(text, source);
  if (!doc.is_object()) detail::fail(ErrorCode::MalformedJson, source + ":1: scenario must be a JSON object");

  Scenario s;
  s.name = doc.contains("name") && doc["name"].is_string() ? doc["name"].get<std::string>()
                                                            : std::filesystem::path(source).stem().string();
  s.n = rd.integer(rd.field(doc, "n"), "n");
  if (s.n < 3) rd.fail_at(ErrorCode::InvalidOrder, "n", "n must be at least 3");

  const auto& fam = rd.field(doc, "family");
  const std::string fam_str = fam.is_string() ? fam.get<std::string>() : "";
  if (fam_str == "rotational")
    s.family = Family::Rotational;
  else if (fam_str == "reflection")
    s.family = Family::Reflection;
  else if (fam_str == "anchored-reflection")
    s.family = Family::AnchoredReflection;
  else if (fam_str == "maneuver")
    s.family = Family::Maneuver;
  else
    rd.fail_at(ErrorCode::BadFamily, "family",
               "unknown family '" + fam_str + "' (expected rotational, reflection, anchored-reflection or maneuver)");

  const auto& edge = rd.field(doc, "removed_edge");
  if (!edge.is_array() || edge.size() != 2)
    rd.fail_at(ErrorCode::InvalidEdge, "removed_edge", "removed_edge must be a pair of vertex labels");
  s.removed_edge = {rd.integer(edge[0], "removed_edge") - 1, rd.integer(edge[1], "removed_edge") - 1};
  if (!detail::is_cycle_edge(s.removed_edge.i, s.removed_edge.j, s.n))
    rd.fail_at(ErrorCode::InvalidEdge, "removed_edge", "removed_edge is not an edge of the cycle");

  s.base_angle = doc.contains("base_angle") ? rd.number(doc["base_angle"], "base_angle") : default_base_angle(s.n);

  if (doc.contains("anchor_vertex")) {
    const int a = rd.integer(doc["anchor_vertex"], "anchor_vertex");
    if (a < 1 || a > s.n) rd.fail_at(ErrorCode::InvalidAnchor, "anchor_vertex", "anchor_vertex out of range");
    s.anchor_vertex = a - 1;
  }
  if (is_anchored(s.family) && !s.anchor_vertex)
    rd.fail_at(ErrorCode::MissingAnchor, "family", "family '" + fam_str + "' requires anchor_vertex");

  const auto& p0 = rd.field(doc, "p0");
  if (p0.is_array()) {
    if (static_cast<int>(p0.size()) != s.n)
      rd.fail_at(ErrorCode::InvalidValue, "p0", "explicit p0 must list exactly n positions");
    Configuration p(2 * s.n);
    for (int i = 0; i < s.n; ++i) p.segment<2>(2 * i) = rd.vec2(p0[static_cast<std::size_t>(i)], "p0");
    s.p0_spec = p;
    s.p0 = p;
  } else if (p0.is_object()) {
    RandomInit init;
    const auto& seed = rd.field(p0, "seed");
    if (!seed.is_number_unsigned()) rd.fail_at(ErrorCode::MalformedNumber, "seed", "seed must be a non-negative integer");
    init.seed = seed.get<std::uint64_t>();
    if (p0.contains("box")) {
      const Vec2 box = rd.vec2(p0["box"], "box");
      init.lo = box.x();
      init.hi = box.y();
      if (!(init.lo < init.hi)) rd.fail_at(ErrorCode::InvalidValue, "box", "box must satisfy lo < hi");
    }
    s.p0_spec = init;
    s.p0 = sample_configuration(s.n, init);
  } else {
    rd.fail_at(ErrorCode::InvalidValue, "p0", "p0 must be a list of positions or {seed, box}");
  }

  if (doc.contains("horizon")) {
    s.horizon = rd.number(doc["horizon"], "horizon");
    if (*s.horizon <= 0.0) rd.fail_at(ErrorCode::InvalidValue, "horizon", "horizon must be positive");
  }
  if (doc.contains("dt")) {
    s.dt = rd.number(doc["dt"], "dt");
    if (*s.dt <= 0.0) rd.fail_at(ErrorCode::InvalidValue, "dt", "dt must be positive");
  }

  if (s.family == Family::Maneuver) {
    const auto& m = rd.field(doc, "maneuver");
    if (!m.is_object()) rd.fail_at(ErrorCode::InvalidValue, "maneuver", "maneuver must be an object");
    VirtualTrajectory chi;
    if (m.contains("r0")) chi.state.r = rd.vec2(m["r0"], "r0");
    if (m.contains("theta0")) chi.state.theta = rd.number(m["theta0"], "theta0");
    if (m.contains("s0")) chi.state.s = rd.number(m["s0"], "s0");
    if (chi.state.s <= 0.0) rd.fail_at(ErrorCode::InvalidScale, "s0", "s0 must be positive");
    if (m.contains("v")) chi.inputs.v = rd.profile<Vec2>(m["v"], "v", 2);
    if (m.contains("omega")) chi.inputs.omega = rd.profile<double>(m["omega"], "omega", 1);
    if (m.contains("alpha")) chi.inputs.alpha = rd.profile<double>(m["alpha"], "alpha", 1);
    s.maneuver = chi;
  }
  return s;
}

inline Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) detail::fail(ErrorCode::IoError, path.string() + ":0: cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string());
}

inline InteractionGraph build_graph(const Scenario& s) {
  InteractionGraph g = spanning_tree(s.n, s.removed_edge);
  g = assign_edges(std::move(g), s.family == Family::Rotational ? EdgeFamily::Rotational : EdgeFamily::Reflectional,
                   s.base_angle);
  if (s.anchor_vertex && s.family != Family::Rotational) g = with_anchor(std::move(g), *s.anchor_vertex, s.base_angle);
  return g;
}

/// The static Laplacian governing the scenario (the moving-frame one for maneuvers).
inline BlockMatrix scenario_laplacian(const Scenario& s, const InteractionGraph& g) {
  return is_anchored(s.family) ? augmented_laplacian(g) : laplacian(g);
}

namespace detail {

inline nlohmann::json to_json(const Vec2& v) { return nlohmann::json::array({v.x(), v.y()}); }

inline nlohmann::json to_json(const Mat2& m) { return nlohmann::json::array({m(0, 0), m(0, 1), m(1, 0), m(1, 1)}); }

inline nlohmann::json positions_json(const Configuration& p) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.size() / 2; ++i) out.push_back(to_json(Vec2(p.segment<2>(2 * i))));
  return out;
}

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

/// Spectral summary, chained transforms and (when anchored) mirror lines and V0.
inline nlohmann::json cmd_analyze(const Scenario& s) {
  const InteractionGraph g = build_graph(s);
  const BlockMatrix q = scenario_laplacian(s, g);
  const Spectrum spec = eigendecompose(q);

  nlohmann::json out;
  out["version"] = kVersion;
  out["scenario"] = s.name;
  out["family"] = to_string(s.family);
  out["n"] = s.n;
  auto edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({e.i + 1, e.j + 1});
  out["edges"] = edges;
  out["null_dim"] = spec.null_dim;
  out["gap_ratio"] = std::isfinite(spec.gap_ratio) ? nlohmann::json(spec.gap_ratio) : nlohmann::json(nullptr);
  out["eigenvalues"] = std::vector<double>(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.eigenvalues.size());
  out["convergence_rate"] = convergence_rate(spec);

  const int root = s.anchor_vertex.value_or(0);
  const ChainedTransforms chain = chain_transforms(g, root);
  out["chain_root"] = root + 1;
  auto transforms = nlohmann::json::array();
  for (const Mat2& m : chain.S) transforms.push_back(detail::to_json(m));
  out["chained_transforms"] = transforms;

  if (g.anchor) {
    out["anchor_vertex"] = g.anchor->vertex + 1;
    const auto lines = propagate_mirrors(g, g.anchor->vertex, g.anchor->mirror);
    auto angles = nlohmann::json::array();
    for (const auto& l : lines) angles.push_back(l.angle());
    out["mirror_angles"] = angles;
    const Eigen::VectorXd v0 = build_v0(chain, g.anchor->mirror.direction);
    out["v0"] = std::vector<double>(v0.data(), v0.data() + v0.size());
    out["v0_norm_sq"] = v0.squaredNorm();
  }
  return out;
}

/// Closed-form limit of the flow. Maneuvers report the moving-frame limit.
inline nlohmann::json cmd_predict(const Scenario& s) {
  const InteractionGraph g = build_graph(s);
  nlohmann::json out;
  out["version"] = kVersion;
  out["scenario"] = s.name;
  out["family"] = to_string(s.family);
  if (g.anchor) {
    const ChainedTransforms chain = chain_transforms(g, g.anchor->vertex);
    const Eigen::VectorXd v0 = build_v0(chain, g.anchor->mirror.direction);
    const Configuration start = s.maneuver ? moving_frame(s.p0, s.maneuver->state) : s.p0;
    out["method"] = "v0-projection";
    out["frame"] = s.maneuver ? "moving" : "inertial";
    out["steady_state"] = detail::positions_json(predict_steady_state(start, v0, s.n));
  } else {
    const Spectrum spec = eigendecompose(laplacian(g));
    out["method"] = "null-space-projection";
    out["frame"] = "inertial";
    out["steady_state"] = detail::positions_json(project_onto(spec.null_basis(), s.p0));
  }
  return out;
}

struct SimulateOptions {
  std::optional<double> dt;
  std::optional<double> horizon;
};

/// Runs the scenario, writes trajectory.csv, residuals.csv (virtual.csv for
/// maneuvers) and summary.json under out_dir/<name>/. Returns the summary.
inline nlohmann::json cmd_simulate(const Scenario& s, const std::filesystem::path& out_dir,
                                   const SimulateOptions& opts = {}) {
  const InteractionGraph g = build_graph(s);
  const std::vector<GroupElement> group = dihedral_group(s.n, s.base_angle);

  IntegrationOptions io;
  io.dt = opts.dt ? opts.dt : s.dt;
  io.horizon = opts.horizon ? opts.horizon : s.horizon;
  ControlLaw law = s.maneuver ? ControlLaw(ManeuverLaw{g, *s.maneuver}) : ControlLaw(StaticLaw{scenario_laplacian(s, g), g});
  const SimulationResult res = integrate(law, s.p0, io, group);

  const std::filesystem::path dir = out_dir / s.name;
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "trajectory.csv");
    f << "t";
    for (int i = 1; i <= s.n; ++i) f << ",p" << i << "x,p" << i << "y";
    f << "\n";
    for (std::size_t k = 0; k < res.times.size(); ++k) {
      f << detail::fmt17(res.times[k]);
      for (Eigen::Index c = 0; c < res.states[k].size(); ++c) f << "," << detail::fmt17(res.states[k](c));
      f << "\n";
    }
  }
  {
    std::ofstream f(dir / "residuals.csv");
    f << "t,edge_residual,anchor_residual,full_group_residual\n";
    for (std::size_t k = 0; k < res.times.size(); ++k) {
      const auto& r = res.residual_series[k];
      f << detail::fmt17(res.times[k]) << "," << detail::fmt17(r.edge_residual) << ","
        << detail::fmt17(r.anchor_residual) << "," << detail::fmt17(r.full_group_residual) << "\n";
    }
  }
  if (res.virtual_series) {
    std::ofstream f(dir / "virtual.csv");
    f << "t,rx,ry,theta,s\n";
    for (const auto& v : *res.virtual_series)
      f << detail::fmt17(v.t) << "," << detail::fmt17(v.r.x()) << "," << detail::fmt17(v.r.y()) << ","
        << detail::fmt17(v.theta) << "," << detail::fmt17(v.s) << "\n";
  }

  const Configuration& final_state = res.states.back();
  const ResidualReport& fin = res.residual_series.back();
  nlohmann::json summary;
  summary["version"] = kVersion;
  summary["scenario"] = s.name;
  summary["family"] = to_string(s.family);
  summary["n"] = s.n;
  summary["dt"] = res.dt;
  summary["horizon"] = res.horizon;
  summary["samples"] = res.times.size();
  summary["residual_frame"] = s.maneuver ? "moving" : "inertial";
  summary["terminal"] = {{"edge_residual", fin.edge_residual},
                         {"anchor_residual", fin.anchor_residual},
                         {"full_group_residual", fin.full_group_residual}};
  summary["final_state"] = detail::positions_json(final_state);
  if (g.anchor) {
    const ChainedTransforms chain = chain_transforms(g, g.anchor->vertex);
    const Eigen::VectorXd v0 = build_v0(chain, g.anchor->mirror.direction);
    if (s.maneuver) {
      const VirtualState end = res.virtual_series->back();
      const Configuration zeta = moving_frame(final_state, end);
      const Configuration predicted = predict_steady_state(moving_frame(s.p0, s.maneuver->state), v0, s.n);
      summary["steady_state_gap"] = (zeta - predicted).norm();
      summary["final_moving_frame"] = detail::positions_json(zeta);
      summary["reconstruction_error"] = (from_moving_frame(zeta, end) - final_state).cwiseAbs().maxCoeff();
    } else {
      summary["steady_state_gap"] = (final_state - predict_steady_state(s.p0, v0, s.n)).norm();
    }
  } else {
    const Spectrum spec = eigendecompose(laplacian(g));
    summary["steady_state_gap"] = (final_state - project_onto(spec.null_basis(), s.p0)).norm();
  }
  std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
  return summary;
}

}  // namespace symform
