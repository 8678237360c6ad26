#include "magheat/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>

#include "magheat/error.hpp"

namespace magheat {

std::string to_string(Frame frame) {
  return frame == Frame::Physical ? "physical" : "self-similar";
}

Frame parse_frame(const std::string& name) {
  if (name == "physical") return Frame::Physical;
  if (name == "self-similar") return Frame::SelfSimilar;
  throw ConfigError("unknown frame '" + name + "'");
}

double StateVector::l2_norm() const { return grid.h * values.norm(); }

double boundary_mass(const StateVector& state) {
  const Grid2D& g = state.grid;
  const double total = state.values.squaredNorm();
  if (total == 0.0) return 0.0;
  double ring = 0.0;
  for (int i = 0; i < g.N; ++i) {
    ring += std::norm(state.values[g.index(i, 0)]) + std::norm(state.values[g.index(i, g.N - 1)]);
    if (i > 0 && i + 1 < g.N)
      ring += std::norm(state.values[g.index(0, i)]) + std::norm(state.values[g.index(g.N - 1, i)]);
  }
  return ring / total;
}

double weighted_norm(const StateVector& state, bool* boundary_growing) {
  const Grid2D& g = state.grid;
  // log of |f|^2 K at every node, then log-sum-exp.
  std::vector<double> logs;
  logs.reserve(std::size_t(g.size()));
  double peak = -std::numeric_limits<double>::infinity();
  double ring_outer = -std::numeric_limits<double>::infinity();
  double ring_inner = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.N; ++j)
    for (int i = 0; i < g.N; ++i) {
      const double a = std::norm(state.values[g.index(i, j)]);
      Vec2 x = g.node(i, j);
      const double r2 = x[0] * x[0] + x[1] * x[1];
      // A k-weighted state already carries K^{1/2}.
      const double lw = state.k_weighted ? 0.0 : r2 / 4.0;
      const double l = a > 0.0 ? std::log(a) + lw : -std::numeric_limits<double>::infinity();
      logs.push_back(l);
      peak = std::max(peak, l);
      const int ring = std::min({i, j, g.N - 1 - i, g.N - 1 - j});
      if (ring == 0) ring_outer = std::max(ring_outer, l);
      if (ring == 1) ring_inner = std::max(ring_inner, l);
    }
  if (boundary_growing) *boundary_growing = ring_outer > ring_inner;
  if (!std::isfinite(peak)) return 0.0;
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - peak);
  return g.h * std::exp(0.5 * (peak + std::log(sum)));
}

StateVector make_state(const Grid2D& grid, const std::function<cplx(Vec2)>& f, Frame frame,
                       double time) {
  StateVector out{grid, CVector(grid.size()), time, frame, false};
  for (int j = 0; j < grid.N; ++j)
    for (int i = 0; i < grid.N; ++i) out.values[grid.index(i, j)] = f(grid.node(i, j));
  if (!out.values.allFinite()) throw ConfigError("initial data is not finite");
  return out;
}

StateVector gaussian_state(const Grid2D& grid, double width, Vec2 center, Frame frame) {
  if (!(width > 0.0)) throw ConfigError("gaussian width must be > 0");
  return make_state(
      grid,
      [&](Vec2 x) {
        const double dx = x[0] - center[0], dy = x[1] - center[1];
        return cplx(std::exp(-(dx * dx + dy * dy) / (2.0 * width * width)));
      },
      frame);
}

StateVector odd_state(const Grid2D& grid, double width, Frame frame) {
  if (!(width > 0.0)) throw ConfigError("odd profile width must be > 0");
  return make_state(
      grid,
      [&](Vec2 x) {
        return cplx(x[0] * std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2.0 * width * width)));
      },
      frame);
}

namespace {

StateVector reweight(const StateVector& state, double sign) {
  if (state.frame != Frame::SelfSimilar)
    throw ConfigError("K-weighting applies to self-similar states only");
  StateVector out = state;
  for (int j = 0; j < state.grid.N; ++j)
    for (int i = 0; i < state.grid.N; ++i) {
      Vec2 y = state.grid.node(i, j);
      out.values[state.grid.index(i, j)] *= std::exp(sign * (y[0] * y[0] + y[1] * y[1]) / 8.0);
    }
  out.k_weighted = sign > 0.0;
  return out;
}

} // namespace

StateVector to_k_weighted(const StateVector& state) {
  return state.k_weighted ? state : reweight(state, 1.0);
}

StateVector from_k_weighted(const StateVector& state) {
  return state.k_weighted ? reweight(state, -1.0) : state;
}

StateVector cn_step(const LinearMap& op, const StateVector& v, double dt, double rtol,
                    CNStats* stats) {
  if (!(dt > 0.0)) throw ConfigError("cn_step: dt must be > 0");
  if (op.dim != v.values.size()) throw ConfigError("cn_step: dimension mismatch");
  const double half = 0.5 * dt;
  CVector lv(op.dim);
  op.apply(v.values, lv);
  const CVector rhs = v.values - half * lv;
  LinearMap lhs{op.dim, [&](const CVector& x, CVector& y) {
                  op.apply(x, y);
                  y = x + half * y;
                }};
  StateVector out = v;
  out.time = v.time + dt;
  CGResult cg = conjugate_gradient(lhs, rhs, out.values, rtol, 20000);
  if (stats) {
    stats->cg_iterations += cg.iterations;
    stats->cg_residual = cg.relative_residual;
  }
  return out;
}

std::vector<double> NormTrajectory::times() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.time);
  return out;
}

std::vector<double> NormTrajectory::l2_norms() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.l2_norm);
  return out;
}

std::vector<double> NormTrajectory::k_norms() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.k_norm);
  return out;
}

void write_trajectory_csv(std::ostream& os, const NormTrajectory& traj) {
  os << "frame,time,l2_norm,k_norm,boundary_mass\n";
  char buf[200];
  const std::string frame = to_string(traj.frame);
  for (const auto& s : traj.samples) {
    if (std::isnan(s.k_norm))
      std::snprintf(buf, sizeof buf, "%s,%.6f,%.12e,,%.3e\n", frame.c_str(), s.time, s.l2_norm,
                    s.boundary_mass);
    else
      std::snprintf(buf, sizeof buf, "%s,%.6f,%.12e,%.12e,%.3e\n", frame.c_str(), s.time,
                    s.l2_norm, s.k_norm, s.boundary_mass);
    os << buf;
  }
}

namespace {

void check_run(double start, double stop, double step, const char* what) {
  if (!(step > 0.0)) throw ConfigError(std::string(what) + ": step must be > 0");
  if (!(stop > start)) throw ConfigError(std::string(what) + ": end time must exceed start");
}

int step_count(double span, double step) {
  // Tolerate round-off in span / step.
  return std::max(1, int(std::ceil(span / step - 1e-9)));
}

} // namespace

NormTrajectory evolve_physical(const MagneticField& field, const StateVector& u0, double T,
                               double dt, const EvolveOptions& options,
                               StateVector* final_state) {
  if (u0.frame != Frame::Physical) throw ConfigError("evolve_physical: u0 must be physical");
  check_run(u0.time, T, dt, "evolve_physical");
  const Grid2D& grid = u0.grid;
  const LinkPhases phases =
      field.is_zero() ? trivial_phases(grid) : peierls_phases(grid, GaugeField(field));
  const MagneticOperator H(phases, false);
  const LinearMap op = H.as_map();

  NormTrajectory traj;
  traj.frame = Frame::Physical;
  traj.initial_k_norm = weighted_norm(u0);
  traj.samples.push_back({u0.time, u0.l2_norm(), traj.initial_k_norm, boundary_mass(u0)});

  const int steps = step_count(T - u0.time, dt);
  const double h = (T - u0.time) / steps;
  StateVector u = u0;
  CNStats stats;
  for (int k = 1; k <= steps; ++k) {
    u = cn_step(op, u, h, options.cg_rtol, &stats);
    u.time = u0.time + k * h;
    const double bm = boundary_mass(u);
    if (bm > options.boundary_threshold) {
      char msg[200];
      std::snprintf(msg, sizeof msg,
                    "evolve_physical: boundary mass %.3e exceeds %.1e at t = %.4g; "
                    "enlarge R_dom",
                    bm, options.boundary_threshold, u.time);
      throw NumericError(msg);
    }
    if (k % options.record_every == 0 || k == steps)
      traj.samples.push_back({u.time, u.l2_norm(), std::numeric_limits<double>::quiet_NaN(), bm});
  }
  traj.cg_iterations = stats.cg_iterations;
  if (final_state) *final_state = std::move(u);
  return traj;
}

NormTrajectory evolve_selfsimilar(const MagneticField& field, const StateVector& v0, double S,
                                  double ds, const EvolveOptions& options,
                                  StateVector* final_state) {
  if (v0.frame != Frame::SelfSimilar)
    throw ConfigError("evolve_selfsimilar: v0 must be a self-similar state");
  check_run(v0.time, S, ds, "evolve_selfsimilar");
  const Grid2D& grid = v0.grid;
  const GaugeField gauge(field);

  StateVector v = to_k_weighted(v0);
  NormTrajectory traj;
  traj.frame = Frame::SelfSimilar;
  auto record = [&](const StateVector& state) {
    traj.samples.push_back(
        {state.time, from_k_weighted(state).l2_norm(), state.l2_norm(), boundary_mass(state)});
  };
  traj.initial_k_norm = v.l2_norm();
  record(v);

  const int steps = step_count(S - v0.time, ds);
  const double h = (S - v0.time) / steps;
  double cached_scale = -1.0;
  std::optional<MagneticOperator> op;
  CNStats stats;
  for (int k = 1; k <= steps; ++k) {
    const double s_mid = v0.time + (k - 0.5) * h;
    const double scale = std::exp(0.5 * s_mid);
    if (!op || std::abs(scale / cached_scale - 1.0) > options.phase_cache_rtol) {
      const LinkPhases phases =
          field.is_zero() ? trivial_phases(grid) : peierls_phases(grid, gauge, s_mid);
      op.emplace(phases, true);
      cached_scale = scale;
    }
    v = cn_step(op->as_map(), v, h, options.cg_rtol, &stats);
    v.time = v0.time + k * h;
    if (k % options.record_every == 0 || k == steps) record(v);
  }
  traj.cg_iterations = stats.cg_iterations;
  if (final_state) *final_state = std::move(v);
  return traj;
}

namespace {

/// Bilinear interpolation of grid values at x, with zero Dirichlet data on
/// the boundary square and outside it.
cplx sample_bilinear(const Grid2D& g, const CVector& values, Vec2 x) {
  // Boundary nodes sit at index -1 and N in interior-node numbering.
  const double fx = (x[0] + g.R_dom) / g.h - 1.0;
  const double fy = (x[1] + g.R_dom) / g.h - 1.0;
  if (!(fx > -1.0 && fx < g.N && fy > -1.0 && fy < g.N)) return 0.0;
  const int i0 = int(std::floor(fx)), j0 = int(std::floor(fy));
  const double ax = fx - i0, ay = fy - j0;
  auto at = [&](int i, int j) -> cplx {
    if (i < 0 || j < 0 || i >= g.N || j >= g.N) return 0.0;
    return values[g.index(i, j)];
  };
  return (1 - ax) * (1 - ay) * at(i0, j0) + ax * (1 - ay) * at(i0 + 1, j0) +
         (1 - ax) * ay * at(i0, j0 + 1) + ax * ay * at(i0 + 1, j0 + 1);
}

} // namespace

StateVector frame_map(const StateVector& state, Frame direction, const Grid2D& target) {
  if (state.frame == direction) throw ConfigError("frame_map: state already in target frame");
  const StateVector src = state.k_weighted ? from_k_weighted(state) : state;
  double s = 0.0;
  double new_time = 0.0;
  if (direction == Frame::SelfSimilar) {
    if (src.time <= -1.0) throw ConfigError("frame_map: t must be > -1");
    s = std::log1p(src.time);
    new_time = s;
  } else {
    s = src.time;
    new_time = std::expm1(s);
  }
  // A target node y reads the source at scale * y; the amplitude factor
  // equals the same scale in both directions.
  const double scale = direction == Frame::SelfSimilar ? std::exp(0.5 * s) : std::exp(-0.5 * s);

  // Mass of the source outside the mapped target square.
  const double reach = scale * target.R_dom;
  double outside = 0.0;
  const double total = src.values.squaredNorm();
  for (int j = 0; j < src.grid.N; ++j)
    for (int i = 0; i < src.grid.N; ++i) {
      Vec2 x = src.grid.node(i, j);
      if (std::abs(x[0]) >= reach || std::abs(x[1]) >= reach)
        outside += std::norm(src.values[src.grid.index(i, j)]);
    }
  if (total > 0.0 && outside / total > 1e-6) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "frame_map: %.2e of the squared norm lies outside the target grid", outside / total);
    throw NumericError(msg);
  }

  StateVector out{target, CVector(target.size()), new_time, direction, false};
  for (int j = 0; j < target.N; ++j)
    for (int i = 0; i < target.N; ++i) {
      Vec2 y = target.node(i, j);
      out.values[target.index(i, j)] =
          scale * sample_bilinear(src.grid, src.values, {scale * y[0], scale * y[1]});
    }
  return out;
}

Grid2D physical_grid_for(const MagneticField& field, double T, double h) {
  if (!(T > 0.0) || !(h > 0.0)) throw ConfigError("physical_grid_for: T and h must be > 0");
  const double R = 6.0 * std::sqrt(T) + field.support_radius() + 2.0;
  const int N = std::max(16, int(std::ceil(2.0 * R / h)) - 1);
  return build_grid(R, N);
}

} // namespace magheat
