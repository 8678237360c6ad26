#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "magheat/discretize.hpp"
#include "magheat/field.hpp"
#include "magheat/krylov.hpp"

namespace magheat {

enum class Frame { Physical, SelfSimilar };

std::string to_string(Frame frame);
Frame parse_frame(const std::string& name);

/// Grid function in one of the two space-times. In the physical frame the
/// values are u(x, t); in the self-similar frame they are u~(y, s), or
/// v = K^{1/2} u~ when `k_weighted` is set.
struct StateVector {
  Grid2D grid;
  CVector values;
  double time = 0.0;
  Frame frame = Frame::Physical;
  bool k_weighted = false;

  /// Discrete L^2 norm sqrt(h^2 sum |values|^2).
  double l2_norm() const;
};

/// Fraction of the squared norm carried by the outermost ring of nodes.
double boundary_mass(const StateVector& state);

/// Discrete ||.||_K with K = e^{|x|^2/4} for the represented function (u or
/// u~), accumulated in log space. Sets `boundary_growing` when the weighted
/// density on the outer ring exceeds its value one ring inside.
double weighted_norm(const StateVector& state, bool* boundary_growing = nullptr);

StateVector make_state(const Grid2D& grid, const std::function<cplx(Vec2)>& f,
                       Frame frame = Frame::Physical, double time = 0.0);
/// exp(-|x - c|^2 / (2 width^2)).
StateVector gaussian_state(const Grid2D& grid, double width = 1.0, Vec2 center = {0.0, 0.0},
                           Frame frame = Frame::Physical);
/// x_1 exp(-|x|^2 / (2 width^2)).
StateVector odd_state(const Grid2D& grid, double width = 1.0, Frame frame = Frame::Physical);

/// Self-similar state converted between u~ and v = e^{|y|^2/8} u~.
StateVector to_k_weighted(const StateVector& state);
StateVector from_k_weighted(const StateVector& state);

struct CNStats {
  int cg_iterations = 0;
  double cg_residual = 0.0;
};

/// Crank-Nicolson step: solves (I + dt/2 L) v' = (I - dt/2 L) v by CG,
/// warm-started from v.
StateVector cn_step(const LinearMap& op, const StateVector& v, double dt,
                    double rtol = 1e-10, CNStats* stats = nullptr);

struct NormSample {
  double time = 0.0;
  double l2_norm = 0.0;
  /// NaN when not recorded.
  double k_norm = 0.0;
  double boundary_mass = 0.0;
};

struct NormTrajectory {
  Frame frame = Frame::Physical;
  std::vector<NormSample> samples;
  /// ||u_0||_K of the initial datum.
  double initial_k_norm = 0.0;
  int cg_iterations = 0;

  std::vector<double> times() const;
  std::vector<double> l2_norms() const;
  std::vector<double> k_norms() const;
};

/// Columns frame, time, l2_norm, k_norm, boundary_mass.
void write_trajectory_csv(std::ostream& os, const NormTrajectory& traj);

struct EvolveOptions {
  double cg_rtol = 1e-10;
  /// Physical runs abort once boundary_mass exceeds this.
  double boundary_threshold = 1e-8;
  /// Record every k-th step (the last step is always recorded).
  int record_every = 1;
  /// Self-similar runs reuse link phases while e^{s/2} moves by less than this.
  double phase_cache_rtol = 1e-4;
};

/// Heat flow u_t + H_B u = 0 on the grid of u0 (physical frame).
NormTrajectory evolve_physical(const MagneticField& field, const StateVector& u0, double T,
                               double dt, const EvolveOptions& options = {},
                               StateVector* final_state = nullptr);

/// v_s + L_s v = 0 from s = v0.time to S, with L evaluated at the midpoint
/// of each step. Samples record ||u~|| (= ||u(t)||) and ||v|| (= ||u~||_K).
NormTrajectory evolve_selfsimilar(const MagneticField& field, const StateVector& v0, double S,
                                  double ds, const EvolveOptions& options = {},
                                  StateVector* final_state = nullptr);

/// Change of variables u~(y, s) = e^{s/2} u(e^{s/2} y, e^s - 1) or its inverse,
/// by bilinear interpolation onto `target`. Throws NumericError when more than
/// 1e-6 of the squared norm falls outside the region the target grid covers.
StateVector frame_map(const StateVector& state, Frame direction, const Grid2D& target);

/// Square physical grid with spacing close to h and half-width
/// 6 sqrt(T) + support_radius + 2.
Grid2D physical_grid_for(const MagneticField& field, double T, double h);

} // namespace magheat
