#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "magheat/discretize.hpp"
#include "magheat/field.hpp"
#include "magheat/krylov.hpp"

namespace magheat {

struct SpectralOptions {
  /// Residual tolerance for each eigenpair.
  double eig_tol = 1e-8;
  EigenOptions eigen;
  /// Throw ResolutionError for s above resolution_limit instead of flagging.
  bool strict_resolution = false;
  /// Compare each sample against the lowest L_HO eigenvalue on the same grid.
  bool check_floor = true;
  /// Parallel eigensolves over s.
  int workers = 1;
};

/// One point of the lambda(s) curve.
struct SpectralSample {
  double s = 0.0;
  double lambda = 0.0;
  /// ||L v - lambda v|| for the unit eigenvector.
  double residual = 0.0;
  int iterations = 0;
  Grid2D grid;
  /// False when s exceeds resolution_limit(grid, field).
  bool resolved = true;
  /// Lowest L_HO eigenvalue on the same grid (NaN when not computed).
  double ho_floor = 0.0;
  /// Squared-norm fraction of the eigenvector outside |y| > 12.
  double outer_mass = 0.0;
};

/// Lowest eigenvalue of the harmonic oscillator L_HO on `grid`.
SpectralSample harmonic_ground_state(const Grid2D& grid, const SpectralOptions& options = {});

/// Lowest eigenvalue of L_s for each s. Two pairs are requested when the flux
/// is within 1e-6 of a half-integer, where the limit level is doubly
/// degenerate. Throws NumericError if a sample falls below the L_HO floor.
std::vector<SpectralSample> lambda_curve(const MagneticField& field,
                                         std::span<const double> s_values,
                                         const Grid2D& grid,
                                         const SpectralOptions& options = {});

/// Columns s, lambda, residual, iterations, N, R_dom.
void write_lambda_csv(std::ostream& os, std::span<const SpectralSample> samples);

struct LimitEstimate {
  /// Intercept of the least-squares line lambda = a + b e^{-s/2} through the
  /// last three samples.
  double extrapolated = 0.0;
  double last_sample = 0.0;
  double slope = 0.0;
};

LimitEstimate lambda_limit_estimate(std::span<const SpectralSample> samples);

struct VariationalQuadrature {
  double r_max = 25.0;
  /// Trapezoid nodes in theta (only used for non-radial fields).
  int theta_points = 64;
  double abs_tol = 1e-10;
};

/// Rayleigh quotient of L_s at the trial function
///   psi_n = e^{-r^2/8} eta_n(r) exp(i chi(theta)),
///   chi(theta) = int_0^theta alpha_inf - (flux - m) theta,  m = round(flux),
/// with the logarithmic cutoff eta_n = 0, log(n^2 r)/log n, 1 on
/// [0, 1/n^2], [1/n^2, 1/n], [1/n, inf). An upper bound for the continuum lambda(s).
double variational_upper_bound(const MagneticField& field, double s, int n,
                               const VariationalQuadrature& quad = {});

struct HardyEstimate {
  /// Smallest value of <psi, H_B psi> / <psi, (1 + |x|^2)^{-1} psi> on the grid.
  double c_est = 0.0;
  double R_dom = 0.0;
  int N = 0;
  double h = 0.0;
  int matvecs = 0;
};

HardyEstimate hardy_constant(const MagneticField& field, double R_dom, int N,
                             const SpectralOptions& options = {});

/// max(0, min_s lambda(s) - 1/2) over a grid starting at s = 0 with spacing <= 0.5.
double c_B_estimate(const MagneticField& field, std::span<const double> s_grid,
                    const Grid2D& grid, const SpectralOptions& options = {});
double c_B_from_samples(std::span<const SpectralSample> samples);

} // namespace magheat
