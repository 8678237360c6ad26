#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "magheat/discretize.hpp"
#include "magheat/evolve.hpp"
#include "magheat/field.hpp"
#include "magheat/spectral.hpp"

namespace magheat {

struct DecayFit {
  Frame frame = Frame::Physical;
  /// gamma for the physical frame, the exponential rate for the self-similar one.
  double exponent = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  /// Root-mean-square misfit of the log-linear fit.
  double residual = 0.0;
  double exponent_stderr = 0.0;
  double intercept = 0.0;
  int samples = 0;
  /// (abscissa, misfit) pairs used in the fit.
  std::vector<std::pair<double, double>> misfits;
};

/// Least-squares slope of log ||u(t)|| against log(1 + t) over [t0, t1];
/// exponent = -slope. Requires a physical trajectory, t0 >= 1 and at least
/// 10 samples in the window.
DecayFit fit_polynomial_rate(const NormTrajectory& traj, double t0, double t1);

/// Slope of -log ||v(s)|| against s over [s0, s1] (the K-norm column).
DecayFit fit_exponential_rate(const NormTrajectory& traj, double s0, double s1);

/// Which initial datum a run started from.
enum class InitialDatum { Gaussian, ShiftedGaussian, Odd };
std::string to_string(InitialDatum datum);
InitialDatum parse_initial_datum(const std::string& name);
StateVector initial_state(InitialDatum datum, const Grid2D& grid, Frame frame);

struct TheoremConfig {
  /// Self-similar grid for the lambda curve and the self-similar runs.
  Grid2D ss_grid = build_grid(16.0, 256);
  std::vector<double> s_values;  // default: 0, 0.5, ..., S
  SpectralOptions spectral;
  double T = 50.0;
  double dt = 0.1;
  double h_physical = 0.2;
  double S = 6.0;
  double ds = 0.05;
  /// Fit windows; negative means the default [T/5, T] and [2S/3, S].
  double phys_window_start = -1.0;
  double phys_window_end = -1.0;
  double ss_window_start = -1.0;
  double ss_window_end = -1.0;
  std::vector<InitialDatum> data{InitialDatum::Gaussian, InitialDatum::ShiftedGaussian,
                                 InitialDatum::Odd};
  /// Slack in lambda for the energy and global bounds.
  double bound_tol = 1e-3;
  /// Tolerance for comparing fitted rates and lambda(6) against (1 + beta)/2.
  double rate_tol = 0.05;
  /// Tolerance for the slowest self-similar slope against (1 + beta)/2.
  double slope_tol = 0.07;
  bool run_physical = true;
  bool run_selfsimilar = true;
};

struct DatumRuns {
  InitialDatum datum = InitialDatum::Gaussian;
  NormTrajectory physical;
  NormTrajectory selfsimilar;
  DecayFit physical_fit;
  DecayFit selfsimilar_fit;
  /// max over samples of ||v(s)|| / (||v(0)|| exp(-int_0^s (lambda - tol))).
  double energy_bound_ratio = 0.0;
  /// max over samples of ||u(t)|| / (||u0||_K (1 + t)^{-(c_B + 1/2 - tol)}).
  double global_bound_ratio = 0.0;
};

struct TheoremReport {
  FieldSpec field;
  double flux = 0.0;
  double beta = 0.0;
  std::vector<SpectralSample> lambda;
  LimitEstimate limit;
  double c_B = 0.0;
  std::vector<DatumRuns> runs;
  /// Minimum physical-frame gamma over the initial data.
  double gamma = 0.0;
  std::map<std::string, bool> flags;

  bool all_pass() const;
};

/// int_0^s lambda by the trapezoid rule on the samples, linear in between;
/// constant extrapolation beyond the last sample.
double lambda_integral(std::span<const SpectralSample> samples, double s);

TheoremReport theorem_report(const MagneticField& field, const TheoremConfig& config);

nlohmann::json to_json(const DecayFit& fit);
nlohmann::json to_json(const TheoremReport& report, const TheoremConfig& config);
/// Columns run, frame, abscissa, misfit.
void write_fit_residuals_csv(std::ostream& os, const TheoremReport& report);

} // namespace magheat
