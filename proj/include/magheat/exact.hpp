#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <vector>

#include "magheat/field.hpp"

namespace magheat {

/// Generalized Laguerre polynomial L_n^mu(x) by the three-term recurrence.
double laguerre(int n, double mu, double x);

struct ABLevel {
  double value = 0.0;
  int n = 0;
  int m = 0;
  /// Number of (n, m) labels sharing this value.
  int multiplicity = 1;
};

/// Lowest part of the Aharonov-Bohm oscillator spectrum
/// { n + (1 + |m + flux|) / 2 : n >= 0, m in Z }, one entry per label.
struct ABSpectrum {
  double flux = 0.0;
  std::vector<ABLevel> levels;

  double lowest() const { return levels.front().value; }
};

ABSpectrum ab_spectrum(double flux, int count);

/// Spectrum table with columns value, n, m, multiplicity.
void write_spectrum_csv(std::ostream& os, const ABSpectrum& spectrum);

/// Eigenfunction phi_m of K = i d/dtheta + alpha_inf with eigenvalue m + flux:
/// phi_m(theta) = (2 pi)^{-1/2} exp(-i [(m + flux) theta - int_0^theta alpha_inf]).
class AngularMode {
public:
  /// Aharonov-Bohm case: alpha_inf is the constant flux.
  AngularMode(int m, double flux);
  /// General field: alpha_inf taken from the field.
  AngularMode(int m, const MagneticField& field);

  int m() const { return m_; }
  double flux() const { return flux_; }
  double k_eigenvalue() const { return m_ + flux_; }
  double alpha_inf(double theta) const;
  /// int_0^theta alpha_inf.
  double alpha_inf_integral(double theta) const;
  std::complex<double> operator()(double theta) const;

private:
  int m_;
  double flux_;
  std::optional<MagneticField> field_;
};

/// Radial factor r^nu e^{-r^2/8} L_n^nu(r^2/4) with nu = |m + flux|.
double ab_radial(int n, int m, double flux, double r);

/// Unnormalized eigenfunction r^nu e^{-r^2/8} L_n^nu(r^2/4) phi_m(theta).
std::complex<double> ab_eigenfunction(int n, int m, double flux, double r, double theta);
std::complex<double> ab_eigenfunction(int n, const AngularMode& mode, double r, double theta);

/// Free heat kernel (4 pi t)^{-1} exp(-|x - x'|^2 / (4 t)).
double free_heat_kernel(Vec2 x, Vec2 xp, double t);

/// Exact solution of u_t = Delta u with u(0) = exp(-|x|^2 / (2 width^2)).
double free_gaussian_solution(Vec2 x, double t, double width);
/// ||u(t)|| in L^2 for the same data: sqrt(pi) width^2 / sqrt(width^2 + 2t).
/// Requires 0 < width < 2 so that u(0) lies in L^2(K).
double free_gaussian_norm(double t, double width);
/// ||u(0)||_K with K = e^{|x|^2/4}.
double free_gaussian_k_norm(double width);

} // namespace magheat
