#include "magheat/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "magheat/error.hpp"
#include "magheat/quadrature.hpp"

namespace magheat {

double laguerre(int n, double mu, double x) {
  if (n < 0) throw ConfigError("laguerre: n must be >= 0");
  if (!(mu > -1.0)) throw ConfigError("laguerre: mu must be > -1");
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 1.0 + mu - x;
  for (int k = 1; k < n; ++k) {
    double next = ((2.0 * k + 1.0 + mu - x) * cur - (k + mu) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

namespace {

/// |m + flux| computed from the fractional part so that flux and flux + 1
/// produce identical tables after relabelling m.
double shifted_abs(int m, double flux) {
  const double base = std::floor(flux);
  const double frac = flux - base;
  return std::abs(double(m + static_cast<long long>(base)) + frac);
}

} // namespace

ABSpectrum ab_spectrum(double flux, int count) {
  if (count < 1) throw ConfigError("ab_spectrum: count must be >= 1");
  if (!std::isfinite(flux)) throw ConfigError("ab_spectrum: flux must be finite");
  ABSpectrum out{flux, {}};
  // The labels n = 0..count-1 at the best m already give count values below
  // this cap, so no level beyond it can be among the count smallest.
  const double beta = beta_of_flux(flux);
  const double cap = (1.0 + beta) / 2.0 + count;
  const long long base = static_cast<long long>(std::floor(flux));
  const int m_span = int(std::ceil(2.0 * cap)) + 1;
  std::vector<ABLevel> all;
  for (long long mm = -base - m_span; mm <= -base + m_span; ++mm) {
    const int m = int(mm);
    const double nu = shifted_abs(m, flux);
    if (nu > 2.0 * cap) continue;
    for (int n = 0; n + (1.0 + nu) / 2.0 <= cap; ++n)
      all.push_back({n + (1.0 + nu) / 2.0, n, m, 1});
  }
  std::sort(all.begin(), all.end(), [](const ABLevel& a, const ABLevel& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.n != b.n) return a.n < b.n;
    return a.m < b.m;
  });
  constexpr double tie = 1e-12;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].value - all[i].value <= tie) ++j;
    for (std::size_t k = i; k < j; ++k) all[k].multiplicity = int(j - i);
    i = j;
  }
  all.resize(std::min<std::size_t>(all.size(), std::size_t(count)));
  out.levels = std::move(all);
  return out;
}

void write_spectrum_csv(std::ostream& os, const ABSpectrum& spectrum) {
  os << "value,n,m,multiplicity\n";
  char buf[64];
  for (const auto& l : spectrum.levels) {
    std::snprintf(buf, sizeof buf, "%.15e", l.value);
    os << buf << ',' << l.n << ',' << l.m << ',' << l.multiplicity << '\n';
  }
}

AngularMode::AngularMode(int m, double flux) : m_(m), flux_(flux) {}

AngularMode::AngularMode(int m, const MagneticField& field)
    : m_(m), flux_(total_flux(field)) {
  if (!field.is_radial()) field_.emplace(field);
}

double AngularMode::alpha_inf(double theta) const {
  return field_ ? alpha_infinity(*field_, theta) : flux_;
}

double AngularMode::alpha_inf_integral(double theta) const {
  if (!field_) return flux_ * theta;
  const auto breaks = field_->angular_breakpoints();
  // Whole turns contribute 2 pi flux each.
  const double two_pi = 2.0 * std::numbers::pi;
  const double turns = std::floor(theta / two_pi);
  const double rest = theta - turns * two_pi;
  auto f = [this](double t) { return alpha_infinity(*field_, t); };
  return turns * two_pi * flux_ + quad::integrate_split(f, 0.0, rest, breaks, 1e-10, "alpha_inf");
}

std::complex<double> AngularMode::operator()(double theta) const {
  const double phase = -(k_eigenvalue() * theta - alpha_inf_integral(theta));
  return std::polar(1.0 / std::sqrt(2.0 * std::numbers::pi), phase);
}

double ab_radial(int n, int m, double flux, double r) {
  if (r < 0.0) throw ConfigError("ab_radial: r must be >= 0");
  const double nu = shifted_abs(m, flux);
  const double power = (r == 0.0) ? (nu == 0.0 ? 1.0 : 0.0) : std::pow(r, nu);
  return power * std::exp(-r * r / 8.0) * laguerre(n, nu, r * r / 4.0);
}

std::complex<double> ab_eigenfunction(int n, int m, double flux, double r, double theta) {
  return ab_radial(n, m, flux, r) * AngularMode(m, flux)(theta);
}

std::complex<double> ab_eigenfunction(int n, const AngularMode& mode, double r, double theta) {
  return ab_radial(n, mode.m(), mode.flux(), r) * mode(theta);
}

double free_heat_kernel(Vec2 x, Vec2 xp, double t) {
  if (!(t > 0.0)) throw ConfigError("free_heat_kernel: t must be > 0");
  const double dx = x[0] - xp[0], dy = x[1] - xp[1];
  return std::exp(-(dx * dx + dy * dy) / (4.0 * t)) / (4.0 * std::numbers::pi * t);
}

namespace {
void check_width(double width) {
  if (!(width > 0.0 && width < 2.0))
    throw ConfigError("gaussian width must lie in (0, 2) for finite K-norm");
}
} // namespace

double free_gaussian_solution(Vec2 x, double t, double width) {
  check_width(width);
  if (t < 0.0) throw ConfigError("free_gaussian_solution: t must be >= 0");
  const double w2 = width * width;
  const double spread = w2 + 2.0 * t;
  return w2 / spread * std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2.0 * spread));
}

double free_gaussian_norm(double t, double width) {
  check_width(width);
  if (t < 0.0) throw ConfigError("free_gaussian_norm: t must be >= 0");
  const double w2 = width * width;
  return std::sqrt(std::numbers::pi) * w2 / std::sqrt(w2 + 2.0 * t);
}

double free_gaussian_k_norm(double width) {
  check_width(width);
  return std::sqrt(std::numbers::pi / (1.0 / (width * width) - 0.25));
}

} // namespace magheat
