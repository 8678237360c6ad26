#include "magheat/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include "magheat/error.hpp"
#include "magheat/quadrature.hpp"

namespace magheat {

namespace {

double outer_mass(const Grid2D& grid, const CVector& v, double radius) {
  double outside = 0.0;
  for (int j = 0; j < grid.N; ++j)
    for (int i = 0; i < grid.N; ++i) {
      Vec2 y = grid.node(i, j);
      if (y[0] * y[0] + y[1] * y[1] > radius * radius)
        outside += std::norm(v[grid.index(i, j)]);
    }
  return outside / v.squaredNorm();
}

bool near_half_integer(double flux) {
  return std::abs(beta_of_flux(flux) - 0.5) <= 1e-6;
}

SpectralSample solve_sample(const LinkPhases& phases, int k, const SpectralOptions& options,
                            CVector* warm = nullptr) {
  MagneticOperator op(phases, true);
  EigenOptions eig = options.eigen;
  if (warm && warm->size() == phases.grid.size()) eig.start = *warm;
  EigenResult r = smallest_eigs(op.as_map(), k, options.eig_tol, eig);
  if (warm) *warm = r.pairs.front().vector;
  SpectralSample out;
  out.grid = phases.grid;
  out.lambda = r.pairs.front().value;
  out.residual = r.pairs.front().residual;
  out.iterations = r.matvecs;
  out.outer_mass = outer_mass(phases.grid, r.pairs.front().vector, 12.0);
  return out;
}

template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(std::max(workers, 1), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

} // namespace

SpectralSample harmonic_ground_state(const Grid2D& grid, const SpectralOptions& options) {
  SpectralSample out = solve_sample(trivial_phases(grid), 1, options);
  out.ho_floor = out.lambda;
  return out;
}

std::vector<SpectralSample> lambda_curve(const MagneticField& field,
                                         std::span<const double> s_values,
                                         const Grid2D& grid,
                                         const SpectralOptions& options) {
  if (s_values.empty()) throw ConfigError("lambda_curve: empty s list");
  const double s_cap = resolution_limit(grid, field);
  for (double s : s_values) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("lambda_curve: s must be >= 0");
    if (options.strict_resolution && !field.is_zero() && s > s_cap) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "lambda_curve: s = %.3g exceeds the resolution limit %.3g for h = %.4g",
                    s, s_cap, grid.h);
      throw ResolutionError(msg);
    }
  }
  const double flux = total_flux(field);
  const int k = near_half_integer(flux) ? 2 : 1;
  const GaugeField gauge(field);

  double floor = std::numeric_limits<double>::quiet_NaN();
  if (options.check_floor) floor = harmonic_ground_state(grid, options).lambda;

  std::vector<SpectralSample> samples(s_values.size());
  // A sequential sweep starts each solve from the previous eigenvector.
  const bool sequential = options.workers <= 1;
  CVector warm;
  parallel_for(s_values.size(), options.workers, [&](std::size_t idx) {
    const double s = s_values[idx];
    const LinkPhases phases =
        field.is_zero() ? trivial_phases(grid) : peierls_phases(grid, gauge, s);
    SpectralSample sample = solve_sample(phases, k, options, sequential ? &warm : nullptr);
    sample.s = s;
    sample.resolved = field.is_zero() || s <= s_cap;
    sample.ho_floor = floor;
    samples[idx] = std::move(sample);
  });

  if (options.check_floor) {
    const double slack = 1e-9 + options.eig_tol;
    for (const auto& sm : samples)
      if (sm.lambda < floor - slack) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "diamagnetic floor violated at s = %.3g: lambda = %.12g < %.12g", sm.s,
                      sm.lambda, floor);
        throw NumericError(msg);
      }
  }
  return samples;
}

void write_lambda_csv(std::ostream& os, std::span<const SpectralSample> samples) {
  os << "s,lambda,residual,iterations,N,R_dom\n";
  char buf[160];
  for (const auto& sm : samples) {
    std::snprintf(buf, sizeof buf, "%.6f,%.12e,%.3e,%d,%d,%.6f\n", sm.s, sm.lambda, sm.residual,
                  sm.iterations, sm.grid.N, sm.grid.R_dom);
    os << buf;
  }
}

LimitEstimate lambda_limit_estimate(std::span<const SpectralSample> samples) {
  if (samples.size() < 3) throw ConfigError("lambda_limit_estimate: need at least 3 samples");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].s > samples[i - 1].s))
      throw ConfigError("lambda_limit_estimate: s must be strictly increasing");
  const auto tail = samples.last(3);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& sm : tail) {
    const double x = std::exp(-sm.s / 2.0);
    sx += x;
    sy += sm.lambda;
    sxx += x * x;
    sxy += x * sm.lambda;
  }
  const double n = 3.0;
  const double denom = n * sxx - sx * sx;
  LimitEstimate out;
  out.last_sample = samples.back().lambda;
  out.slope = (n * sxy - sx * sy) / denom;
  out.extrapolated = (sy - out.slope * sx) / n;
  return out;
}

double variational_upper_bound(const MagneticField& field, double s, int n,
                               const VariationalQuadrature& q) {
  if (n < 2) throw ConfigError("variational_upper_bound: n must be >= 2");
  if (!(s >= 0.0)) throw ConfigError("variational_upper_bound: s must be >= 0");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double flux = total_flux(field);
  const double m = std::round(flux);
  const double log_n = std::log(double(n));
  const double a = 1.0 / (double(n) * n);
  const double b = 1.0 / n;
  const double scale = std::exp(s / 2.0);

  auto eta = [&](double r) { return r >= b ? 1.0 : std::log(double(n) * n * r) / log_n; };
  auto deta = [&](double r) { return r >= b ? 0.0 : 1.0 / (r * log_n); };
  auto f = [&](double r) { return std::exp(-r * r / 8.0) * eta(r); };
  auto df = [&](double r) {
    const double phi = std::exp(-r * r / 8.0);
    return -r / 4.0 * phi * eta(r) + phi * deta(r);
  };

  auto breaks_at = [&](double theta) {
    std::vector<double> br{b};
    if (!field.is_zero())
      for (double rb : field.ray_breakpoints(theta)) br.push_back(rb / scale);
    std::sort(br.begin(), br.end());
    return br;
  };

  const auto br0 = breaks_at(0.0);
  const double norm2 = two_pi * quad::integrate_split(
                                    [&](double r) { return f(r) * f(r) * r; }, a, q.r_max, br0,
                                    q.abs_tol, "trial norm");
  const double kinetic = two_pi * quad::integrate_split(
                                      [&](double r) { return df(r) * df(r) * r; }, a, q.r_max,
                                      br0, q.abs_tol, "trial radial derivative");
  const double harmonic = two_pi / 16.0 *
                          quad::integrate_split([&](double r) { return f(r) * f(r) * r * r * r; },
                                                a, q.r_max, br0, q.abs_tol, "trial potential");

  auto angular_at = [&](double theta, double chi_prime, const std::vector<double>& br) {
    auto integrand = [&](double r) {
      const double alpha = field.is_zero() ? 0.0 : compute_alpha(field, scale * r, theta);
      const double d = chi_prime - alpha;
      return f(r) * f(r) * d * d / r;
    };
    return quad::integrate_split(integrand, a, q.r_max, br, q.abs_tol, "trial angular term");
  };

  double angular = 0.0;
  if (field.is_radial()) {
    angular = two_pi * angular_at(0.0, m, br0);
  } else {
    if (q.theta_points < 8) throw ConfigError("variational_upper_bound: theta_points < 8");
    for (int k = 0; k < q.theta_points; ++k) {
      const double theta = two_pi * k / q.theta_points;
      const double chi_prime = alpha_infinity(field, theta) - flux + m;
      angular += angular_at(theta, chi_prime, breaks_at(theta));
    }
    angular *= two_pi / q.theta_points;
  }
  return (kinetic + angular + harmonic) / norm2;
}

HardyEstimate hardy_constant(const MagneticField& field, double R_dom, int N,
                             const SpectralOptions& options) {
  const Grid2D grid = build_grid(R_dom, N);
  const LinkPhases phases =
      field.is_zero() ? trivial_phases(grid) : peierls_phases(grid, GaugeField(field));
  const MagneticOperator H(phases, false);
  const LinearMap Hmap = H.as_map();
  Eigen::VectorXd w_half(grid.size());
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      Vec2 x = grid.node(i, j);
      w_half[grid.index(i, j)] = 1.0 / std::sqrt(1.0 + x[0] * x[0] + x[1] * x[1]);
    }
  // The largest eigenvalue mu of W^{1/2} H^{-1} W^{1/2} gives c = 1/mu.
  LinearMap M{grid.size(), [&](const CVector& x, CVector& y) {
                CVector rhs = w_half.cwiseProduct(x);
                CVector z = CVector::Zero(grid.size());
                conjugate_gradient(Hmap, rhs, z, 1e-12, 100000);
                y = -w_half.cwiseProduct(z);
              }};
  EigenResult r = smallest_eigs(M, 1, 1e-7, options.eigen);
  const double mu = -r.pairs.front().value;
  if (!(mu > 0.0)) throw NumericError("hardy_constant: non-positive weighted inverse");
  return HardyEstimate{1.0 / mu, R_dom, N, grid.h, r.matvecs};
}

double c_B_from_samples(std::span<const SpectralSample> samples) {
  if (samples.empty()) throw ConfigError("c_B: no samples");
  double lo = samples.front().lambda;
  for (const auto& sm : samples) lo = std::min(lo, sm.lambda);
  return std::max(0.0, lo - 0.5);
}

double c_B_estimate(const MagneticField& field, std::span<const double> s_grid,
                    const Grid2D& grid, const SpectralOptions& options) {
  if (s_grid.empty() || std::abs(s_grid.front()) > 1e-12)
    throw ConfigError("c_B_estimate: s grid must start at 0");
  for (std::size_t i = 1; i < s_grid.size(); ++i) {
    const double gap = s_grid[i] - s_grid[i - 1];
    if (!(gap > 0.0) || gap > 0.5 + 1e-12)
      throw ConfigError("c_B_estimate: s grid must increase with spacing <= 0.5");
  }
  const auto samples = lambda_curve(field, s_grid, grid, options);
  return c_B_from_samples(samples);
}

} // namespace magheat
