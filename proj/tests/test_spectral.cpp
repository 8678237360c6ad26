#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "magheat/error.hpp"
#include "magheat/spectral.hpp"

using namespace magheat;

namespace {

MagneticField half_step() { return make_field({FieldKind::RadialStep, {{"B0", 1.0}, {"R", 1.0}}}); }

SpectralSample sample(double s, double lambda) {
  SpectralSample out;
  out.s = s;
  out.lambda = lambda;
  return out;
}

} // namespace

TEST_SUITE("spectral") {

TEST_CASE("zero field: lambda(s) is the oscillator floor") {
  const Grid2D g = build_grid(8.0, 48);
  const std::vector<double> s{0.0, 1.0, 3.0};
  const auto samples = lambda_curve(zero_field(), s, g);
  const double floor = harmonic_ground_state(g).lambda;
  for (const auto& sm : samples) {
    CHECK(sm.lambda == doctest::Approx(floor).epsilon(1e-8));
    CHECK(sm.residual <= 1e-8);
    CHECK(sm.ho_floor == doctest::Approx(floor).epsilon(1e-8));
  }
  CHECK(std::abs(floor - 0.5) < 5e-3);
}

TEST_CASE("oscillator ground state converges at second order") {
  const double e1 = std::abs(harmonic_ground_state(build_grid(8.0, 31)).lambda - 0.5);
  const double e2 = std::abs(harmonic_ground_state(build_grid(8.0, 63)).lambda - 0.5);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("half-integer flux: lambda lies above the floor and moves toward 3/4") {
  const Grid2D g = build_grid(8.0, 64);
  const std::vector<double> s{0.0, 1.0, 2.0};
  const auto samples = lambda_curve(half_step(), s, g);
  for (const auto& sm : samples) CHECK(sm.lambda >= sm.ho_floor - 1e-8);
  CHECK(samples[2].lambda > samples[0].lambda);
  CHECK(samples[2].lambda < 0.75 + 1e-3);
}

TEST_CASE("strict resolution mode rejects unresolved scales") {
  const Grid2D g = build_grid(8.0, 32);
  SpectralOptions o;
  o.strict_resolution = true;
  const std::vector<double> s{std::max(resolution_limit(g, half_step()), 0.0) + 0.5};
  CHECK_THROWS_AS(lambda_curve(half_step(), s, g, o), ResolutionError);
  o.strict_resolution = false;
  o.check_floor = false;
  const auto samples = lambda_curve(half_step(), s, g, o);
  CHECK_FALSE(samples[0].resolved);
  CHECK_THROWS_AS(lambda_curve(half_step(), std::vector<double>{}, g), ConfigError);
}

TEST_CASE("parallel and sequential sweeps agree") {
  const Grid2D g = build_grid(6.0, 40);
  const std::vector<double> s{0.0, 1.0, 2.0};
  SpectralOptions par;
  par.workers = 3;
  const auto a = lambda_curve(half_step(), s, g);
  const auto b = lambda_curve(half_step(), s, g, par);
  for (std::size_t i = 0; i < s.size(); ++i)
    CHECK(a[i].lambda == doctest::Approx(b[i].lambda).epsilon(1e-9));
}

TEST_CASE("limit extrapolation in e^{-s/2}") {
  std::vector<SpectralSample> samples;
  for (double s : {0.0, 2.0, 4.0, 6.0}) samples.push_back(sample(s, 0.75 - 0.3 * std::exp(-s / 2)));
  const LimitEstimate est = lambda_limit_estimate(samples);
  CHECK(est.extrapolated == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(est.slope == doctest::Approx(-0.3).epsilon(1e-10));
  CHECK(est.last_sample == samples.back().lambda);
  std::swap(samples[1], samples[2]);
  CHECK_THROWS_AS(lambda_limit_estimate(samples), ConfigError);
  samples.resize(2);
  CHECK_THROWS_AS(lambda_limit_estimate(samples), ConfigError);
}

TEST_CASE("c_B is the infimum of lambda - 1/2") {
  std::vector<SpectralSample> samples{sample(0, 0.58), sample(0.5, 0.56), sample(1, 0.61)};
  CHECK(c_B_from_samples(samples) == doctest::Approx(0.06));
  samples.push_back(sample(1.5, 0.4999));
  CHECK(c_B_from_samples(samples) == 0.0);
  const Grid2D g = build_grid(6.0, 24);
  CHECK_THROWS_AS(c_B_estimate(half_step(), std::vector<double>{0.0, 1.0}, g), ConfigError);
  CHECK_THROWS_AS(c_B_estimate(half_step(), std::vector<double>{0.5, 1.0}, g), ConfigError);
}

TEST_CASE("variational bound for B = 0 approaches 1/2 from above like 1/(2 log n)") {
  double prev = 1e300;
  for (int n : {10, 1000, 1000000}) {
    const double b = variational_upper_bound(zero_field(), 0.0, n);
    CHECK(b >= 0.5 - 1e-9);
    CHECK(b < prev);
    prev = b;
  }
  const int n = 1000000;
  const double excess = variational_upper_bound(zero_field(), 0.0, n) - 0.5;
  CHECK(excess == doctest::Approx(1.0 / (2.0 * std::log(double(n)))).epsilon(0.2));
}

TEST_CASE("variational bound with integer flux decreases in s toward 1/2 plus the cutoff cost") {
  const MagneticField one = make_field({FieldKind::ScaledToFlux, {{"target", 1.0}, {"R", 1.0}}});
  const int n = 8;
  double prev = 1e300;
  for (double s : {2.0, 6.0, 10.0}) {
    const double b = variational_upper_bound(one, s, n);
    CAPTURE(s);
    CHECK(b < prev);
    CHECK(b >= 0.5 - 1e-9);
    prev = b;
  }
  // Cutoff cost of eta_n against the Gaussian profile: 1 / (2 log n).
  CHECK(prev - 0.5 < 1.0 / (2.0 * std::log(double(n))) + 0.05);
}

TEST_CASE("variational bound lies above the discrete eigenvalue") {
  const Grid2D g = build_grid(10.0, 96);
  const std::vector<double> s{1.0};
  const double lambda = lambda_curve(half_step(), s, g)[0].lambda;
  const double bound = variational_upper_bound(half_step(), 1.0, 1000);
  CHECK(bound >= lambda - 5e-3);
}

TEST_CASE("Hardy constant is a valid lower bound on random test vectors") {
  const MagneticField f = half_step();
  const HardyEstimate est = hardy_constant(f, 5.0, 39);
  CHECK(est.c_est > 0.01);
  const Grid2D g = build_grid(5.0, 39);
  const MagneticOperator H(peierls_phases(g, GaugeField(f)), false);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 20; ++trial) {
    CVector u(g.size());
    if (trial % 2 == 0) {
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = cplx(d(rng), d(rng));
    } else {
      // Smooth bumps, where the quotient comes close to its infimum.
      const double cx = 0.5 * d(rng), cy = 0.5 * d(rng), w = 1.0 + 0.1 * trial;
      for (int j = 0; j < g.N; ++j)
        for (int i = 0; i < g.N; ++i) {
          const Vec2 x = g.node(i, j);
          const double r2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy);
          u[g.index(i, j)] = std::exp(-r2 / (w * w)) * std::cos(x[0] / 5.0 * 1.5) * std::cos(x[1] / 5.0 * 1.5);
        }
    }
    double weighted = 0.0;
    for (int j = 0; j < g.N; ++j)
      for (int i = 0; i < g.N; ++i) {
        const Vec2 x = g.node(i, j);
        weighted += std::norm(u[g.index(i, j)]) / (1.0 + x[0] * x[0] + x[1] * x[1]);
      }
    CHECK(u.dot(H(u)).real() >= est.c_est * weighted * (1.0 - 1e-6));
  }
}

TEST_CASE("Hardy constant of the free Laplacian shrinks with the domain") {
  const double a = hardy_constant(zero_field(), 3.0, 23).c_est;
  const double b = hardy_constant(zero_field(), 6.0, 47).c_est;
  CHECK(b < a);
}

}
