#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "magheat/decay.hpp"
#include "magheat/error.hpp"

using namespace magheat;

namespace {

NormTrajectory synthetic(Frame frame, double end, double step, double (*norm)(double)) {
  NormTrajectory t;
  t.frame = frame;
  for (double x = 0.0; x <= end + 1e-9; x += step) {
    const double n = norm(x);
    t.samples.push_back({x, n, frame == Frame::SelfSimilar ? n : std::nan(""), 0.0});
  }
  return t;
}

SpectralSample sample(double s, double lambda) {
  SpectralSample out;
  out.s = s;
  out.lambda = lambda;
  return out;
}

} // namespace

TEST_SUITE("decay") {

TEST_CASE("polynomial fit recovers an exact power law") {
  const auto traj = synthetic(Frame::Physical, 50.0, 0.1,
                              [](double t) { return 3.0 * std::pow(1.0 + t, -0.8); });
  const DecayFit fit = fit_polynomial_rate(traj, 10.0, 50.0);
  CHECK(fit.exponent == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(fit.residual < 1e-12);
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  CHECK(fit.samples == 401);
  CHECK(fit.misfits.size() == 401);
}

TEST_CASE("polynomial fit of noisy data: stderr covers the truth") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.01);
  NormTrajectory traj;
  traj.frame = Frame::Physical;
  for (int k = 0; k <= 400; ++k) {
    const double t = 0.125 * k;
    traj.samples.push_back({t, std::pow(1.0 + t, -0.75) * std::exp(noise(rng)), 0.0, 0.0});
  }
  const DecayFit fit = fit_polynomial_rate(traj, 5.0, 50.0);
  CHECK(std::abs(fit.exponent - 0.75) < 4 * fit.exponent_stderr);
  CHECK(fit.residual == doctest::Approx(0.01).epsilon(0.15));
}

TEST_CASE("exponential fit uses the K-norm column") {
  auto traj = synthetic(Frame::SelfSimilar, 6.0, 0.05, [](double s) { return 2.0 * std::exp(-0.75 * s); });
  for (auto& s : traj.samples) s.l2_norm = 1.0;
  const DecayFit fit = fit_exponential_rate(traj, 4.0, 6.0);
  CHECK(fit.exponent == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(fit.frame == Frame::SelfSimilar);
}

TEST_CASE("fit windows are validated") {
  const auto phys = synthetic(Frame::Physical, 5.0, 0.1, [](double t) { return 1.0 / (1.0 + t); });
  CHECK_THROWS_AS(fit_polynomial_rate(phys, 0.5, 5.0), ConfigError);
  CHECK_THROWS_AS(fit_polynomial_rate(phys, 2.0, 8.0), ConfigError);
  CHECK_THROWS_AS(fit_polynomial_rate(phys, 4.5, 5.0), ConfigError);
  CHECK_THROWS_AS(fit_exponential_rate(phys, 1.0, 5.0), ConfigError);
}

TEST_CASE("lambda integral is the trapezoid rule with constant extension") {
  const std::vector<SpectralSample> samples{sample(0, 0.5), sample(1, 0.7), sample(2, 0.8)};
  CHECK(lambda_integral(samples, 0.0) == 0.0);
  CHECK(lambda_integral(samples, 1.0) == doctest::Approx(0.6));
  CHECK(lambda_integral(samples, 0.5) == doctest::Approx(0.5 * (0.5 + 0.6) / 2));
  CHECK(lambda_integral(samples, 2.0) == doctest::Approx(0.6 + 0.75));
  CHECK(lambda_integral(samples, 3.0) == doctest::Approx(0.6 + 0.75 + 0.8));
}

TEST_CASE("initial data") {
  const Grid2D g = build_grid(8.0, 63);
  for (auto d : {InitialDatum::Gaussian, InitialDatum::ShiftedGaussian, InitialDatum::Odd}) {
    CHECK(parse_initial_datum(to_string(d)) == d);
    const StateVector u = initial_state(d, g, Frame::Physical);
    CHECK(u.l2_norm() > 0.5);
  }
  CHECK_THROWS_AS(parse_initial_datum("uniform"), ConfigError);
}

TEST_CASE("theorem report on a small free problem") {
  TheoremConfig cfg;
  cfg.ss_grid = build_grid(8.0, 48);
  cfg.s_values = {0.0, 0.5, 1.0, 1.5, 2.0};
  cfg.T = 6.0;
  cfg.dt = 0.1;
  cfg.h_physical = 0.3;
  cfg.S = 2.0;
  cfg.ds = 0.05;
  cfg.phys_window_start = 2.0;
  cfg.data = {InitialDatum::Gaussian};
  const TheoremReport rep = theorem_report(zero_field(), cfg);
  CHECK(rep.beta == 0.0);
  CHECK(rep.c_B <= 1e-3);
  REQUIRE(rep.runs.size() == 1);
  CHECK(rep.runs[0].energy_bound_ratio <= 1.0 + 1e-9);
  CHECK(rep.runs[0].global_bound_ratio <= 1.0);
  CHECK(rep.flags.at("energy_bound"));
  CHECK(rep.flags.at("global_bound"));
  // The self-similar K-norm of a centred Gaussian decays at exactly 1/2.
  CHECK(rep.runs[0].selfsimilar_fit.exponent == doctest::Approx(0.5).epsilon(0.02));
  std::ostringstream os;
  write_fit_residuals_csv(os, rep);
  CHECK(os.str().rfind("run,frame,abscissa,misfit\n", 0) == 0);
  const auto j = to_json(rep, cfg);
  CHECK(j.at("beta") == 0.0);
  CHECK(j.contains("flags"));
}

}
