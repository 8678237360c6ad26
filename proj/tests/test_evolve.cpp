#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "magheat/error.hpp"
#include "magheat/evolve.hpp"
#include "magheat/exact.hpp"

using namespace magheat;

namespace {

constexpr double kPi = std::numbers::pi;

MagneticField half_step() { return make_field({FieldKind::RadialStep, {{"B0", 1.0}, {"R", 1.0}}}); }

} // namespace

TEST_SUITE("evolve") {

TEST_CASE("state norms") {
  const Grid2D g = build_grid(10.0, 127);
  const StateVector u = gaussian_state(g, 1.0);
  CHECK(u.l2_norm() == doctest::Approx(std::sqrt(kPi)).epsilon(1e-10));
  CHECK(weighted_norm(u) == doctest::Approx(free_gaussian_k_norm(1.0)).epsilon(1e-8));
  const StateVector odd = odd_state(g, 1.0);
  // int x1^2 e^{-|x|^2} = pi / 2.
  CHECK(odd.l2_norm() == doctest::Approx(std::sqrt(kPi / 2)).epsilon(1e-8));
  CHECK(boundary_mass(u) < 1e-30);
}

TEST_CASE("K-weighting round trip") {
  const Grid2D g = build_grid(8.0, 63);
  const StateVector u = gaussian_state(g, 1.0, {0.5, -0.25}, Frame::SelfSimilar);
  const StateVector v = to_k_weighted(u);
  CHECK(v.k_weighted);
  CHECK(v.l2_norm() == doctest::Approx(weighted_norm(u)).epsilon(1e-12));
  const StateVector back = from_k_weighted(v);
  CHECK((back.values - u.values).norm() / u.values.norm() < 1e-14);
}

TEST_CASE("Crank-Nicolson never increases the norm") {
  const Grid2D g = build_grid(6.0, 47);
  const MagneticOperator op(peierls_phases(g, GaugeField(half_step())), false);
  StateVector u = odd_state(g, 1.0);
  double prev = u.l2_norm();
  for (int k = 0; k < 40; ++k) {
    u = cn_step(op.as_map(), u, 0.1);
    const double now = u.l2_norm();
    CHECK(now <= prev * (1 + 1e-12));
    prev = now;
  }
  CHECK(prev < 0.9 * std::sqrt(kPi / 2));
}

TEST_CASE("free evolution matches the Gaussian closed form") {
  const double T = 3.0;
  const Grid2D g = physical_grid_for(zero_field(), T, 0.2);
  const NormTrajectory traj = evolve_physical(zero_field(), gaussian_state(g, 1.0), T, 0.05);
  double worst = 0.0;
  for (const auto& s : traj.samples)
    worst = std::max(worst, std::abs(s.l2_norm / free_gaussian_norm(s.time, 1.0) - 1.0));
  CHECK(worst < 1e-3);
  CHECK(traj.initial_k_norm == doctest::Approx(free_gaussian_k_norm(1.0)).epsilon(1e-6));
  CHECK(traj.samples.back().time == doctest::Approx(T));
}

TEST_CASE("physical and self-similar runs describe the same solution") {
  // u~(s) has the L^2 norm of u(e^s - 1).
  const double S = 1.0;
  const double T = std::expm1(S);
  const Grid2D gp = physical_grid_for(half_step(), T, 0.15);
  const NormTrajectory phys = evolve_physical(half_step(), gaussian_state(gp, 1.0), T, T / 80);
  const Grid2D gs = build_grid(10.0, 127);
  const NormTrajectory ss = evolve_selfsimilar(
      half_step(), gaussian_state(gs, 1.0, {0.0, 0.0}, Frame::SelfSimilar), S, 0.0125);
  CHECK(ss.samples.back().l2_norm ==
        doctest::Approx(phys.samples.back().l2_norm).epsilon(5e-3));
  // The K-norm column never increases.
  for (std::size_t i = 1; i < ss.samples.size(); ++i)
    CHECK(ss.samples[i].k_norm <= ss.samples[i - 1].k_norm * (1 + 1e-12));
}

TEST_CASE("frame map preserves the L^2 norm") {
  const Grid2D gp = build_grid(12.0, 191);
  StateVector u = gaussian_state(gp, 1.5);
  u.time = 1.5;
  const Grid2D gs = build_grid(8.0, 127);
  const StateVector ut = frame_map(u, Frame::SelfSimilar, gs);
  CHECK(ut.time == doctest::Approx(std::log1p(1.5)));
  CHECK(ut.l2_norm() == doctest::Approx(u.l2_norm()).epsilon(1e-3));
  const StateVector back = frame_map(ut, Frame::Physical, gp);
  CHECK(back.time == doctest::Approx(1.5));
  CHECK(back.l2_norm() == doctest::Approx(u.l2_norm()).epsilon(2e-3));
  CHECK_THROWS_AS(frame_map(u, Frame::Physical, gp), ConfigError);
  // A target grid too small to hold the state.
  CHECK_THROWS_AS(frame_map(u, Frame::SelfSimilar, build_grid(1.0, 16)), NumericError);
}

TEST_CASE("runs abort when mass reaches the boundary") {
  const Grid2D g = build_grid(3.0, 29);
  CHECK_THROWS_AS(evolve_physical(zero_field(), gaussian_state(g, 1.0), 5.0, 0.1), NumericError);
  CHECK_THROWS_AS(evolve_physical(zero_field(), gaussian_state(g, 1.0), 1.0, 0.0), ConfigError);
}

TEST_CASE("trajectory CSV") {
  const Grid2D g = build_grid(6.0, 31);
  const NormTrajectory traj = evolve_selfsimilar(
      zero_field(), gaussian_state(g, 1.0, {0.0, 0.0}, Frame::SelfSimilar), 0.2, 0.05);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "frame,time,l2_norm,k_norm,boundary_mass");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == int(traj.samples.size()));
  CHECK(traj.samples.size() == 5);
  CHECK(parse_frame("self-similar") == Frame::SelfSimilar);
  CHECK_THROWS_AS(parse_frame("lab"), ConfigError);
}

}
