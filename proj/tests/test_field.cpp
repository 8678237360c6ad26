#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "magheat/error.hpp"
#include "magheat/field.hpp"

using namespace magheat;

namespace {

constexpr double kPi = std::numbers::pi;

FieldSpec spec(FieldKind kind, std::map<std::string, double> p) { return {kind, std::move(p)}; }

// Midpoint rule for (1/2pi) int B over the square [-L, L]^2.
double flux_by_cartesian_sum(const MagneticField& f, double L, int n) {
  const double h = 2 * L / n;
  double sum = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) sum += f({-L + (i + 0.5) * h, -L + (j + 0.5) * h});
  return sum * h * h / (2 * kPi);
}

double curl_error(const MagneticField& f, double d, const std::vector<Vec2>& pts) {
  double worst = 0.0;
  for (const Vec2& x : pts) {
    const double dAy = (vector_potential(f, {x[0] + d, x[1]})[1] -
                        vector_potential(f, {x[0] - d, x[1]})[1]) / (2 * d);
    const double dAx = (vector_potential(f, {x[0], x[1] + d})[0] -
                        vector_potential(f, {x[0], x[1] - d})[0]) / (2 * d);
    worst = std::max(worst, std::abs(dAy - dAx - f(x)));
  }
  return worst;
}

} // namespace

TEST_SUITE("field") {

TEST_CASE("radial step flux is B0 R^2 / 2") {
  for (double b0 : {0.5, 1.0, 2.6})
    for (double r : {0.5, 1.0, 1.7}) {
      auto f = make_field(spec(FieldKind::RadialStep, {{"B0", b0}, {"R", r}}));
      CHECK(total_flux(f) == doctest::Approx(b0 * r * r / 2).epsilon(1e-12));
      CHECK(flux_at(f, r / 2) == doctest::Approx(b0 * r * r / 8).epsilon(1e-12));
    }
}

TEST_CASE("total flux agrees with a Cartesian quadrature of B") {
  const std::vector<FieldSpec> specs{
      spec(FieldKind::RadialBump, {{"B0", 1.3}, {"R", 1.0}}),
      spec(FieldKind::OffsetBump, {{"B0", 1.0}, {"R", 1.0}, {"cx", 0.5}, {"cy", 0.25}}),
      spec(FieldKind::DipolePair, {{"B0", 1.0}, {"R", 0.5}, {"c", 1.5}, {"ratio", -0.5}}),
      spec(FieldKind::ScaledToFlux, {{"target", 1.3}, {"R", 1.0}}),
  };
  for (const auto& s : specs) {
    auto f = make_field(s);
    const double rho = f.support_radius();
    CAPTURE(to_string(s.kind));
    CHECK(total_flux(f) == doctest::Approx(flux_by_cartesian_sum(f, rho, 1200)).epsilon(1e-6));
  }
}

TEST_CASE("scaled-to-flux hits its target and the dipole pair has zero flux") {
  for (double target : {0.5, 1.0, 1.3, -2.2}) {
    auto f = make_field(spec(FieldKind::ScaledToFlux, {{"target", target}, {"R", 1.0}}));
    CHECK(total_flux(f) == doctest::Approx(target).epsilon(1e-10));
  }
  auto dip = make_field(spec(FieldKind::DipolePair, {{"B0", 1.0}, {"R", 0.5}, {"c", 1.5}}));
  CHECK(std::abs(total_flux(dip)) < 1e-10);
  CHECK(beta_of(dip) < 1e-10);
}

TEST_CASE("beta is the distance to the nearest integer") {
  CHECK(beta_of_flux(0.0) == 0.0);
  CHECK(beta_of_flux(0.3) == doctest::Approx(0.3));
  CHECK(beta_of_flux(0.5) == doctest::Approx(0.5));
  CHECK(beta_of_flux(1.3) == doctest::Approx(0.3));
  CHECK(beta_of_flux(-0.7) == doctest::Approx(0.3));
  CHECK(beta_of_flux(2.0) == 0.0);
}

TEST_CASE("transverse gauge: x . A vanishes") {
  auto f = make_field(spec(FieldKind::OffsetBump, {{"B0", 1.0}, {"R", 1.0}, {"cx", 0.5}, {"cy", 0.25}}));
  double worst = 0.0;
  for (int a = 0; a < 40; ++a)
    for (double r : {0.1, 0.7, 1.2, 3.0}) {
      const double t = 2 * kPi * a / 40.0;
      const Vec2 x{r * std::cos(t), r * std::sin(t)};
      const Vec2 A = vector_potential(f, x);
      worst = std::max(worst, std::abs(x[0] * A[0] + x[1] * A[1]));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("curl of A reproduces B at second order") {
  std::vector<Vec2> pts;
  for (int a = 0; a < 12; ++a)
    for (double r : {0.2, 0.6, 1.0}) {
      const double t = 2 * kPi * (a + 0.3) / 12.0;
      pts.push_back({0.5 + r * std::cos(t) * 0.8, 0.25 + r * std::sin(t) * 0.8});
    }
  auto f = make_field(spec(FieldKind::OffsetBump, {{"B0", 1.0}, {"R", 1.0}, {"cx", 0.5}, {"cy", 0.25}}));
  const double e1 = curl_error(f, 0.04, pts);
  const double e2 = curl_error(f, 0.02, pts);
  CHECK(e1 > 1e-7);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("A at infinity is the radial gauge with flux Phi") {
  auto f = make_field(spec(FieldKind::RadialBump, {{"B0", 2.0}, {"R", 1.0}}));
  const double flux = total_flux(f);
  for (double r : {2.0, 5.0, 40.0}) {
    const Vec2 x{r * 0.6, r * 0.8};
    const Vec2 A = vector_potential(f, x);
    CHECK(A[0] == doctest::Approx(-flux * x[1] / (r * r)).epsilon(1e-9));
    CHECK(A[1] == doctest::Approx(flux * x[0] / (r * r)).epsilon(1e-9));
  }
  // The angular mean of alpha_inf is the flux for every preset.
  auto off = make_field(spec(FieldKind::OffsetBump, {{"B0", 1.0}, {"R", 1.0}, {"cx", 2.0}, {"cy", 0.0}}));
  double mean = 0.0;
  for (int k = 0; k < 2048; ++k) mean += alpha_infinity(off, 2 * kPi * k / 2048.0);
  CHECK(mean / 2048.0 == doctest::Approx(total_flux(off)).epsilon(1e-6));
}

TEST_CASE("invalid presets are rejected") {
  CHECK_THROWS_AS(make_field(spec(FieldKind::RadialStep, {{"B0", 1.0}})), ConfigError);
  CHECK_THROWS_AS(make_field(spec(FieldKind::RadialStep, {{"B0", 1.0}, {"R", -1.0}})), ConfigError);
  CHECK_THROWS_AS(make_field(spec(FieldKind::RadialStep, {{"B0", 1.0}, {"R", 1.0}, {"x", 1.0}})),
                  ConfigError);
  CHECK_THROWS_AS(
      make_field(spec(FieldKind::DipolePair, {{"B0", 1.0}, {"R", 1.0}, {"c", 0.5}})), ConfigError);
  CHECK_THROWS_AS(parse_field_kind("solenoid"), ConfigError);
  CHECK_THROWS_AS(compute_alpha(zero_field(), -1.0, 0.0), ConfigError);
}

TEST_CASE("field descriptors round-trip through JSON") {
  const FieldSpec s = spec(FieldKind::DipolePair, {{"B0", 0.7}, {"R", 0.5}, {"c", 1.5}, {"ratio", -1.0}});
  nlohmann::json j = s;
  CHECK(j.get<FieldSpec>() == s);
  CHECK(j.dump() == nlohmann::json(j.get<FieldSpec>()).dump());
}

TEST_CASE("support radius bounds B") {
  auto f = make_field(spec(FieldKind::DipolePair, {{"B0", 1.0}, {"R", 0.5}, {"c", 1.5}}));
  CHECK(f.support_radius() == doctest::Approx(2.0));
  CHECK(f({2.01, 0.0}) == 0.0);
  CHECK(f({1.5, 0.0}) == doctest::Approx(1.0));
  CHECK(f({-1.5, 0.0}) == doctest::Approx(-1.0));
  CHECK_FALSE(f.is_radial());
}

}
