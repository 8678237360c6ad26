#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "magheat/discretize.hpp"
#include "magheat/error.hpp"
#include "magheat/exact.hpp"

using namespace magheat;

namespace {

constexpr double kPi = std::numbers::pi;

MagneticField offset_bump() {
  return make_field({FieldKind::OffsetBump, {{"B0", 1.0}, {"R", 1.0}, {"cx", 0.5}, {"cy", 0.25}}});
}

MagneticField half_step() { return make_field({FieldKind::RadialStep, {{"B0", 1.0}, {"R", 1.0}}}); }

Eigen::MatrixXcd dense(const MagneticOperator& op) {
  const auto n = op.dimension();
  Eigen::MatrixXcd m(n, n);
  CVector e = CVector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    e.setZero();
    e[k] = 1.0;
    m.col(k) = op(e);
  }
  return m;
}

Eigen::VectorXd dense_spectrum(const MagneticOperator& op) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense(op), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// int_cell B by a midpoint sum on an n x n subgrid.
double cell_flux(const MagneticField& f, const Grid2D& g, int i, int j, int n) {
  const Vec2 lo = g.node(i, j);
  const double d = g.h / n;
  double sum = 0.0;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) sum += f({lo[0] + (a + 0.5) * d, lo[1] + (b + 0.5) * d});
  return sum * d * d;
}

} // namespace

TEST_SUITE("discretize") {

TEST_CASE("grid geometry") {
  const Grid2D g = build_grid(16.0, 255);
  CHECK(g.h == doctest::Approx(32.0 / 256.0));
  CHECK(g.coord(0) == doctest::Approx(-16.0 + g.h));
  CHECK(g.coord(254) == doctest::Approx(16.0 - g.h));
  CHECK(g.coord(127) == doctest::Approx(0.0));
  CHECK_THROWS_AS(build_grid(-1.0, 10), ConfigError);
  CHECK(resolution_limit(g, half_step()) == doctest::Approx(2 * std::log(1.0 / (4 * g.h))));
}

TEST_CASE("segment phase matches a direct quadrature of A . dl") {
  const GaugeField gauge(offset_bump());
  const Vec2 p{-1.0, 0.3}, q{1.7, 0.9};
  for (double s : {0.0, 0.7}) {
    auto integrand = [&](double t) {
      const Vec2 x{p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
      const Vec2 a = gauge.eval_scaled(s, x);
      return a[0] * (q[0] - p[0]) + a[1] * (q[1] - p[1]);
    };
    const double direct =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 20, 1e-13);
    CHECK(gauge.line_integral(p, q, s) == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("plaquette angles equal the flux through each cell") {
  const MagneticField f = offset_bump();
  const Grid2D g = build_grid(2.5, 29);
  const LinkPhases ph = peierls_phases(g, GaugeField(f));
  double worst = 0.0;
  for (int j = 0; j + 1 < g.N; j += 3)
    for (int i = 0; i + 1 < g.N; i += 3)
      worst = std::max(worst, std::abs(plaquette_angle(ph, i, j) - cell_flux(f, g, i, j, 100)));
  CHECK(worst < 1e-7);
}

TEST_CASE("assembled phases agree with per-edge line integrals") {
  const MagneticField f = make_field({FieldKind::DipolePair, {{"B0", 1.0}, {"R", 0.5}, {"c", 1.5}}});
  const GaugeField gauge(f);
  const Grid2D g = build_grid(6.0, 47);
  for (double s : {0.0, 1.5}) {
    const LinkPhases ph = peierls_phases(g, gauge, s);
    double worst = 0.0;
    for (int j = 0; j < g.N; ++j)
      for (int i = 0; i + 1 < g.N; ++i)
        worst = std::max(worst, std::abs(ph.horizontal_at(i, j) -
                                         gauge.line_integral(g.node(i, j), g.node(i + 1, j), s)));
    for (int j = 0; j + 1 < g.N; ++j)
      for (int i = 0; i < g.N; ++i)
        worst = std::max(worst, std::abs(ph.vertical_at(i, j) -
                                         gauge.line_integral(g.node(i, j), g.node(i, j + 1), s)));
    CAPTURE(s);
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("plaquettes sum to 2 pi Phi at every scale") {
  const MagneticField f = half_step();
  const Grid2D g = build_grid(4.0, 63);
  for (double s : {0.0, 1.0, 3.0}) {
    const LinkPhases ph = peierls_phases(g, GaugeField(f), s);
    double total = 0.0;
    for (int j = 0; j + 1 < g.N; ++j)
      for (int i = 0; i + 1 < g.N; ++i) total += plaquette_angle(ph, i, j);
    CAPTURE(s);
    CHECK(total == doctest::Approx(2 * kPi * 0.5).epsilon(1e-9));
  }
}

TEST_CASE("the magnetic Laplacian is Hermitian") {
  const Grid2D g = build_grid(3.0, 16);
  for (bool harmonic : {false, true}) {
    const MagneticOperator op(peierls_phases(g, GaugeField(offset_bump()), 0.5), harmonic);
    const Eigen::MatrixXcd m = dense(op);
    const double scale = m.cwiseAbs().maxCoeff();
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() / scale < 1e-12);
    // Diagonal is 4/h^2 plus the confinement.
    for (int j = 0; j < g.N; ++j)
      for (int i = 0; i < g.N; ++i) {
        const Vec2 y = g.node(i, j);
        const double pot = harmonic ? (y[0] * y[0] + y[1] * y[1]) / 16.0 : 0.0;
        CHECK(m(g.index(i, j), g.index(i, j)).real() ==
              doctest::Approx(4 / (g.h * g.h) + pot).epsilon(1e-14));
      }
  }
}

TEST_CASE("spectra are invariant under lattice gauge transforms") {
  const Grid2D g = build_grid(3.0, 17);
  const LinkPhases ph = peierls_phases(g, GaugeField(offset_bump()), 1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  std::vector<double> chi(std::size_t(g.size()));
  for (auto& c : chi) c = u(rng);
  const LinkPhases gt = gauge_transform(ph, chi);
  for (bool harmonic : {false, true}) {
    const Eigen::VectorXd a = dense_spectrum(MagneticOperator(ph, harmonic));
    const Eigen::VectorXd b = dense_spectrum(MagneticOperator(gt, harmonic));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
  // Plaquettes are gauge invariant too.
  for (int j = 0; j + 1 < g.N; ++j)
    for (int i = 0; i + 1 < g.N; ++i)
      CHECK(std::remainder(plaquette_angle(ph, i, j) - plaquette_angle(gt, i, j), 2 * kPi) ==
            doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("zero-field operator has the Dirichlet Laplacian spectrum") {
  const Grid2D g = build_grid(2.0, 16);
  const Eigen::VectorXd ev = dense_spectrum(MagneticOperator(trivial_phases(g), false));
  std::vector<double> exact;
  for (int k = 1; k <= g.N; ++k)
    for (int l = 1; l <= g.N; ++l) {
      const double a = std::sin(k * kPi / (2.0 * (g.N + 1)));
      const double b = std::sin(l * kPi / (2.0 * (g.N + 1)));
      exact.push_back(4.0 / (g.h * g.h) * (a * a + b * b));
    }
  std::sort(exact.begin(), exact.end());
  for (std::size_t i = 0; i < exact.size(); ++i)
    CHECK(ev[Eigen::Index(i)] == doctest::Approx(exact[i]).epsilon(1e-11));
}

TEST_CASE("radial operator reproduces the closed-form levels") {
  for (double flux : {0.0, 0.3, 0.5, 1.3}) {
    const ABSpectrum sp = ab_spectrum(flux, 5);
    for (const auto& l : sp.levels) {
      const RadialOperator op(l.m, flux, 20.0, 4000);
      const double numeric = op.lowest(l.n + 1).values[l.n];
      CAPTURE(flux);
      CAPTURE(l.m);
      CHECK(std::abs(numeric - l.value) / l.value < 1e-4);
    }
  }
}

TEST_CASE("radial scheme converges at second order") {
  const double exact = ab_spectrum(0.3, 1).lowest();
  const double e1 = std::abs(RadialOperator(0, 0.3, 20.0, 500).lowest(1).values[0] - exact);
  const double e2 = std::abs(RadialOperator(0, 0.3, 20.0, 1000).lowest(1).values[0] - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("radial eigenfunction matches the Laguerre closed form") {
  const RadialOperator op(1, 0.3, 20.0, 4000);
  const auto pairs = op.lowest(2, true);
  const auto& r = op.nodes();
  for (int n = 0; n < 2; ++n) {
    // Compare after matching sign and norm in sum u^2 r dr.
    double nrm = 0.0, dot = 0.0;
    for (Eigen::Index k = 0; k < r.size(); ++k) {
      const double ex = ab_radial(n, 1, 0.3, r[k]);
      nrm += ex * ex * r[k] * op.dr();
      dot += ex * pairs.radial_functions(k, n) * r[k] * op.dr();
    }
    CHECK(std::abs(dot) / std::sqrt(nrm) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

}
