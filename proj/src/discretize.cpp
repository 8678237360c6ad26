#include "magheat/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>

#include <lapacke.h>

#include "magheat/error.hpp"
#include "magheat/quadrature.hpp"

namespace magheat {

Grid2D build_grid(double R_dom, int N) {
  if (!(R_dom > 0.0) || !std::isfinite(R_dom)) throw ConfigError("grid: R_dom must be > 0");
  if (N < 16) throw ConfigError("grid: N must be >= 16");
  return Grid2D{R_dom, N, 2.0 * R_dom / (N + 1)};
}

double resolution_limit(const Grid2D& grid, const MagneticField& field) {
  return 2.0 * std::log(field.support_radius() / (4.0 * grid.h));
}

LinkPhases trivial_phases(const Grid2D& grid) {
  LinkPhases out{grid, {}, {}};
  out.horizontal.assign(std::size_t(grid.N - 1) * grid.N, 0.0);
  out.vertical.assign(std::size_t(grid.N) * (grid.N - 1), 0.0);
  return out;
}

namespace {

double segment_distance(Vec2 p, Vec2 q) {
  const Vec2 d{q[0] - p[0], q[1] - p[1]};
  const double dd = d[0] * d[0] + d[1] * d[1];
  const double t = dd > 0.0 ? std::clamp(-(p[0] * d[0] + p[1] * d[1]) / dd, 0.0, 1.0) : 0.0;
  return std::hypot(p[0] + t * d[0], p[1] + t * d[1]);
}

// G(theta_k) = int_{-pi}^{theta_k} alpha_inf at every grid node, plus the
// full-turn integral 2 pi flux. Outside the scaled support alpha equals
// alpha_inf, so an edge there has phase G(q) - G(p) (mod the full turn).
struct AngularTable {
  FieldSpec field;
  double R_dom = 0.0;
  int N = 0;
  std::vector<double> angle;
  std::vector<double> G;
  double turn = 0.0;
};

AngularTable build_angular_table(const MagneticField& field, const Grid2D& grid) {
  AngularTable t{field.spec(), grid.R_dom, grid.N, {}, {}, 0.0};
  const std::size_t n = std::size_t(grid.size());
  t.angle.resize(n);
  t.G.assign(n, 0.0);
  std::vector<std::size_t> order(n);
  for (int j = 0; j < grid.N; ++j)
    for (int i = 0; i < grid.N; ++i) {
      const Vec2 x = grid.node(i, j);
      t.angle[grid.index(i, j)] = std::atan2(x[1], x[0]);
    }
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return t.angle[a] < t.angle[b]; });
  auto alpha_inf = [&](double theta) { return alpha_infinity(field, theta); };
  double lo = -std::numbers::pi;
  double acc = 0.0;
  for (std::size_t k : order) {
    const double th = t.angle[k];
    if (th > lo) {
      acc += quad::integrate(alpha_inf, lo, th, 1e-13, 15, "angular table", 1e-3);
      lo = th;
    }
    t.G[k] = acc;
  }
  t.turn = acc + quad::integrate(alpha_inf, lo, std::numbers::pi, 1e-13, 15, "angular table", 1e-3);
  return t;
}

std::shared_ptr<const AngularTable> angular_table(const MagneticField& field, const Grid2D& grid) {
  static std::mutex m;
  static std::vector<std::shared_ptr<const AngularTable>> cache;
  {
    std::lock_guard lock(m);
    for (const auto& t : cache)
      if (t->field == field.spec() && t->R_dom == grid.R_dom && t->N == grid.N) return t;
  }
  auto t = std::make_shared<const AngularTable>(build_angular_table(field, grid));
  std::lock_guard lock(m);
  cache.push_back(t);
  if (cache.size() > 8) cache.erase(cache.begin());
  return t;
}

} // namespace

LinkPhases peierls_phases(const Grid2D& grid, const GaugeField& gauge,
                          std::optional<double> s) {
  LinkPhases out = trivial_phases(grid);
  const MagneticField& field = gauge.source();
  if (field.is_zero()) return out;
  const double scale_s = s.value_or(0.0);
  const double reach = field.support_radius() / std::exp(0.5 * scale_s);
  const int n = grid.N;
  std::shared_ptr<const AngularTable> table;
  if (!field.is_radial()) table = angular_table(field, grid);

  auto edge = [&](int i0, int j0, int i1, int j1) {
    const Vec2 p = grid.node(i0, j0), q = grid.node(i1, j1);
    if (!table || segment_distance(p, q) < reach) return gauge.line_integral(p, q, scale_s);
    const std::size_t a = std::size_t(grid.index(i0, j0)), b = std::size_t(grid.index(i1, j1));
    double phase = table->G[b] - table->G[a];
    const double dtheta = std::atan2(p[0] * q[1] - p[1] * q[0], p[0] * q[0] + p[1] * q[1]);
    const double raw = table->angle[b] - table->angle[a];
    if (dtheta > 0.0 && raw < 0.0) phase += table->turn;
    if (dtheta < 0.0 && raw > 0.0) phase -= table->turn;
    return phase;
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i + 1 < n; ++i)
      out.horizontal[std::size_t(j) * (n - 1) + i] = edge(i, j, i + 1, j);
  for (int j = 0; j + 1 < n; ++j)
    for (int i = 0; i < n; ++i)
      out.vertical[std::size_t(j) * n + i] = edge(i, j, i, j + 1);
  return out;
}

LinkPhases gauge_transform(const LinkPhases& phases, const std::vector<double>& chi) {
  const int n = phases.grid.N;
  if (chi.size() != std::size_t(n) * n)
    throw ConfigError("gauge_transform: chi must have one value per node");
  LinkPhases out = phases;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i + 1 < n; ++i)
      out.horizontal[std::size_t(j) * (n - 1) + i] +=
          chi[phases.grid.index(i + 1, j)] - chi[phases.grid.index(i, j)];
  for (int j = 0; j + 1 < n; ++j)
    for (int i = 0; i < n; ++i)
      out.vertical[std::size_t(j) * n + i] +=
          chi[phases.grid.index(i, j + 1)] - chi[phases.grid.index(i, j)];
  return out;
}

double plaquette_angle(const LinkPhases& phases, int i, int j) {
  double a = phases.horizontal_at(i, j) + phases.vertical_at(i + 1, j) -
             phases.horizontal_at(i, j + 1) - phases.vertical_at(i, j);
  return std::remainder(a, 2.0 * std::numbers::pi);
}

MagneticOperator::MagneticOperator(const LinkPhases& phases, bool harmonic)
    : grid_(phases.grid), harmonic_(harmonic) {
  const int n = grid_.N;
  if (phases.horizontal.size() != std::size_t(n - 1) * n ||
      phases.vertical.size() != std::size_t(n) * (n - 1))
    throw ConfigError("assemble_magnetic: phases do not match the grid");
  const auto size = std::size_t(grid_.size());
  potential_ = Eigen::VectorXd::Zero(grid_.size());
  if (harmonic_) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Vec2 y = grid_.node(i, j);
        potential_[grid_.index(i, j)] = (y[0] * y[0] + y[1] * y[1]) / 16.0;
      }
  }
  east_.assign(size, cplx(0.0));
  north_.assign(size, cplx(0.0));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i + 1 < n; ++i)
      east_[grid_.index(i, j)] = std::polar(1.0, -phases.horizontal_at(i, j));
  for (int j = 0; j + 1 < n; ++j)
    for (int i = 0; i < n; ++i)
      north_[grid_.index(i, j)] = std::polar(1.0, -phases.vertical_at(i, j));
}

void MagneticOperator::apply(const CVector& x, CVector& y) const {
  const int n = grid_.N;
  const double inv_h2 = 1.0 / (grid_.h * grid_.h);
  const double centre = 4.0 * inv_h2;
  y.resize(grid_.size());
  const cplx* xp = x.data();
  cplx* yp = y.data();
  const cplx* east = east_.data();
  const cplx* north = north_.data();
  const double* pot = potential_.data();
  for (int j = 0; j < n; ++j) {
    const std::size_t row = std::size_t(j) * n;
    for (int i = 0; i < n; ++i) {
      const std::size_t a = row + i;
      cplx nb(0.0);
      if (i + 1 < n) nb += east[a] * xp[a + 1];
      if (i > 0) nb += std::conj(east[a - 1]) * xp[a - 1];
      if (j + 1 < n) nb += north[a] * xp[a + n];
      if (j > 0) nb += std::conj(north[a - n]) * xp[a - n];
      yp[a] = (centre + pot[a]) * xp[a] - inv_h2 * nb;
    }
  }
}

CVector MagneticOperator::operator()(const CVector& x) const {
  CVector y(grid_.size());
  apply(x, y);
  return y;
}

LinearMap MagneticOperator::as_map() const {
  return LinearMap{grid_.size(), [this](const CVector& x, CVector& y) { apply(x, y); }};
}

void MagneticOperator::dump_csv(std::ostream& os) const {
  const int n = grid_.N;
  const double inv_h2 = 1.0 / (grid_.h * grid_.h);
  os << "row,col,re,im\n";
  auto put = [&](std::size_t r, std::size_t c, cplx v) {
    os << r << ',' << c << ',' << v.real() << ',' << v.imag() << '\n';
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      std::size_t a = grid_.index(i, j);
      if (j > 0) put(a, a - n, -inv_h2 * std::conj(north_[a - n]));
      if (i > 0) put(a, a - 1, -inv_h2 * std::conj(east_[a - 1]));
      put(a, a, cplx(4.0 * inv_h2 + potential_[a]));
      if (i + 1 < n) put(a, a + 1, -inv_h2 * east_[a]);
      if (j + 1 < n) put(a, a + n, -inv_h2 * north_[a]);
    }
}

MagneticOperator assemble_magnetic(const Grid2D& grid, const LinkPhases& phases,
                                   bool harmonic) {
  if (!(phases.grid == grid)) throw ConfigError("assemble_magnetic: grid mismatch");
  return MagneticOperator(phases, harmonic);
}

namespace {

/// log((k+1)^q - k^q) for q > 0, stable for large q.
double log_power_difference(double k, double q) {
  double top = q * std::log(k + 1.0);
  if (k == 0.0) return top;
  return top + std::log1p(-std::exp(q * std::log(k / (k + 1.0))));
}

} // namespace

RadialOperator::RadialOperator(int m, double flux, double R_max, int M)
    : m_(m), flux_(flux), nu_(std::abs(m + flux)), R_max_(R_max), M_(M) {
  if (!(R_max > 0.0)) throw ConfigError("radial: R_max must be > 0");
  if (M < 8) throw ConfigError("radial: M too small");
  // Ghost cell M has its centre on r = R_max, where w vanishes.
  dr_ = R_max / (M + 0.5);
  const double p = 2.0 * nu_ + 1.0;
  const double log_dr = std::log(dr_);

  r_.resize(M);
  weight_.resize(M);
  face_.resize(M);
  potential_.resize(M);
  diag_.resize(M);
  off_.resize(M > 1 ? M - 1 : 0);
  Eigen::VectorXd log_c(M), log_face(M);
  for (int k = 0; k < M; ++k) {
    r_[k] = (k + 0.5) * dr_;
    log_c[k] = (p + 1.0) * log_dr + log_power_difference(k, p + 1.0) - std::log(p + 1.0);
    log_face[k] = p * (std::log(k + 1.0) + log_dr);
    // Weighted cell mean of r^2/16.
    double log_second = (p + 3.0) * log_dr + log_power_difference(k, p + 3.0) -
                        std::log(p + 3.0);
    potential_[k] = std::exp(log_second - log_c[k]) / 16.0;
  }
  // Report weights relative to the last cell to stay finite for large nu.
  const double log_ref = log_c[M - 1];
  log_weight_ = log_c.array() - log_ref;
  for (int k = 0; k < M; ++k) {
    weight_[k] = std::exp(log_c[k] - log_ref);
    face_[k] = std::exp(log_face[k] - log_ref) / dr_;
  }
  for (int k = 0; k < M; ++k) {
    double d = std::exp(log_face[k] - log_dr - log_c[k]);
    if (k > 0) d += std::exp(log_face[k - 1] - log_dr - log_c[k]);
    diag_[k] = d + potential_[k];
    if (k + 1 < M)
      off_[k] = -std::exp(log_face[k] - log_dr - 0.5 * (log_c[k] + log_c[k + 1]));
  }
}

Eigen::VectorXd RadialOperator::apply(const Eigen::VectorXd& w) const {
  if (w.size() != M_) throw ConfigError("radial apply: size mismatch");
  Eigen::VectorXd out(M_);
  for (int k = 0; k < M_; ++k) {
    double flux_out = face_[k] * w[k] - (k + 1 < M_ ? face_[k] * w[k + 1] : 0.0);
    double flux_in = k > 0 ? face_[k - 1] * (w[k] - w[k - 1]) : 0.0;
    out[k] = (flux_out + flux_in) / weight_[k] + potential_[k] * w[k];
  }
  return out;
}

RadialOperator::Eigenpairs RadialOperator::lowest(int k, bool vectors) const {
  if (k < 1 || k > M_) throw ConfigError("radial: invalid eigenvalue count");
  Eigen::VectorXd d = diag_;
  Eigen::VectorXd e(M_);
  e.head(M_ - 1) = off_;
  e[M_ - 1] = 0.0;
  Eigen::VectorXd w(M_);
  Eigen::MatrixXd z;
  std::vector<lapack_int> support(2 * std::size_t(k));
  lapack_int found = 0;
  if (vectors) z.resize(M_, k);
  lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'I', M_, d.data(),
                                   e.data(), 0.0, 0.0, 1, k, 0.0, &found, w.data(),
                                   vectors ? z.data() : nullptr, vectors ? M_ : 1,
                                   support.data());
  if (info != 0 || found != k)
    throw NumericError("radial eigensolver failed (dstevr info " + std::to_string(info) + ")");
  Eigenpairs out;
  out.values = w.head(k);
  if (vectors) {
    out.radial_functions.resize(M_, k);
    for (int c = 0; c < k; ++c) {
      double norm2 = 0.0;
      for (int i = 0; i < M_; ++i) {
        // u = r^nu w with w = C^{-1/2} z; C is rescaled consistently.
        double u = z(i, c) * std::exp(nu_ * std::log(r_[i]) - 0.5 * log_weight_[i]);
        out.radial_functions(i, c) = u;
        norm2 += u * u * r_[i] * dr_;
      }
      double s = 1.0 / std::sqrt(norm2);
      // Positive slope at the origin.
      if (out.radial_functions(0, c) < 0.0) s = -s;
      out.radial_functions.col(c) *= s;
    }
  }
  return out;
}

RadialOperator assemble_radial(int m, double flux, double R_max, int M) {
  return RadialOperator(m, flux, R_max, M);
}

} // namespace magheat
