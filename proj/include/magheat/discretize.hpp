#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "magheat/field.hpp"

namespace magheat {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;

/// Matrix-free linear map on complex vectors.
struct LinearMap {
  Eigen::Index dim = 0;
  std::function<void(const CVector&, CVector&)> apply;

  CVector operator()(const CVector& x) const {
    CVector y(dim);
    apply(x, y);
    return y;
  }
};

/// Uniform Dirichlet grid on (-R_dom, R_dom)^2 with N interior nodes per axis.
/// Node (i, j), 0 <= i, j < N, sits at (-R_dom + (i+1) h, -R_dom + (j+1) h).
struct Grid2D {
  double R_dom = 16.0;
  int N = 256;
  double h = 2.0 * 16.0 / 257.0;

  Eigen::Index size() const { return Eigen::Index(N) * N; }
  double coord(int i) const { return -R_dom + (i + 1) * h; }
  Vec2 node(int i, int j) const { return {coord(i), coord(j)}; }
  Eigen::Index index(int i, int j) const { return Eigen::Index(j) * N + i; }

  bool operator==(const Grid2D&) const = default;
};

Grid2D build_grid(double R_dom, int N);

/// Largest s at which the rescaled support radius still spans four cells:
/// s_max(h) = 2 log(support_radius / (4 h)).
double resolution_limit(const Grid2D& grid, const MagneticField& field);

/// Peierls phases theta_e = int_e A . dl on the interior lattice edges.
///
/// horizontal[j * (N-1) + i] is the edge (i, j) -> (i+1, j);
/// vertical[j * N + i] is the edge (i, j) -> (i, j+1).
struct LinkPhases {
  Grid2D grid;
  std::vector<double> horizontal;
  std::vector<double> vertical;

  double horizontal_at(int i, int j) const { return horizontal[std::size_t(j) * (grid.N - 1) + i]; }
  double vertical_at(int i, int j) const { return vertical[std::size_t(j) * grid.N + i]; }
};

/// Phases for A (scale = nullopt) or for A_s.
LinkPhases peierls_phases(const Grid2D& grid, const GaugeField& gauge,
                          std::optional<double> s = std::nullopt);
/// All-zero phases (B = 0).
LinkPhases trivial_phases(const Grid2D& grid);
/// Lattice gauge transform: theta_(a->b) += chi_b - chi_a.
LinkPhases gauge_transform(const LinkPhases& phases, const std::vector<double>& chi);
/// Product of the link factors counterclockwise around the cell with lower-left
/// node (i, j), as an angle in (-pi, pi].
double plaquette_angle(const LinkPhases& phases, int i, int j);

/// Five-point magnetic Laplacian with Peierls factors, optionally plus the
/// harmonic confinement |y|^2 / 16. Entries: diagonal 4/h^2 (+ |y|^2/16),
/// H[a][b] = -exp(i int_b^a A . dl) / h^2 for lattice neighbours.
class MagneticOperator {
public:
  MagneticOperator(const LinkPhases& phases, bool harmonic);

  const Grid2D& grid() const { return grid_; }
  Eigen::Index dimension() const { return grid_.size(); }
  bool harmonic() const { return harmonic_; }
  bool hermitian() const { return true; }
  /// Scalar-potential part of the diagonal (|y|^2 / 16 or 0).
  const Eigen::VectorXd& diag() const { return potential_; }

  void apply(const CVector& x, CVector& y) const;
  CVector operator()(const CVector& x) const;
  LinearMap as_map() const;

  /// Stencil as (row, col, re, im) CSV rows.
  void dump_csv(std::ostream& os) const;

private:
  Grid2D grid_;
  bool harmonic_;
  Eigen::VectorXd potential_;
  // exp(-i theta_(a->b)) for the forward neighbour b of a.
  std::vector<cplx> east_;
  std::vector<cplx> north_;
};

MagneticOperator assemble_magnetic(const Grid2D& grid, const LinkPhases& phases,
                                   bool harmonic);

/// Partial-wave operator
///   -(1/r) d/dr r d/dr + nu^2 / r^2 + r^2 / 16,   nu = |m + flux|,
/// on (0, R_max) with Dirichlet condition at R_max (Friedrichs realization).
///
/// Discretized for w = r^{-nu} u, which solves the regular problem
/// -r^{-(2nu+1)} (r^{2nu+1} w')' + r^2/16 w = E w. Finite volumes on cells
/// [k dr, (k+1) dr] with exact cell weights c_k = int r^{2nu+1} dr keep the
/// scheme second order for every nu, including the r^nu behaviour at 0.
/// The matrix is symmetric in sum_k c_k conj(v_k) w_k; `symmetric_*` return
/// the similarity-transformed tridiagonal C^{1/2} A C^{-1/2}.
class RadialOperator {
public:
  RadialOperator(int m, double flux, double R_max, int M);

  int m() const { return m_; }
  double flux() const { return flux_; }
  double nu() const { return nu_; }
  double R_max() const { return R_max_; }
  int M() const { return M_; }
  double dr() const { return dr_; }
  /// Cell centres r_k = (k + 1/2) dr.
  const Eigen::VectorXd& nodes() const { return r_; }
  const Eigen::VectorXd& cell_weights() const { return weight_; }
  /// Cell-averaged potential (weighted mean of r^2/16 over each cell).
  const Eigen::VectorXd& potential() const { return potential_; }
  const Eigen::VectorXd& symmetric_diagonal() const { return diag_; }
  const Eigen::VectorXd& symmetric_offdiagonal() const { return off_; }

  /// Apply the (non-symmetric) finite-volume matrix to a real vector.
  Eigen::VectorXd apply(const Eigen::VectorXd& w) const;

  struct Eigenpairs {
    Eigen::VectorXd values;
    /// Columns are u(r_k) = r_k^nu w_k, normalized in sum u^2 r dr.
    Eigen::MatrixXd radial_functions;
  };
  /// The k lowest eigenvalues (and eigenfunctions if requested).
  Eigenpairs lowest(int k, bool vectors = false) const;

private:
  int m_;
  double flux_;
  double nu_;
  double R_max_;
  int M_;
  double dr_;
  Eigen::VectorXd r_, weight_, log_weight_, face_, potential_, diag_, off_;
};

RadialOperator assemble_radial(int m, double flux, double R_max = 20.0, int M = 4000);

} // namespace magheat
