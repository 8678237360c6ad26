#include "magheat/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "magheat/error.hpp"

namespace magheat {

CGResult conjugate_gradient(const LinearMap& op, const CVector& rhs, CVector& x,
                            double rtol, int max_iter) {
  const double bnorm = rhs.norm();
  if (x.size() != rhs.size()) x = CVector::Zero(rhs.size());
  if (bnorm == 0.0) {
    x.setZero();
    return {0, 0.0};
  }
  CVector r = rhs - op(x);
  CVector p = r;
  CVector q(rhs.size());
  double rr = r.squaredNorm();
  const double target = rtol * rtol * bnorm * bnorm;
  int it = 0;
  while (rr > target) {
    if (it >= max_iter)
      throw NumericError("conjugate gradient did not converge in " +
                         std::to_string(max_iter) + " iterations (relative residual " +
                         std::to_string(std::sqrt(rr) / bnorm) + ")");
    op.apply(p, q);
    const double pq = p.dot(q).real();
    if (!(pq > 0.0)) throw NumericError("conjugate gradient: operator not positive definite");
    const double step = rr / pq;
    x += step * p;
    r -= step * q;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++it;
  }
  return {it, std::sqrt(rr) / bnorm};
}

namespace {

using CMatrix = Eigen::MatrixXcd;

CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(dist(rng), dist(rng));
  return v;
}

/// Classical Gram-Schmidt against the columns of `basis`, repeated once when
/// cancellation is severe. Returns the accumulated coefficients.
CVector orthogonalize(const Eigen::Ref<const CMatrix>& basis, CVector& w) {
  CVector coeff = CVector::Zero(basis.cols());
  if (basis.cols() == 0) return coeff;
  for (int pass = 0; pass < 2; ++pass) {
    const double before = w.norm();
    CVector h = basis.adjoint() * w;
    w.noalias() -= basis * h;
    coeff += h;
    if (w.norm() > 0.7 * before) break;
  }
  return coeff;
}

void project_out(const std::vector<CVector>& locked, CVector& w) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& x : locked) w -= x.dot(w) * x;
}

void normalize_phase(CVector& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs2().maxCoeff(&idx);
  const cplx c = v[idx];
  if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
}

struct LanczosRun {
  std::vector<EigenPair> pairs;
  int matvecs = 0;
  int restarts = 0;
};

LanczosRun thick_restart_lanczos(const LinearMap& op, int k, double tol,
                                 const EigenOptions& opt, const std::vector<CVector>& locked,
                                 std::mt19937_64& rng) {
  const Eigen::Index n = op.dim;
  const Eigen::Index free_dim = n - Eigen::Index(locked.size());
  const int m = int(std::min<Eigen::Index>(std::max(opt.max_basis, 2 * k + 8), free_dim));
  if (m < k) throw ConfigError("smallest_eigs: requested more eigenpairs than the dimension");

  CMatrix V(n, m + 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, m + 1);
  LanczosRun run;

  auto fresh_direction = [&](int used) {
    for (int attempt = 0; attempt < 5; ++attempt) {
      CVector v = random_vector(n, rng);
      project_out(locked, v);
      orthogonalize(V.leftCols(used), v);
      const double nv = v.norm();
      if (nv > 1e-8) return CVector(v / nv);
    }
    return CVector(CVector::Zero(n));
  };

  if (locked.empty() && opt.start.size() == n && opt.start.norm() > 0.0)
    V.col(0) = opt.start.normalized();
  else
    V.col(0) = fresh_direction(0);
  int start = 0;
  CVector w(n);
  while (true) {
    double beta = 0.0;
    int filled = m;
    for (int j = start; j < m; ++j) {
      if (locked.empty()) {
        op.apply(V.col(j), w);
      } else {
        // Apply P A P with P the projector onto the complement of the locked
        // vectors; projecting on both sides keeps round-off from feeding the
        // zero eigenvalues of the locked block.
        CVector v = V.col(j);
        project_out(locked, v);
        op.apply(v, w);
      }
      ++run.matvecs;
      project_out(locked, w);
      CVector h = orthogonalize(V.leftCols(j + 1), w);
      project_out(locked, w);
      for (int i = 0; i <= j; ++i) T(i, j) = h[i].real();
      beta = w.norm();
      const double scale = std::abs(T(j, j)) + 1.0;
      if (beta <= 1e-12 * scale) {
        // Invariant subspace: continue with an unrelated direction.
        if (j + 1 >= free_dim) {
          filled = j + 1;
          beta = 0.0;
          break;
        }
        V.col(j + 1) = fresh_direction(j + 1);
        beta = 0.0;
      } else {
        V.col(j + 1) = w / beta;
      }
      T(j + 1, j) = beta;
    }

    const Eigen::MatrixXd S = 0.5 * (T.topLeftCorner(filled, filled) +
                                     T.topLeftCorner(filled, filled).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const Eigen::VectorXd& theta = es.eigenvalues();
    const Eigen::MatrixXd& Y = es.eigenvectors();

    bool converged = true;
    for (int i = 0; i < k; ++i)
      if (std::abs(beta * Y(filled - 1, i)) > 0.5 * tol) converged = false;

    if (converged) {
      std::vector<EigenPair> pairs;
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        CVector x = V.leftCols(filled) * Y.col(i);
        project_out(locked, x);
        x.normalize();
        CVector ax = op(x);
        ++run.matvecs;
        project_out(locked, ax);
        const double value = x.dot(ax).real();
        const double res = (ax - value * x).norm();
        worst = std::max(worst, res);
        normalize_phase(x);
        pairs.push_back({value, std::move(x), res});
      }
      if (worst <= tol) {
        run.pairs = std::move(pairs);
        return run;
      }
    }
    if (run.matvecs >= opt.max_matvecs)
      throw NumericError("smallest_eigs: no convergence within " +
                         std::to_string(opt.max_matvecs) + " operator applications");
    if (filled < m) {
      // Whole space spanned but residual test failed: round-off limited.
      throw NumericError("smallest_eigs: tolerance below attainable accuracy");
    }

    // Thick restart: keep the lowest Ritz vectors plus the residual direction.
    const int keep = std::clamp(k + (m - k) / 2, k, m - 2);
    CMatrix kept = V.leftCols(m) * Y.leftCols(keep);
    V.leftCols(keep) = kept;
    V.col(keep) = V.col(m);
    T.setZero();
    for (int i = 0; i < keep; ++i) {
      T(i, i) = theta[i];
      T(keep, i) = beta * Y(m - 1, i);
    }
    start = keep;
    ++run.restarts;
  }
}

} // namespace

EigenResult smallest_eigs(const LinearMap& op, int k, double tol, const EigenOptions& options) {
  if (k < 1) throw ConfigError("smallest_eigs: k must be >= 1");
  if (k > op.dim) throw ConfigError("smallest_eigs: k exceeds the operator dimension");
  if (!(tol > 0.0)) throw ConfigError("smallest_eigs: tol must be > 0");

  std::mt19937_64 rng(options.seed);
  EigenResult result;
  LanczosRun first = thick_restart_lanczos(op, k, tol, options, {}, rng);
  result.matvecs += first.matvecs;
  result.restarts += first.restarts;
  result.pairs = std::move(first.pairs);

  if (k >= 2 && options.lock_and_verify) {
    // A single Krylov sequence sees one copy of each eigenvalue in exact
    // arithmetic; look for missed copies in the complement of what was found.
    for (int round = 0; round < k && result.pairs.size() < std::size_t(op.dim); ++round) {
      std::vector<CVector> locked;
      for (const auto& p : result.pairs) locked.push_back(p.vector);
      if (Eigen::Index(locked.size()) >= op.dim) break;
      LanczosRun extra = thick_restart_lanczos(op, 1, tol, options, locked, rng);
      result.matvecs += extra.matvecs;
      result.restarts += extra.restarts;
      EigenPair candidate = std::move(extra.pairs.front());
      if (candidate.value >= result.pairs.back().value - tol) break;
      // Re-evaluate the residual against the full operator.
      CVector ax = op(candidate.vector);
      ++result.matvecs;
      candidate.residual = (ax - candidate.value * candidate.vector).norm();
      result.pairs.back() = std::move(candidate);
      std::sort(result.pairs.begin(), result.pairs.end(),
                [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
    }
  }
  return result;
}

} // namespace magheat
