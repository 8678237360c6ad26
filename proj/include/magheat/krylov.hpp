#pragma once

#include <cstdint>
#include <vector>

#include "magheat/discretize.hpp"

namespace magheat {

struct CGResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradients for a Hermitian positive definite map. `x` holds the
/// initial guess on entry. Throws NumericError if the relative residual does
/// not reach `rtol` within `max_iter` iterations.
CGResult conjugate_gradient(const LinearMap& op, const CVector& rhs, CVector& x,
                            double rtol = 1e-10, int max_iter = 10000);

struct EigenOptions {
  /// Krylov basis size before a thick restart.
  int max_basis = 48;
  /// Cap on operator applications.
  int max_matvecs = 200000;
  std::uint64_t seed = 0x5eed;
  /// Re-run with the found vectors locked until no smaller eigenvalue
  /// appears. Only used when more than one pair is requested; recovers
  /// multiplicities that a single Krylov sequence cannot see.
  bool lock_and_verify = true;
  /// Starting vector; random (from `seed`) when empty.
  CVector start;
};

struct EigenPair {
  double value = 0.0;
  CVector vector;
  /// ||A v - value v|| for the unit vector v.
  double residual = 0.0;
};

struct EigenResult {
  std::vector<EigenPair> pairs;
  int matvecs = 0;
  int restarts = 0;
};

/// The k smallest eigenpairs of a Hermitian map by thick-restart Lanczos with
/// full reorthogonalization. Eigenvalues ascending; each eigenvector has unit
/// norm and its largest-modulus component real positive.
EigenResult smallest_eigs(const LinearMap& op, int k, double tol,
                          const EigenOptions& options = {});

} // namespace magheat
