#pragma once

#include "tpmsvox/sparse.hpp"

#include <functional>
#include <span>
#include <vector>

namespace tpmsvox {

struct SolverOptions {
  double rel_tol = 1e-8;
  /// 0 selects 20 * sqrt(DOFs) with a floor of 10^4.
  long max_iter = 0;
};

long default_max_iterations(std::size_t dofs);

struct SolveResult {
  std::vector<double> x;
  long iterations = 0;
  double residual = 0.0;  // ||b - A x|| / ||b||
};

/// Called after every iteration with the current iterate and the recursive
/// relative residual.
using IterationObserver = std::function<void(long iteration, std::span<const double> x, double residual)>;

/// Jacobi-preconditioned conjugate gradients. Stops when ||r|| / ||b|| <
/// rel_tol; throws NoConvergence when the iteration budget runs out.
SolveResult pcg_solve(const SymmetricBlockMatrix& a, std::span<const double> b,
                      const SolverOptions& options = {}, std::span<const double> x0 = {},
                      const IterationObserver& observer = {});

}  // namespace tpmsvox
