#include "tpmsvox/pcg.hpp"

#include "tpmsvox/errors.hpp"

#include <algorithm>
#include <cmath>

namespace tpmsvox {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

long default_max_iterations(std::size_t dofs) {
  return std::max<long>(10'000, static_cast<long>(std::ceil(20.0 * std::sqrt(static_cast<double>(dofs)))));
}

SolveResult pcg_solve(const SymmetricBlockMatrix& a, std::span<const double> b,
                      const SolverOptions& options, std::span<const double> x0,
                      const IterationObserver& observer) {
  const std::size_t n = a.dof_count();
  if (b.size() != n) throw std::invalid_argument("pcg_solve: right-hand side has the wrong length");
  if (!x0.empty() && x0.size() != n) throw std::invalid_argument("pcg_solve: initial guess has the wrong length");
  const long max_iter = options.max_iter > 0 ? options.max_iter : default_max_iterations(n);

  SolveResult result;
  result.x.assign(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), result.x.begin());

  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) {
    std::fill(result.x.begin(), result.x.end(), 0.0);
    return result;
  }

  std::vector<double> inv_diag = a.diagonal();
  for (auto& d : inv_diag) {
    if (!(d > 0.0)) throw std::invalid_argument("pcg_solve: matrix diagonal must be positive");
    d = 1.0 / d;
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  auto& x = result.x;
  a.multiply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

  double res = std::sqrt(dot(r, r)) / b_norm;
  long iter = 0;
  if (res >= options.rel_tol) {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (iter < max_iter) {
      a.multiply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) break;  // breakdown: matrix not positive definite along p
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      ++iter;
      res = std::sqrt(dot(r, r)) / b_norm;
      if (observer) observer(iter, x, res);
      if (res < options.rel_tol) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }

  // Report the true residual rather than the recursively updated one.
  a.multiply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  result.iterations = iter;
  result.residual = std::sqrt(dot(r, r)) / b_norm;
  if (res >= options.rel_tol) throw NoConvergence(static_cast<int>(iter), result.residual);
  return result;
}

}  // namespace tpmsvox
