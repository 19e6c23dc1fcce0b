#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tpmsvox {

/// Base class for every domain error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TPMSVOX_DEFINE_ERROR(Name)        \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

// implicit geometry
TPMSVOX_DEFINE_ERROR(NonMonotoneBracket);
TPMSVOX_DEFINE_ERROR(CalibrationRangeExceeded);
TPMSVOX_DEFINE_ERROR(EmptySurface);
TPMSVOX_DEFINE_ERROR(IoError);

// voxel meshing
TPMSVOX_DEFINE_ERROR(DomainNotDivisible);
TPMSVOX_DEFINE_ERROR(EmptyMesh);
TPMSVOX_DEFINE_ERROR(ZeroEdge);
TPMSVOX_DEFINE_ERROR(InvalidMesh);
TPMSVOX_DEFINE_ERROR(NoSpanningComponent);

// finite elements
TPMSVOX_DEFINE_ERROR(NoTopFace);
TPMSVOX_DEFINE_ERROR(NoBottomFace);
TPMSVOX_DEFINE_ERROR(UnconstrainedRigidBody);

// convergence analytics
TPMSVOX_DEFINE_ERROR(ZeroReference);
TPMSVOX_DEFINE_ERROR(NonMonotoneTriple);
TPMSVOX_DEFINE_ERROR(ZeroDifference);
TPMSVOX_DEFINE_ERROR(DegenerateOrder);
TPMSVOX_DEFINE_ERROR(ZeroGci);
TPMSVOX_DEFINE_ERROR(DegenerateFit);

// configuration
TPMSVOX_DEFINE_ERROR(ConfigError);

#undef TPMSVOX_DEFINE_ERROR

class NonPositiveJacobian : public Error {
 public:
  NonPositiveJacobian(std::size_t element, double det)
      : Error("non-positive Jacobian determinant " + std::to_string(det) +
              " in element " + std::to_string(element)),
        element_(element),
        det_(det) {}

  std::size_t element() const noexcept { return element_; }
  double determinant() const noexcept { return det_; }

 private:
  std::size_t element_;
  double det_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double residual)
      : Error("conjugate gradient did not converge after " + std::to_string(iterations) +
              " iterations (relative residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class NonPositivePoint : public Error {
 public:
  NonPositivePoint(std::size_t row, const std::string& what)
      : Error("non-positive value in row " + std::to_string(row) + ": " + what), row_(row) {}

  /// 1-based row of the offending point in its input.
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace tpmsvox
