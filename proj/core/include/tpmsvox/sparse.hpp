#pragma once

#include "tpmsvox/hex_mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace tpmsvox {

/// Symmetric matrix with 3x3 node blocks; only blocks (i, j) with j >= i are
/// stored, row-compressed by node, columns sorted. Blocks are row-major.
class SymmetricBlockMatrix {
 public:
  SymmetricBlockMatrix() = default;

  /// Pattern of node couplings through shared hexahedra.
  static SymmetricBlockMatrix from_elements(std::size_t node_count,
                                            const std::vector<HexConnectivity>& elements);

  std::size_t node_count() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t dof_count() const { return 3 * node_count(); }
  std::size_t block_count() const { return cols_.size(); }

  /// Pointer to the 9 values of block (i, j), i <= j; nullptr if absent.
  double* find(std::uint32_t i, std::uint32_t j);
  const double* find(std::uint32_t i, std::uint32_t j) const;

  /// y = A x over the full symmetric matrix.
  void multiply(std::span<const double> x, std::span<double> y) const;

  std::vector<double> diagonal() const;
  /// Frobenius norm of the full (both triangles) matrix.
  double frobenius_norm() const;
  Eigen::MatrixXd to_dense() const;

  const std::vector<std::uint64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& cols() const { return cols_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<std::uint64_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> values_;
};

}  // namespace tpmsvox
