#include "tpmsvox/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace tpmsvox {

SymmetricBlockMatrix SymmetricBlockMatrix::from_elements(std::size_t node_count,
                                                         const std::vector<HexConnectivity>& elements) {
  std::vector<std::uint32_t> offsets(node_count + 1, 0);
  for (const auto& conn : elements)
    for (auto n : conn) ++offsets[n + 1];
  for (std::size_t i = 0; i < node_count; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::uint32_t> incident(offsets.back());
  {
    std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::uint32_t e = 0; e < elements.size(); ++e)
      for (auto n : elements[e]) incident[fill[n]++] = e;
  }

  SymmetricBlockMatrix m;
  m.row_ptr_.assign(node_count + 1, 0);
  std::vector<std::uint32_t> row;
  for (std::uint32_t i = 0; i < node_count; ++i) {
    row.clear();
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k)
      for (auto j : elements[incident[k]])
        if (j >= i) row.push_back(j);
    if (row.empty()) row.push_back(i);  // isolated node keeps its diagonal block
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    m.cols_.insert(m.cols_.end(), row.begin(), row.end());
    m.row_ptr_[i + 1] = m.cols_.size();
  }
  m.values_.assign(m.cols_.size() * 9, 0.0);
  return m;
}

const double* SymmetricBlockMatrix::find(std::uint32_t i, std::uint32_t j) const {
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return nullptr;
  return values_.data() + 9 * static_cast<std::size_t>(it - cols_.begin());
}

double* SymmetricBlockMatrix::find(std::uint32_t i, std::uint32_t j) {
  return const_cast<double*>(std::as_const(*this).find(i, j));
}

void SymmetricBlockMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  const std::size_t n = node_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double xi0 = x[3 * i], xi1 = x[3 * i + 1], xi2 = x[3 * i + 2];
    double yi0 = 0.0, yi1 = 0.0, yi2 = 0.0;
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t j = cols_[k];
      const double* b = values_.data() + 9 * k;
      const double xj0 = x[3 * j], xj1 = x[3 * j + 1], xj2 = x[3 * j + 2];
      yi0 += b[0] * xj0 + b[1] * xj1 + b[2] * xj2;
      yi1 += b[3] * xj0 + b[4] * xj1 + b[5] * xj2;
      yi2 += b[6] * xj0 + b[7] * xj1 + b[8] * xj2;
      if (j != i) {
        y[3 * j] += b[0] * xi0 + b[3] * xi1 + b[6] * xi2;
        y[3 * j + 1] += b[1] * xi0 + b[4] * xi1 + b[7] * xi2;
        y[3 * j + 2] += b[2] * xi0 + b[5] * xi1 + b[8] * xi2;
      }
    }
    y[3 * i] += yi0;
    y[3 * i + 1] += yi1;
    y[3 * i + 2] += yi2;
  }
}

std::vector<double> SymmetricBlockMatrix::diagonal() const {
  std::vector<double> d(dof_count(), 0.0);
  for (std::uint32_t i = 0; i < node_count(); ++i) {
    const double* b = find(i, i);
    if (!b) continue;
    d[3 * i] = b[0];
    d[3 * i + 1] = b[4];
    d[3 * i + 2] = b[8];
  }
  return d;
}

double SymmetricBlockMatrix::frobenius_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < node_count(); ++i)
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      double bs = 0.0;
      for (int a = 0; a < 9; ++a) bs += values_[9 * k + a] * values_[9 * k + a];
      s += cols_[k] == i ? bs : 2.0 * bs;
    }
  return std::sqrt(s);
}

Eigen::MatrixXd SymmetricBlockMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(dof_count());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < node_count(); ++i)
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t j = cols_[k];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          const double v = values_[9 * k + 3 * r + c];
          a(static_cast<Eigen::Index>(3 * i + r), static_cast<Eigen::Index>(3 * j + c)) = v;
          a(static_cast<Eigen::Index>(3 * j + c), static_cast<Eigen::Index>(3 * i + r)) = v;
        }
    }
  return a;
}

}  // namespace tpmsvox
