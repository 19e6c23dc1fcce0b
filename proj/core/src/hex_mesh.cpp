#include "tpmsvox/hex_mesh.hpp"

#include "tpmsvox/errors.hpp"
#include "face_table.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tpmsvox {

namespace {

// Corner k: the three neighbours whose edge vectors form a right-handed
// frame on the ideal cube.
constexpr int kCornerNeighbours[8][3] = {
    {1, 3, 4}, {2, 0, 5}, {3, 1, 6}, {0, 2, 7}, {7, 5, 0}, {4, 6, 1}, {5, 7, 2}, {6, 4, 3},
};

constexpr double kMinEdge = 1e-12;

}  // namespace

std::array<double, 8> hex_shape(double xi, double eta, double zeta) {
  std::array<double, 8> n{};
  for (int i = 0; i < 8; ++i) {
    const auto& c = kHexCorners[i];
    n[i] = 0.125 * (1.0 + xi * c[0]) * (1.0 + eta * c[1]) * (1.0 + zeta * c[2]);
  }
  return n;
}

Eigen::Matrix<double, 3, 8> hex_shape_derivatives(double xi, double eta, double zeta) {
  Eigen::Matrix<double, 3, 8> d;
  for (int i = 0; i < 8; ++i) {
    const auto& c = kHexCorners[i];
    const double a = 1.0 + xi * c[0], b = 1.0 + eta * c[1], g = 1.0 + zeta * c[2];
    d(0, i) = 0.125 * c[0] * b * g;
    d(1, i) = 0.125 * a * c[1] * g;
    d(2, i) = 0.125 * a * b * c[2];
  }
  return d;
}

Mat3 hex_jacobian(const HexCorners& x, double xi, double eta, double zeta) {
  const auto d = hex_shape_derivatives(xi, eta, zeta);
  Mat3 j = Mat3::Zero();
  for (int i = 0; i < 8; ++i) j += d.col(i) * x[i].transpose();
  return j;
}

double scaled_jacobian(const HexCorners& x) {
  double worst = 1.0;
  for (int k = 0; k < 8; ++k) {
    const Vec3 e1 = x[kCornerNeighbours[k][0]] - x[k];
    const Vec3 e2 = x[kCornerNeighbours[k][1]] - x[k];
    const Vec3 e3 = x[kCornerNeighbours[k][2]] - x[k];
    const double l1 = e1.norm(), l2 = e2.norm(), l3 = e3.norm();
    if (l1 < kMinEdge || l2 < kMinEdge || l3 < kMinEdge)
      throw ZeroEdge("hexahedron has an edge shorter than 1e-12 mm at corner " + std::to_string(k));
    const double sj = e1.dot(e2.cross(e3)) / (l1 * l2 * l3);
    worst = std::min(worst, sj);
  }
  return worst;
}

double hex_volume(const HexCorners& x) {
  const double g = 1.0 / std::sqrt(3.0);
  double v = 0.0;
  for (int q = 0; q < 8; ++q) {
    const auto& c = kHexCorners[q];
    v += hex_jacobian(x, g * c[0], g * c[1], g * c[2]).determinant();
  }
  return v;
}

HexMesh::HexMesh(std::vector<Vec3> nodes, std::vector<HexConnectivity> elements,
                 double element_size, Box domain, std::vector<std::uint8_t> boundary)
    : nodes_(std::move(nodes)),
      elements_(std::move(elements)),
      h_(element_size),
      domain_(domain),
      boundary_(std::move(boundary)) {
  if (boundary_.empty()) boundary_ = exposed_face_nodes(elements_, nodes_.size());
  if (boundary_.size() != nodes_.size())
    throw InvalidMesh("boundary flag count does not match node count");
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& conn = elements_[e];
    for (int a = 0; a < 8; ++a) {
      if (conn[a] >= nodes_.size())
        throw InvalidMesh("element " + std::to_string(e) + " references node " +
                          std::to_string(conn[a]) + " out of range");
      for (int b = 0; b < a; ++b)
        if (conn[a] == conn[b])
          throw InvalidMesh("element " + std::to_string(e) + " references node " +
                            std::to_string(conn[a]) + " twice");
    }
    double sj = 0.0;
    try {
      sj = scaled_jacobian(corners(e));
    } catch (const ZeroEdge&) {
      sj = 0.0;
    }
    if (!(sj > 0.0))
      throw InvalidMesh("element " + std::to_string(e) + " has non-positive scaled Jacobian " +
                        std::to_string(sj));
  }
}

HexCorners HexMesh::corners(std::size_t e) const {
  HexCorners x;
  const auto& conn = elements_[e];
  for (int a = 0; a < 8; ++a) x[a] = nodes_[conn[a]];
  return x;
}

NodeElementAdjacency::NodeElementAdjacency(const HexMesh& mesh) {
  offsets.assign(mesh.node_count() + 1, 0);
  for (const auto& conn : mesh.elements())
    for (auto n : conn) ++offsets[n + 1];
  for (std::size_t i = 0; i < mesh.node_count(); ++i) offsets[i + 1] += offsets[i];
  elements.resize(offsets.back());
  std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::uint32_t e = 0; e < mesh.element_count(); ++e)
    for (auto n : mesh.elements()[e]) elements[fill[n]++] = e;
}

std::vector<std::uint8_t> exposed_face_nodes(const std::vector<HexConnectivity>& elements,
                                             std::size_t node_count) {
  std::vector<std::uint8_t> flag(node_count, 0);
  for (const auto& f : detail::collect_faces(elements))
    if (f.count == 1)
      for (auto n : f.nodes) flag[n] = 1;
  return flag;
}

}  // namespace tpmsvox
