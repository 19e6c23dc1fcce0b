#pragma once

#include "tpmsvox/geometry.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace tpmsvox {

/// Natural coordinates of the eight hex corners. Bottom face (zeta = -1)
/// counter-clockwise seen from +z, then the top face in the same cycle.
/// This is also the VTK_HEXAHEDRON ordering.
inline constexpr std::array<std::array<int, 3>, 8> kHexCorners = {{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},
}};

/// Six faces as corner quadruples, each ordered outward by the right-hand rule.
inline constexpr std::array<std::array<int, 4>, 6> kHexFaces = {{
    {0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7},
}};

using HexCorners = std::array<Vec3, 8>;
using HexConnectivity = std::array<std::uint32_t, 8>;

/// Trilinear shape functions at a natural point.
std::array<double, 8> hex_shape(double xi, double eta, double zeta);

/// d N_i / d(xi, eta, zeta), one row per derivative direction.
Eigen::Matrix<double, 3, 8> hex_shape_derivatives(double xi, double eta, double zeta);

/// Isoparametric Jacobian J[r][c] = d x_c / d xi_r.
Mat3 hex_jacobian(const HexCorners& x, double xi, double eta, double zeta);

/// Minimum over the eight corners of det[e1 e2 e3] / (|e1||e2||e3|), where
/// the e_i are the edges leaving the corner, ordered right-handed for the
/// ideal cube. An ideal (possibly stretched) brick scores exactly 1.
/// Throws ZeroEdge when an edge is shorter than 1e-12 mm.
double scaled_jacobian(const HexCorners& x);

/// Volume by 2x2x2 Gauss integration of det J (exact for trilinear hexes).
double hex_volume(const HexCorners& x);

/// Hexahedral mesh shared by the mesher and the solver. Units are mm.
class HexMesh {
 public:
  HexMesh() = default;

  /// Validates index ranges, distinct corners and a positive scaled
  /// Jacobian for every element; throws InvalidMesh otherwise.
  HexMesh(std::vector<Vec3> nodes, std::vector<HexConnectivity> elements, double element_size,
          Box domain, std::vector<std::uint8_t> boundary = {});

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<HexConnectivity>& elements() const { return elements_; }
  double element_size() const { return h_; }
  const Box& domain() const { return domain_; }
  /// 1 for nodes incident to a face not shared by two elements.
  const std::vector<std::uint8_t>& boundary() const { return boundary_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t element_count() const { return elements_.size(); }

  HexCorners corners(std::size_t e) const;

 private:
  std::vector<Vec3> nodes_;
  std::vector<HexConnectivity> elements_;
  double h_ = 0.0;
  Box domain_;
  std::vector<std::uint8_t> boundary_;
};

/// Node -> incident elements in compressed form.
struct NodeElementAdjacency {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> elements;

  explicit NodeElementAdjacency(const HexMesh& mesh);
  std::span<const std::uint32_t> of(std::size_t node) const {
    return {elements.data() + offsets[node], elements.data() + offsets[node + 1]};
  }
};

/// Per-node flag: node lies on a face used by exactly one element.
std::vector<std::uint8_t> exposed_face_nodes(const std::vector<HexConnectivity>& elements,
                                             std::size_t node_count);

}  // namespace tpmsvox
