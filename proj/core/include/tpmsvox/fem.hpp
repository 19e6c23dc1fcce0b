#pragma once

#include "tpmsvox/hex_mesh.hpp"
#include "tpmsvox/pcg.hpp"
#include "tpmsvox/sparse.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace tpmsvox {

/// Base material. Units: MPa, kg/m^3. The plastic parameters are carried for
/// completeness; the solver is linear elastic.
struct MaterialSpec {
  double youngs_modulus = 121'000.0;
  double poisson_ratio = 0.34;
  double density = 4400.0;
  double yield_stress = 896.0;
  double tangent_modulus = 1850.0;

  /// Ti-6Al-4V.
  static MaterialSpec ti6al4v() { return {}; }
  void validate() const;
};

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using ElementStiffness = Eigen::Matrix<double, 24, 24>;

/// Isotropic elasticity in Voigt order xx, yy, zz, xy, yz, zx (engineering
/// shear strains).
Matrix6 isotropic_elasticity(double youngs_modulus, double poisson_ratio);

/// Trilinear hexahedron with full 2x2x2 Gauss quadrature, DOFs ordered
/// node-major (u_x, u_y, u_z per corner). Throws NonPositiveJacobian.
ElementStiffness hex8_stiffness(const HexCorners& x, const MaterialSpec& material);

/// Global stiffness. Elements are accumulated in index order, so the result
/// is bit-identical between runs. Throws NonPositiveJacobian with the element
/// id.
SymmetricBlockMatrix assemble(const HexMesh& mesh, const MaterialSpec& material);

struct CompressionSetup {
  double displacement = 0.05;     // downward top displacement magnitude, mm
  double face_tolerance = 1e-6;   // mm, distance to z_min / z_max
};

/// Stiffness system with the frictionless-platen constraints eliminated:
/// prescribed rows and columns are replaced by identity and their coupling
/// moved to the right-hand side.
struct ConstrainedSystem {
  struct Row {
    std::uint32_t dof = 0;
    std::vector<std::pair<std::uint32_t, double>> entries;
  };

  SymmetricBlockMatrix matrix;
  std::vector<double> rhs;
  std::vector<std::uint8_t> constrained;  // per DOF
  std::vector<double> prescribed;         // per DOF, meaningful where constrained
  std::vector<std::uint32_t> bottom_nodes;
  std::vector<std::uint32_t> top_nodes;
  std::vector<std::uint32_t> lock_nodes;  // pairs per connected component
  std::vector<Row> top_rows;     // unconstrained K rows of the top z DOFs
  std::vector<Row> bottom_rows;  // unconstrained K rows of the bottom z DOFs
  double height = 0.0;
  double area = 0.0;
  double displacement = 0.0;
};

/// u_z = 0 on the bottom face, u_z = -delta on the top face, and per
/// node-connected component a 3-2-1 lock: the bottom node with minimum x
/// fixes u_x and u_y, the bottom node with maximum x fixes u_y.
ConstrainedSystem apply_compression_bcs(SymmetricBlockMatrix stiffness, const HexMesh& mesh,
                                        const CompressionSetup& setup);

/// Initial guess: the uniform compression field u_z = -delta (z - z_min) / H.
std::vector<double> uniform_strain_guess(const HexMesh& mesh, const ConstrainedSystem& system);

SolveResult solve(const ConstrainedSystem& system, const SolverOptions& options = {},
                  std::span<const double> x0 = {}, const IterationObserver& observer = {});

struct ReactionForces {
  double top = 0.0;     // sum of (K u)_z over top nodes
  double bottom = 0.0;  // sum of (K u)_z over bottom nodes

  /// Compressive platen force, positive in compression.
  double force() const { return -top; }
  double imbalance() const { return top == 0.0 ? std::abs(bottom) : std::abs(top + bottom) / std::abs(top); }
};

ReactionForces reaction_force(const ConstrainedSystem& system, std::span<const double> u);

struct EffectiveModulus {
  double stress = 0.0;   // MPa
  double modulus = 0.0;  // MPa
};

/// sigma = F / S, E = sigma / (delta / H).
EffectiveModulus effective_modulus(double force, double area, double displacement, double height);

struct CompressionResult {
  double force = 0.0;       // N
  double area = 0.0;        // mm^2
  double stress = 0.0;      // MPa
  double modulus = 0.0;     // MPa
  double height = 0.0;      // mm
  double displacement = 0.0;
  long iterations = 0;
  double residual = 0.0;
  double reaction_imbalance = 0.0;
  std::size_t dofs = 0;
  std::vector<double> u;    // nodal displacements, mm
};

/// assemble -> constrain -> solve -> reactions -> modulus.
CompressionResult run_compression(const HexMesh& mesh, const MaterialSpec& material,
                                  const CompressionSetup& setup, const SolverOptions& options = {});

/// Per-element von Mises stress at the element centre for a displacement
/// field (for VTK export).
std::vector<double> element_von_mises(const HexMesh& mesh, const MaterialSpec& material,
                                      std::span<const double> u);

}  // namespace tpmsvox
