#include "tpmsvox/fem.hpp"

#include "tpmsvox/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tpmsvox {

void MaterialSpec::validate() const {
  if (!(youngs_modulus > 0.0)) throw ConfigError("Young's modulus must be > 0");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5))
    throw ConfigError("Poisson's ratio must lie in (-1, 0.5)");
}

Matrix6 isotropic_elasticity(double e, double nu) {
  const double lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = e / (2.0 * (1.0 + nu));
  Matrix6 d = Matrix6::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d(i, j) = lambda;
    d(i, i) = lambda + 2.0 * mu;
    d(i + 3, i + 3) = mu;
  }
  return d;
}

namespace {

using StrainDisplacement = Eigen::Matrix<double, 6, 24>;

/// Physical shape-function gradients at a natural point; returns det J.
double physical_gradients(const HexCorners& x, double xi, double eta, double zeta,
                          Eigen::Matrix<double, 3, 8>& grad) {
  const auto dn = hex_shape_derivatives(xi, eta, zeta);
  Mat3 j = Mat3::Zero();
  for (int i = 0; i < 8; ++i) j += dn.col(i) * x[i].transpose();
  const double det = j.determinant();
  if (det > 0.0) grad = j.inverse() * dn;
  return det;
}

StrainDisplacement strain_displacement(const Eigen::Matrix<double, 3, 8>& g) {
  StrainDisplacement b = StrainDisplacement::Zero();
  for (int i = 0; i < 8; ++i) {
    const double bx = g(0, i), by = g(1, i), bz = g(2, i);
    const int c = 3 * i;
    b(0, c) = bx;
    b(1, c + 1) = by;
    b(2, c + 2) = bz;
    b(3, c) = by;
    b(3, c + 1) = bx;
    b(4, c + 1) = bz;
    b(4, c + 2) = by;
    b(5, c) = bz;
    b(5, c + 2) = bx;
  }
  return b;
}

const double kGauss = 1.0 / std::sqrt(3.0);

ElementStiffness stiffness_with_id(const HexCorners& x, const Matrix6& d, std::size_t element) {
  ElementStiffness k = ElementStiffness::Zero();
  Eigen::Matrix<double, 3, 8> grad;
  for (const auto& c : kHexCorners) {
    const double det = physical_gradients(x, kGauss * c[0], kGauss * c[1], kGauss * c[2], grad);
    if (!(det > 0.0)) throw NonPositiveJacobian(element, det);
    const StrainDisplacement b = strain_displacement(grad);
    k.noalias() += b.transpose() * (d * b) * det;
  }
  // Symmetrise away round-off.
  return 0.5 * (k + k.transpose());
}

bool is_axis_aligned_cube(const HexCorners& x, double h) {
  const double tol = 1e-12 * h;
  for (int a = 0; a < 8; ++a) {
    const auto& c = kHexCorners[a];
    for (int axis = 0; axis < 3; ++axis) {
      const double expected = x[0][axis] + (c[axis] > 0 ? h : 0.0);
      if (std::abs(x[a][axis] - expected) > tol) return false;
    }
  }
  return true;
}

}  // namespace

ElementStiffness hex8_stiffness(const HexCorners& x, const MaterialSpec& material) {
  material.validate();
  return stiffness_with_id(x, isotropic_elasticity(material.youngs_modulus, material.poisson_ratio), 0);
}

SymmetricBlockMatrix assemble(const HexMesh& mesh, const MaterialSpec& material) {
  material.validate();
  const Matrix6 d = isotropic_elasticity(material.youngs_modulus, material.poisson_ratio);
  auto k = SymmetricBlockMatrix::from_elements(mesh.node_count(), mesh.elements());

  // Undistorted voxels all share one element matrix.
  const double h = mesh.element_size();
  bool have_cube = false;
  ElementStiffness cube;

  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const HexCorners x = mesh.corners(e);
    ElementStiffness local;
    if (h > 0.0 && is_axis_aligned_cube(x, h)) {
      if (!have_cube) {
        cube = stiffness_with_id(x, d, e);
        have_cube = true;
      }
      local = cube;
    } else {
      local = stiffness_with_id(x, d, e);
    }
    const auto& conn = mesh.elements()[e];
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        const auto gi = conn[a], gj = conn[b];
        if (gi > gj) continue;
        double* blk = k.find(gi, gj);
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) blk[3 * r + c] += local(3 * a + r, 3 * b + c);
      }
  }
  return k;
}

// ---------------------------------------------------------------------------
// Boundary conditions

namespace {

class NodeSets {
 public:
  explicit NodeSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }
  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

ConstrainedSystem apply_compression_bcs(SymmetricBlockMatrix stiffness, const HexMesh& mesh,
                                        const CompressionSetup& setup) {
  if (setup.displacement < 0.0) throw std::invalid_argument("top displacement must be >= 0");
  if (stiffness.node_count() != mesh.node_count())
    throw std::invalid_argument("stiffness matrix does not match the mesh");

  ConstrainedSystem sys;
  const Box& box = mesh.domain();
  sys.height = box.extent().z();
  sys.area = box.extent().x() * box.extent().y();
  sys.displacement = setup.displacement;

  const auto& x = mesh.nodes();
  const std::size_t nn = mesh.node_count();
  std::vector<std::int8_t> face(nn, 0);  // -1 bottom, +1 top
  for (std::uint32_t n = 0; n < nn; ++n) {
    if (x[n].z() <= box.lo.z() + setup.face_tolerance) {
      face[n] = -1;
      sys.bottom_nodes.push_back(n);
    } else if (x[n].z() >= box.hi.z() - setup.face_tolerance) {
      face[n] = 1;
      sys.top_nodes.push_back(n);
    }
  }
  if (sys.bottom_nodes.empty()) throw NoBottomFace("no mesh nodes on the bottom face z = z_min");
  if (sys.top_nodes.empty()) throw NoTopFace("no mesh nodes on the top face z = z_max");

  const std::size_t ndof = 3 * nn;
  sys.constrained.assign(ndof, 0);
  sys.prescribed.assign(ndof, 0.0);
  for (auto n : sys.bottom_nodes) sys.constrained[3 * n + 2] = 1;
  for (auto n : sys.top_nodes) {
    sys.constrained[3 * n + 2] = 1;
    sys.prescribed[3 * n + 2] = -setup.displacement;
  }

  // Rigid-body lock per node-connected component.
  NodeSets sets(nn);
  for (const auto& conn : mesh.elements())
    for (int a = 1; a < 8; ++a) sets.unite(conn[0], conn[a]);
  std::vector<std::int64_t> lock_min(nn, -1), lock_max(nn, -1);
  for (auto n : sys.bottom_nodes) {
    const auto r = sets.find(n);
    auto better_min = [&](std::uint32_t a, std::uint32_t b) {
      return std::tie(x[a].x(), x[a].y(), a) < std::tie(x[b].x(), x[b].y(), b);
    };
    auto better_max = [&](std::uint32_t a, std::uint32_t b) {
      if (x[a].x() != x[b].x()) return x[a].x() > x[b].x();
      return std::tie(x[a].y(), a) < std::tie(x[b].y(), b);
    };
    if (lock_min[r] < 0 || better_min(n, static_cast<std::uint32_t>(lock_min[r]))) lock_min[r] = n;
    if (lock_max[r] < 0 || better_max(n, static_cast<std::uint32_t>(lock_max[r]))) lock_max[r] = n;
  }
  std::vector<std::uint8_t> seen(nn, 0);
  for (const auto& conn : mesh.elements()) {
    const auto r = sets.find(conn[0]);
    if (seen[r]) continue;
    seen[r] = 1;
    if (lock_min[r] < 0) {
      std::ostringstream msg;
      msg << "component containing node " << r << " has no node on the bottom face";
      throw UnconstrainedRigidBody(msg.str());
    }
    if (lock_min[r] == lock_max[r]) {
      std::ostringstream msg;
      msg << "rigid-body lock nodes coincide (node " << lock_min[r] << ")";
      throw UnconstrainedRigidBody(msg.str());
    }
    const auto a = static_cast<std::uint32_t>(lock_min[r]);
    const auto b = static_cast<std::uint32_t>(lock_max[r]);
    sys.constrained[3 * a] = 1;
    sys.constrained[3 * a + 1] = 1;
    sys.constrained[3 * b + 1] = 1;
    sys.lock_nodes.push_back(a);
    sys.lock_nodes.push_back(b);
  }

  // Keep the unconstrained z rows of the loaded faces for the reactions.
  std::vector<std::int64_t> row_of(nn, -1);
  for (auto n : sys.top_nodes) {
    row_of[n] = static_cast<std::int64_t>(sys.top_rows.size());
    sys.top_rows.push_back({3 * n + 2, {}});
  }
  for (auto n : sys.bottom_nodes) {
    row_of[n] = static_cast<std::int64_t>(sys.bottom_rows.size());
    sys.bottom_rows.push_back({3 * n + 2, {}});
  }
  auto row_for = [&](std::uint32_t n) -> ConstrainedSystem::Row& {
    return face[n] > 0 ? sys.top_rows[row_of[n]] : sys.bottom_rows[row_of[n]];
  };
  const auto& rp = stiffness.row_ptr();
  const auto& cols = stiffness.cols();
  auto& vals = stiffness.values();
  for (std::uint32_t i = 0; i < nn; ++i)
    for (auto k = rp[i]; k < rp[i + 1]; ++k) {
      const std::uint32_t j = cols[k];
      const double* b = vals.data() + 9 * k;
      if (face[i] != 0)
        for (int c = 0; c < 3; ++c) row_for(i).entries.emplace_back(3 * j + c, b[6 + c]);
      if (face[j] != 0 && j != i)
        for (int r = 0; r < 3; ++r) row_for(j).entries.emplace_back(3 * i + r, b[3 * r + 2]);
    }

  // Move prescribed coupling to the right-hand side, then eliminate.
  std::vector<double> ku(ndof);
  stiffness.multiply(sys.prescribed, ku);
  sys.rhs.assign(ndof, 0.0);
  for (std::size_t d = 0; d < ndof; ++d) sys.rhs[d] = sys.constrained[d] ? sys.prescribed[d] : -ku[d];

  for (std::uint32_t i = 0; i < nn; ++i)
    for (auto k = rp[i]; k < rp[i + 1]; ++k) {
      const std::uint32_t j = cols[k];
      double* b = vals.data() + 9 * k;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          const bool cr = sys.constrained[3 * i + r] != 0;
          const bool cc = sys.constrained[3 * j + c] != 0;
          if (!cr && !cc) continue;
          b[3 * r + c] = (i == j && r == c) ? 1.0 : 0.0;
        }
    }
  sys.matrix = std::move(stiffness);
  return sys;
}

std::vector<double> uniform_strain_guess(const HexMesh& mesh, const ConstrainedSystem& system) {
  std::vector<double> u(3 * mesh.node_count(), 0.0);
  const double z0 = mesh.domain().lo.z();
  for (std::size_t n = 0; n < mesh.node_count(); ++n)
    u[3 * n + 2] = -system.displacement * (mesh.nodes()[n].z() - z0) / system.height;
  for (std::size_t d = 0; d < u.size(); ++d)
    if (system.constrained[d]) u[d] = system.prescribed[d];
  return u;
}

SolveResult solve(const ConstrainedSystem& system, const SolverOptions& options,
                  std::span<const double> x0, const IterationObserver& observer) {
  return pcg_solve(system.matrix, system.rhs, options, x0, observer);
}

ReactionForces reaction_force(const ConstrainedSystem& system, std::span<const double> u) {
  auto sum = [&](const std::vector<ConstrainedSystem::Row>& rows) {
    double s = 0.0;
    for (const auto& row : rows)
      for (const auto& [col, v] : row.entries) s += v * u[col];
    return s;
  };
  return {sum(system.top_rows), sum(system.bottom_rows)};
}

EffectiveModulus effective_modulus(double force, double area, double displacement, double height) {
  if (!(area > 0.0 && displacement > 0.0 && height > 0.0))
    throw std::invalid_argument("effective_modulus: S, delta and H must all be > 0");
  const double stress = force / area;
  return {stress, stress / (displacement / height)};
}

CompressionResult run_compression(const HexMesh& mesh, const MaterialSpec& material,
                                  const CompressionSetup& setup, const SolverOptions& options) {
  ConstrainedSystem sys = apply_compression_bcs(assemble(mesh, material), mesh, setup);
  const auto guess = uniform_strain_guess(mesh, sys);
  SolveResult sol = solve(sys, options, guess);
  const ReactionForces reactions = reaction_force(sys, sol.x);

  CompressionResult r;
  r.force = reactions.force();
  r.area = sys.area;
  r.height = sys.height;
  r.displacement = setup.displacement;
  r.iterations = sol.iterations;
  r.residual = sol.residual;
  r.reaction_imbalance = reactions.imbalance();
  r.dofs = sys.matrix.dof_count();
  if (setup.displacement > 0.0) {
    const auto em = effective_modulus(r.force, r.area, r.displacement, r.height);
    r.stress = em.stress;
    r.modulus = em.modulus;
  }
  r.u = std::move(sol.x);
  return r;
}

std::vector<double> element_von_mises(const HexMesh& mesh, const MaterialSpec& material,
                                      std::span<const double> u) {
  const Matrix6 d = isotropic_elasticity(material.youngs_modulus, material.poisson_ratio);
  std::vector<double> out(mesh.element_count(), 0.0);
  Eigen::Matrix<double, 3, 8> grad;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const HexCorners x = mesh.corners(e);
    if (!(physical_gradients(x, 0.0, 0.0, 0.0, grad) > 0.0)) continue;
    Eigen::Matrix<double, 24, 1> ue;
    for (int a = 0; a < 8; ++a)
      for (int c = 0; c < 3; ++c) ue(3 * a + c) = u[3 * mesh.elements()[e][a] + c];
    const Eigen::Matrix<double, 6, 1> s = d * (strain_displacement(grad) * ue);
    const double vm2 = 0.5 * ((s(0) - s(1)) * (s(0) - s(1)) + (s(1) - s(2)) * (s(1) - s(2)) +
                              (s(2) - s(0)) * (s(2) - s(0))) +
                       3.0 * (s(3) * s(3) + s(4) * s(4) + s(5) * s(5));
    out[e] = std::sqrt(vm2);
  }
  return out;
}

}  // namespace tpmsvox
