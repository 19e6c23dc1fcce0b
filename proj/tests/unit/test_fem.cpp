#include "tpmsvox/errors.hpp"
#include "tpmsvox/fem.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>

using namespace tpmsvox;

namespace {

HexMesh box_mesh(int nx, int ny, int nz, double h, double jitter = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  std::vector<Vec3> nodes;
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        Vec3 p(i * h, j * h, k * h);
        const bool inner = i > 0 && i < nx && j > 0 && j < ny && k > 0 && k < nz;
        if (inner) p += Vec3(u(rng), u(rng), u(rng)) * h;
        nodes.push_back(p);
      }
  auto id = [&](int i, int j, int k) { return static_cast<std::uint32_t>(i + (nx + 1) * (j + (ny + 1) * k)); };
  std::vector<HexConnectivity> el;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        el.push_back({id(i, j, k), id(i + 1, j, k), id(i + 1, j + 1, k), id(i, j + 1, k), id(i, j, k + 1),
                      id(i + 1, j, k + 1), id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)});
  return HexMesh(nodes, el, h, Box{Vec3::Zero(), Vec3(nx * h, ny * h, nz * h)});
}

HexCorners distorted_hex() {
  HexCorners x;
  const double jitter[8][3] = {{0.05, -0.02, 0.0},  {0.1, 0.03, -0.04}, {-0.06, 0.08, 0.02}, {0.03, -0.1, 0.05},
                               {-0.04, 0.02, 0.09}, {0.07, -0.05, 0.1}, {0.0, 0.06, -0.08},  {-0.09, 0.0, 0.04}};
  for (int i = 0; i < 8; ++i)
    x[i] = Vec3((kHexCorners[i][0] + 1) / 2.0 + jitter[i][0], (kHexCorners[i][1] + 1) * 0.6 + jitter[i][1],
                (kHexCorners[i][2] + 1) * 0.4 + jitter[i][2]);
  return x;
}

/// The six rigid-body modes at the given points.
Eigen::MatrixXd rigid_modes(const std::vector<Vec3>& x) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(3 * x.size(), 6);
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (int a = 0; a < 3; ++a) t(3 * n + a, a) = 1.0;
    const Vec3& p = x[n];
    // Infinitesimal rotations about x, y, z.
    t(3 * n + 1, 3) = -p.z();
    t(3 * n + 2, 3) = p.y();
    t(3 * n + 0, 4) = p.z();
    t(3 * n + 2, 4) = -p.x();
    t(3 * n + 0, 5) = -p.y();
    t(3 * n + 1, 5) = p.x();
  }
  return t;
}

}  // namespace

TEST_CASE("isotropic elasticity matrix") {
  const Matrix6 d = isotropic_elasticity(121000.0, 0.34);
  const double lambda = 121000.0 * 0.34 / (1.34 * 0.32);
  const double mu = 121000.0 / 2.68;
  CHECK(d(0, 0) == doctest::Approx(lambda + 2 * mu));
  CHECK(d(0, 1) == doctest::Approx(lambda));
  CHECK(d(3, 3) == doctest::Approx(mu));
  // Uniaxial stress compliance recovers E.
  const Matrix6 c = d.inverse();
  CHECK(1.0 / c(0, 0) == doctest::Approx(121000.0));
  CHECK(-c(0, 1) / c(0, 0) == doctest::Approx(0.34));
}

TEST_CASE("element stiffness: symmetric, PSD, six-dimensional rigid null space") {
  const HexCorners x = distorted_hex();
  const ElementStiffness k = hex8_stiffness(x, MaterialSpec{});
  CHECK((k - k.transpose()).norm() < 1e-12 * k.norm());

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 24, 24>> eig(k);
  const auto& ev = eig.eigenvalues();
  const double scale = ev.maxCoeff();
  for (int i = 0; i < 6; ++i) CHECK(std::abs(ev[i]) < 1e-10 * scale);
  CHECK(ev[6] > 1e-6 * scale);

  const Eigen::MatrixXd t = rigid_modes({x.begin(), x.end()});
  CHECK((k * t).norm() < 1e-8 * k.norm());
}

TEST_CASE("global stiffness annihilates rigid-body modes") {
  const HexMesh mesh = box_mesh(3, 2, 2, 0.5, 0.1);
  const auto k = assemble(mesh, MaterialSpec{});
  const Eigen::MatrixXd kd = k.to_dense();
  const Eigen::MatrixXd t = rigid_modes(mesh.nodes());
  CHECK((kd * t).norm() < 1e-8 * k.frobenius_norm());
}

TEST_CASE("inverted element raises NonPositiveJacobian") {
  HexCorners x = distorted_hex();
  std::swap(x[0], x[4]);
  std::swap(x[1], x[5]);
  std::swap(x[2], x[6]);
  std::swap(x[3], x[7]);
  CHECK_THROWS_AS(hex8_stiffness(x, MaterialSpec{}), NonPositiveJacobian);
}

TEST_CASE("patch test: distorted mesh reproduces a uniform strain field") {
  const HexMesh mesh = box_mesh(3, 3, 3, 1.0, 0.2, 21);
  const MaterialSpec mat;
  const auto k = assemble(mesh, mat);
  Mat3 grad;
  grad << 1e-3, 2e-4, -3e-4, 5e-4, -2e-3, 1e-4, -1e-4, 3e-4, 8e-4;
  const std::size_t nn = mesh.node_count();
  std::vector<double> exact(3 * nn);
  for (std::size_t n = 0; n < nn; ++n) {
    const Vec3 u = grad * mesh.nodes()[n];
    for (int a = 0; a < 3; ++a) exact[3 * n + a] = u[a];
  }
  // Prescribe the field on every boundary node and solve for the interior.
  const Box& box = mesh.domain();
  std::vector<int> fixed(3 * nn, 0);
  for (std::size_t n = 0; n < nn; ++n) {
    const Vec3& p = mesh.nodes()[n];
    bool on = false;
    for (int a = 0; a < 3; ++a) on = on || p[a] == box.lo[a] || p[a] == box.hi[a];
    if (on)
      for (int a = 0; a < 3; ++a) fixed[3 * n + a] = 1;
  }
  const Eigen::MatrixXd kd = k.to_dense();
  std::vector<Eigen::Index> free_dofs;
  for (std::size_t d = 0; d < 3 * nn; ++d)
    if (!fixed[d]) free_dofs.push_back(static_cast<Eigen::Index>(d));
  REQUIRE(!free_dofs.empty());
  Eigen::VectorXd ue = Eigen::Map<const Eigen::VectorXd>(exact.data(), exact.size());
  Eigen::VectorXd uc = ue;
  for (auto d : free_dofs) uc[d] = 0.0;
  const Eigen::VectorXd rhs_full = -kd * uc;
  const Eigen::Index m = static_cast<Eigen::Index>(free_dofs.size());
  Eigen::MatrixXd kff(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rhs[i] = rhs_full[free_dofs[i]];
    for (Eigen::Index j = 0; j < m; ++j) kff(i, j) = kd(free_dofs[i], free_dofs[j]);
  }
  const Eigen::VectorXd uf = kff.ldlt().solve(rhs);
  for (Eigen::Index i = 0; i < m; ++i) CHECK(uf[i] == doctest::Approx(ue[free_dofs[i]]).epsilon(1e-8).scale(1e-3));

  // Constant stress everywhere.
  const auto vm = element_von_mises(mesh, mat, exact);
  for (double s : vm) CHECK(s == doctest::Approx(vm.front()).epsilon(1e-9));
}

TEST_CASE("homogeneous block: uniaxial analytic force and modulus") {
  // 20 x 20 x 20 mm, S = 400 mm^2, delta / H = 0.005.
  const HexMesh mesh = box_mesh(5, 5, 5, 4.0);
  CompressionSetup setup;
  setup.displacement = 0.1;
  const auto r = run_compression(mesh, MaterialSpec{}, setup);
  CHECK(r.area == doctest::Approx(400.0));
  CHECK(r.force == doctest::Approx(121000.0 * 0.005 * 400.0).epsilon(1e-6));
  CHECK(r.modulus == doctest::Approx(121000.0).epsilon(1e-6));
  CHECK(r.reaction_imbalance < 1e-6);
  // The solution is the analytic uniform field in z.
  for (std::size_t n = 0; n < mesh.node_count(); ++n)
    CHECK(r.u[3 * n + 2] == doctest::Approx(-0.1 * mesh.nodes()[n].z() / 20.0).epsilon(1e-8).scale(0.1));
}

TEST_CASE("zero displacement gives zero force") {
  const HexMesh mesh = box_mesh(2, 2, 2, 1.0);
  CompressionSetup setup;
  setup.displacement = 0.0;
  const auto r = run_compression(mesh, MaterialSpec{}, setup);
  CHECK(r.force == 0.0);
  CHECK(r.modulus == 0.0);
  const auto em = effective_modulus(0.0, 4.0, 0.01, 2.0);
  CHECK(em.modulus == 0.0);
  CHECK_THROWS_AS(effective_modulus(1.0, 0.0, 0.01, 2.0), std::invalid_argument);
}

TEST_CASE("linearity in displacement and base modulus; energy consistency") {
  const HexMesh mesh = box_mesh(3, 3, 3, 1.0, 0.15, 4);
  SolverOptions opts;
  opts.rel_tol = 1e-11;
  MaterialSpec mat;
  const auto r1 = run_compression(mesh, mat, {0.01}, opts);
  const auto r2 = run_compression(mesh, mat, {0.02}, opts);
  CHECK(r2.force == doctest::Approx(2.0 * r1.force).epsilon(1e-8));
  for (std::size_t i = 0; i < r1.u.size(); ++i) CHECK(r2.u[i] == doctest::Approx(2.0 * r1.u[i]).epsilon(1e-7).scale(1e-4));
  mat.youngs_modulus *= 3.0;
  const auto r3 = run_compression(mesh, mat, {0.01}, opts);
  CHECK(r3.force == doctest::Approx(3.0 * r1.force).epsilon(1e-8));

  // External work on the prescribed DOFs equals the strain energy u'Ku.
  const auto k = assemble(mesh, MaterialSpec{});
  std::vector<double> ku(r1.u.size());
  k.multiply(r1.u, ku);
  double internal = 0.0;
  for (std::size_t i = 0; i < ku.size(); ++i) internal += r1.u[i] * ku[i];
  const ConstrainedSystem sys = apply_compression_bcs(assemble(mesh, {}), mesh, {0.01});
  double external = 0.0;
  for (std::size_t d = 0; d < ku.size(); ++d)
    if (sys.constrained[d]) external += ku[d] * r1.u[d];
  CHECK(external == doctest::Approx(internal).epsilon(1e-6));
}

TEST_CASE("porous mesh is softer than the solid") {
  // Remove the central column of a 3 x 3 x 3 block.
  const HexMesh full = box_mesh(3, 3, 3, 1.0);
  std::vector<HexConnectivity> kept;
  for (std::size_t e = 0; e < full.element_count(); ++e)
    if (e % 9 != 4) kept.push_back(full.elements()[e]);
  std::vector<Vec3> nodes = full.nodes();
  // Unused nodes would be rigid-body free; drop them by rebuilding densely.
  std::vector<std::int64_t> map(nodes.size(), -1);
  std::vector<Vec3> used;
  for (auto& el : kept)
    for (auto& n : el) {
      if (map[n] < 0) {
        map[n] = static_cast<std::int64_t>(used.size());
        used.push_back(nodes[n]);
      }
      n = static_cast<std::uint32_t>(map[n]);
    }
  const HexMesh porous(used, kept, 1.0, full.domain());
  const auto r = run_compression(porous, MaterialSpec{}, {0.01});
  CHECK(r.modulus < 121000.0);
  CHECK(r.modulus == doctest::Approx(121000.0 * 8.0 / 9.0).epsilon(1e-6));
}

TEST_CASE("assembly is bit-identical between runs") {
  const HexMesh mesh = box_mesh(3, 2, 2, 0.5, 0.12, 8);
  const auto a = assemble(mesh, MaterialSpec{});
  const auto b = assemble(mesh, MaterialSpec{});
  CHECK(a.values() == b.values());
}

TEST_CASE("boundary-condition failures") {
  const HexMesh mesh = box_mesh(1, 1, 1, 1.0);
  // A floating element that touches neither loading face.
  std::vector<Vec3> nodes = mesh.nodes();
  for (int i = 0; i < 8; ++i) nodes.push_back(mesh.nodes()[mesh.elements()[0][i]] * 0.3 + Vec3(2.0, 2.0, 0.35));
  std::vector<HexConnectivity> el = mesh.elements();
  HexConnectivity c;
  for (std::uint32_t i = 0; i < 8; ++i) c[i] = 8 + i;
  el.push_back(c);
  const HexMesh floating(nodes, el, 1.0, Box{Vec3::Zero(), Vec3(3, 3, 1)});
  CHECK_THROWS_AS(apply_compression_bcs(assemble(floating, {}), floating, {0.01}), UnconstrainedRigidBody);

  const HexMesh low(mesh.nodes(), mesh.elements(), 1.0, Box{Vec3::Zero(), Vec3(1, 1, 2)});
  CHECK_THROWS_AS(apply_compression_bcs(assemble(low, {}), low, {0.01}), NoTopFace);
  const HexMesh high(mesh.nodes(), mesh.elements(), 1.0, Box{Vec3(0, 0, -1), Vec3(1, 1, 1)});
  CHECK_THROWS_AS(apply_compression_bcs(assemble(high, {}), high, {0.01}), NoBottomFace);
  CHECK_THROWS_AS(apply_compression_bcs(assemble(mesh, {}), mesh, {-0.01}), std::invalid_argument);

  MaterialSpec bad;
  bad.poisson_ratio = 0.5;
  CHECK_THROWS_AS(assemble(mesh, bad), ConfigError);
}
