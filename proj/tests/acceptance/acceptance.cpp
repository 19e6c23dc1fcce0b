// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Expensive FE points are computed once and shared between criteria.

#include "../unit/oracles.hpp"

#include "tpmsvox/convergence.hpp"
#include "tpmsvox/csv.hpp"
#include "tpmsvox/fem.hpp"
#include "tpmsvox/implicit_geometry.hpp"
#include "tpmsvox/pcg.hpp"
#include "tpmsvox/study.hpp"
#include "tpmsvox/surface.hpp"
#include "tpmsvox/voxel_mesher.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using namespace tpmsvox;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void run_criterion(int id, const char* title, const std::function<void(Verdict&)>& body) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("criterion %d %s %s:%s (%.1f s)\n", id, v.pass ? "PASS" : "FAIL", title, v.detail.str().c_str(), s);
  std::fflush(stdout);
}

// Corner-based scaled Jacobian written from the definition: at every corner
// take the three outgoing edges in right-handed order for the ideal brick.
double independent_scaled_jacobian(const HexCorners& x) {
  static const int nbr[8][3] = {{1, 3, 4}, {2, 0, 5}, {3, 1, 6}, {0, 2, 7},
                                {7, 5, 0}, {4, 6, 1}, {5, 7, 2}, {6, 4, 3}};
  double worst = 1.0;
  for (int c = 0; c < 8; ++c) {
    const Vec3 a = x[nbr[c][0]] - x[c], b = x[nbr[c][1]] - x[c], d = x[nbr[c][2]] - x[c];
    const double sj = a.dot(b.cross(d)) / (a.norm() * b.norm() * d.norm());
    worst = std::min(worst, sj);
  }
  return worst;
}

struct Point {
  double h = 0.0;
  double mj = 0.0;
  std::size_t elements = 0;
  double rd_mesh = 0.0;
  double min_sj = 0.0;     // independent recomputation
  bool all_sj_one = false;
  double modulus = 0.0;
  double imbalance = 0.0;
  long iterations = 0;
};

/// Memoised FE points keyed by (lattice tag, h, MJ).
class Runs {
 public:
  explicit Runs(StudyConfig config) : config_(std::move(config)) {}

  const ImplicitLattice& lattice(const std::string& tag) {
    auto it = lattices_.find(tag);
    if (it != lattices_.end()) return it->second;
    StudyConfig c = config_;
    std::optional<double> rd;
    if (tag == "graded") {
      c.lattice.graded = true;
    } else {
      rd = std::stod(tag);
    }
    return lattices_.emplace(tag, build_lattice(c, rd).lattice).first->second;
  }

  const Point& get(const std::string& tag, double h, double mj) {
    const auto key = std::make_tuple(tag, h, mj);
    auto it = points_.find(key);
    if (it != points_.end()) return it->second;

    const auto t0 = Clock::now();
    const MeshOutcome m = mesh_point(config_, lattice(tag), h, mj);
    Point p;
    p.h = h;
    p.mj = mj;
    p.elements = m.mesh.element_count();
    p.rd_mesh = m.quality.relative_density;
    p.min_sj = 1.0;
    p.all_sj_one = true;
    for (std::size_t e = 0; e < m.mesh.element_count(); ++e) {
      const double sj = independent_scaled_jacobian(m.mesh.corners(e));
      p.min_sj = std::min(p.min_sj, sj);
      if (sj != 1.0) p.all_sj_one = false;
    }
    CompressionSetup setup;
    setup.displacement = config_.top_displacement_mm;
    const CompressionResult r = run_compression(m.mesh, config_.material, setup, config_.solver);
    p.modulus = r.modulus;
    p.imbalance = r.reaction_imbalance;
    p.iterations = r.iterations;
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("  point %-6s h=%-5g MJ=%-4g elements=%-7zu RD=%.4f minSJ=%.4f E=%.1f MPa iters=%ld (%.1f s)\n",
                tag.c_str(), h, mj, p.elements, p.rd_mesh, p.min_sj, p.modulus, p.iterations, s);
    std::fflush(stdout);
    return points_.emplace(key, p).first->second;
  }

  const std::map<std::tuple<std::string, double, double>, Point>& all() const { return points_; }
  const StudyConfig& config() const { return config_; }

 private:
  StudyConfig config_;
  std::map<std::string, ImplicitLattice> lattices_;
  std::map<std::tuple<std::string, double, double>, Point> points_;
};

MeshStudy study(Runs& runs, const std::string& tag, double mj, const std::vector<double>& sizes) {
  MeshStudy s{tag + " MJ=" + format_number(mj), {}};
  for (double h : sizes) s.points.push_back({h, runs.get(tag, h, mj).modulus});
  return s;
}

MeshStudy triple(double f3, double f2, double f1) { return {"", {{0.4, f3}, {0.2, f2}, {0.1, f1}}}; }

HexMesh distorted_box(int n, double h, double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  std::vector<Vec3> nodes;
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        Vec3 p(i * h, j * h, k * h);
        if (i > 0 && i < n && j > 0 && j < n && k > 0 && k < n) p += Vec3(u(rng), u(rng), u(rng)) * h;
        nodes.push_back(p);
      }
  auto id = [&](int i, int j, int k) { return static_cast<std::uint32_t>(i + (n + 1) * (j + (n + 1) * k)); };
  std::vector<HexConnectivity> el;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        el.push_back({id(i, j, k), id(i + 1, j, k), id(i + 1, j + 1, k), id(i, j + 1, k), id(i, j, k + 1),
                      id(i + 1, j, k + 1), id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)});
  return HexMesh(nodes, el, h, Box::cube(n * h));
}

const std::vector<double> kSizes{0.5, 0.25, 0.125};

}  // namespace

int main() {
  // The standard desk-scale case: RD 0.45 network gyroid, 5 mm cells,
  // 2 x 2 x 2 cells, 0.05 mm top displacement.
  StudyConfig config;
  config.lattice.relative_density = 0.45;
  config.lattice.rd_bottom = 0.35;
  config.lattice.rd_top = 0.55;
  Runs runs(config);
  const std::string uniform = "0.45";

  // Every FE point the criteria use, computed up front so the quality and
  // density checks see all of them.
  // A failing point is reported here and raised again by the criterion
  // that needs it.
  std::printf("computing FE points\n");
  std::vector<std::tuple<std::string, double, double>> warm;
  for (double h : kSizes)
    for (double mj : {1.0, 0.3}) warm.emplace_back(uniform, h, mj);
  for (double mj : {0.8, 0.6, 0.45, 0.2}) warm.emplace_back(uniform, 0.25, mj);
  for (const char* rd : {"0.2", "0.3"}) warm.emplace_back(rd, 0.25, 0.3);
  for (double h : kSizes) warm.emplace_back("graded", h, 0.3);
  for (const auto& [tag, h, mj] : warm) {
    try {
      runs.get(tag, h, mj);
    } catch (const std::exception& e) {
      std::printf("  point %s h=%g MJ=%g failed: %s\n", tag.c_str(), h, mj, e.what());
    }
  }

  run_criterion(1, "GCI reproduction", [](Verdict& v) {
    auto near = [&](double got, double want, double tol, const std::string& what) {
      v.require(std::abs(got - want) <= tol, what + " " + format_number(got) + " vs " + format_number(want));
    };
    const auto a = gci_report(triple(42.756, 29.986, 25.004));
    const auto b = gci_report(triple(27.553, 21.093, 20.137));
    near(a.p, 1.358, 0.001, "p");
    near(b.p, 2.756, 0.001, "p");
    near(a.f_asym, 21.817, 0.005, "f_asym");
    near(b.f_asym, 19.97, 0.005, "f_asym");
    near(a.gci12, 15.932, 0.005, "GCI12");
    near(b.gci12, 1.031, 0.005, "GCI12");
    near(a.gci23, 40.838, 0.01, "GCI23");
    near(b.gci23, 6.965, 0.01, "GCI23");
    near(a.ra, 1.0, 1e-4, "Ra");
    near(b.ra, 1.0, 1e-4, "Ra");
    const auto g = gci_report(triple(41.40, 27.53, 23.25));
    near(g.p, 1.696, 0.05, "graded p");
    near(g.f_asym, 21.34, 0.05, "graded f_asym");
    near(g.gci12, 10.27, 0.05, "graded GCI12");
    near(g.gci23, 33.28, 0.05, "graded GCI23");
    const auto g2 = gci_report(triple(36.94, 19.52, 19.24));
    near(g2.p, 5.986, 0.05, "graded two-parameter p");
    v.detail << " uniform p " << a.p << "/" << b.p << ", f_asym " << a.f_asym << "/" << b.f_asym << ", GCI12 "
             << a.gci12 << "/" << b.gci12 << "%, GCI23 " << a.gci23 << "/" << b.gci23 << "%; graded voxel p "
             << g.p << ", graded two-parameter p " << g2.p << " (tol 0.001/0.005/0.005/0.01, graded 0.05)";
  });

  run_criterion(2, "homogeneous block", [&](Verdict& v) {
    StudyConfig c = config;
    c.lattice.relative_density = 1.0;
    const auto solid = build_lattice(c).lattice;
    const MeshOutcome m = mesh_point(c, solid, 0.5, 1.0);
    CompressionSetup setup;
    setup.displacement = c.top_displacement_mm;
    const auto r = run_compression(m.mesh, c.material, setup, c.solver);
    const double err = std::abs(r.modulus - 121000.0) / 121000.0;
    v.require(std::abs(m.quality.relative_density - 1.0) < 1e-12, "mesh is not solid");
    v.require(err < 1e-3, "E_eff off by more than 0.1%");
    v.require(r.reaction_imbalance < 1e-6, "reaction imbalance above 1e-6");
    v.detail << " 10 mm cube at h=0.5, E_eff " << r.modulus << " MPa (rel err " << err
             << " < 1e-3), reaction imbalance " << r.reaction_imbalance << " (< 1e-6)";
  });

  run_criterion(3, "convergence structure", [&](Verdict& v) {
    const MeshStudy voxel = study(runs, uniform, 1.0, kSizes);
    const MeshStudy two = study(runs, uniform, 0.3, kSizes);
    for (const MeshStudy* s : {&voxel, &two})
      v.require(s->points[0].f > s->points[1].f && s->points[1].f > s->points[2].f,
                "(a) not monotone for " + s->label);
    for (std::size_t i = 0; i < kSizes.size(); ++i)
      v.require(voxel.points[i].f > two.points[i].f, "(b) E(MJ=1) <= E(MJ=0.3) at h=" + format_number(kSizes[i]));
    const auto rv = gci_report(voxel);
    const auto rt = gci_report(two);
    v.require(rt.p > rv.p, "(c) p(MJ=0.3) <= p(MJ=1)");
    v.require(rt.gci12 < rv.gci12, "(d) GCI12(MJ=0.3) >= GCI12(MJ=1)");
    const double gap = std::abs(rv.f_asym - rt.f_asym) / std::min(rv.f_asym, rt.f_asym);
    v.require(gap < 0.10, "(e) asymptotes differ by 10% or more");
    v.detail << " E(MJ=1) " << voxel.points[0].f << " > " << voxel.points[1].f << " > " << voxel.points[2].f
             << "; E(MJ=0.3) " << two.points[0].f << " > " << two.points[1].f << " > " << two.points[2].f
             << "; p " << rt.p << " > " << rv.p << "; GCI12 " << rt.gci12 << "% < " << rv.gci12
             << "%; asymptotes " << rv.f_asym << " vs " << rt.f_asym << " (gap " << 100 * gap << "% < 10%)";
  });

  run_criterion(4, "MJ stabilisation", [&](Verdict& v) {
    std::map<double, double> e;
    for (double mj : {1.0, 0.8, 0.6, 0.45, 0.3, 0.2}) e[mj] = runs.get(uniform, 0.25, mj).modulus;
    const double low = std::abs(e[0.2] - e[0.3]) / e[0.3];
    const double high = std::abs(e[1.0] - e[0.3]) / e[0.3];
    v.require(low < 0.02, "|E(0.2) - E(0.3)| / E(0.3) >= 2%");
    v.require(high > 0.05, "|E(1) - E(0.3)| / E(0.3) <= 5%");
    v.detail << " h=0.25, E over MJ {1,0.8,0.6,0.45,0.3,0.2} = " << e[1.0] << ", " << e[0.8] << ", " << e[0.6]
             << ", " << e[0.45] << ", " << e[0.3] << ", " << e[0.2] << "; |dE(0.2,0.3)| " << 100 * low
             << "% < 2%, |dE(1,0.3)| " << 100 * high << "% > 5%";
  });

  run_criterion(5, "mesh-quality guarantee", [&](Verdict& v) {
    std::size_t conformed = 0, voxel = 0;
    double worst = 1.0;
    for (const auto& [key, p] : runs.all()) {
      if (p.mj == 0.3) {
        ++conformed;
        worst = std::min(worst, p.min_sj);
        v.require(p.min_sj >= 0.3 - 1e-9, std::get<0>(key) + " h=" + format_number(p.h) + " below 0.3");
      }
      if (p.mj == 1.0) {
        ++voxel;
        v.require(p.all_sj_one, std::get<0>(key) + " h=" + format_number(p.h) + " has SJ != 1");
      }
    }
    v.require(conformed > 0 && voxel > 0, "no meshes to check");
    v.detail << " " << conformed << " conformed meshes at MJ=0.3, worst independent SJ " << worst
             << " (>= 0.3 - 1e-9); " << voxel << " MJ=1 meshes with every SJ exactly 1";
  });

  run_criterion(6, "density fidelity", [&](Verdict& v) {
    double worst = 0.0;
    for (double target : {0.1, 0.2, 0.3, 0.35, 0.45, 0.55}) {
      const auto cal = calibrate_offset(Vec3::Constant(5.0), Topology::network, target);
      const double rd = oracle::network_fraction(cal.offset, 5.0, 1'000'000, 20240917);
      worst = std::max(worst, std::abs(rd - target));
      v.require(std::abs(rd - target) < 0.005, "RD " + format_number(rd) + " for target " + format_number(target));
    }
    v.detail << " max |RD - target| over 6 targets " << worst << " (< 0.005, N=1e6 Monte-Carlo);";
    for (double h : kSizes) {
      const double dv = std::abs(runs.get(uniform, h, 1.0).rd_mesh - 0.45);
      const double dt = std::abs(runs.get(uniform, h, 0.3).rd_mesh - 0.45);
      v.require(dt < dv, "conformed RD not closer at h=" + format_number(h));
      v.detail << " h=" << h << ": |dRD| " << dt << " < " << dv << ";";
    }
  });

  run_criterion(7, "Gibson-Ashby", [&](Verdict& v) {
    std::vector<DensityModulusPoint> synthetic;
    for (double rd : {0.1, 0.2, 0.3, 0.45, 0.6}) synthetic.push_back({rd, 1.11 * std::pow(rd, 1.96)});
    const auto exact = fit_gibson_ashby(synthetic);
    v.require(std::abs(exact.c1 - 1.11) < 1e-9 && std::abs(exact.m - 1.96) < 1e-9, "synthetic coefficients");
    v.require(std::abs(exact.r2 - 1.0) < 1e-12, "synthetic R2");
    std::vector<DensityModulusPoint> pipeline;
    for (double rd : {0.2, 0.3, 0.45})
      pipeline.push_back({rd, runs.get(format_number(rd), 0.25, 0.3).modulus / config.material.youngs_modulus});
    const auto fit = fit_gibson_ashby(pipeline);
    v.require(fit.m >= 1.7 && fit.m <= 2.5, "m outside [1.7, 2.5]");
    v.require(fit.r2 > 0.99, "R2 <= 0.99");
    v.detail << " synthetic C1 " << exact.c1 << ", m " << exact.m << ", 1 - R2 " << 1.0 - exact.r2
             << " (< 1e-12); pipeline C1 " << fit.c1 << ", m " << fit.m << " (in [1.7, 2.5]), R2 " << fit.r2
             << " (> 0.99)";
  });

  run_criterion(8, "graded structure", [&](Verdict& v) {
    const auto graded = gci_report(study(runs, "graded", 0.3, kSizes));
    const auto flat = gci_report(study(runs, uniform, 0.3, kSizes));
    v.require(graded.f_asym < flat.f_asym, "graded asymptote not below uniform");
    v.require(graded.gci12 <= flat.gci12, "graded GCI12 above uniform");
    v.detail << " asymptote " << graded.f_asym << " < " << flat.f_asym << " MPa; GCI12 " << graded.gci12
             << "% <= " << flat.gci12 << "% (two-parameter, MJ=0.3)";
  });

  run_criterion(9, "numerical kernels", [&](Verdict& v) {
    // Patch test through the library PCG: prescribe a linear field on the
    // boundary of a distorted 3 x 3 x 3 mesh and solve for the interior.
    const HexMesh mesh = distorted_box(3, 1.0, 0.2, 21);
    SymmetricBlockMatrix k = assemble(mesh, MaterialSpec{});
    Mat3 grad;
    grad << 1e-3, 2e-4, -3e-4, 5e-4, -2e-3, 1e-4, -1e-4, 3e-4, 8e-4;
    const std::size_t nn = mesh.node_count();
    std::vector<double> exact(3 * nn), fixed_u(3 * nn, 0.0), rhs(3 * nn), ku(3 * nn);
    std::vector<char> fixed(nn, 0);
    for (std::size_t n = 0; n < nn; ++n) {
      const Vec3& p = mesh.nodes()[n];
      const Vec3 u = grad * p;
      for (int a = 0; a < 3; ++a) exact[3 * n + a] = u[a];
      for (int a = 0; a < 3; ++a) fixed[n] = fixed[n] || p[a] == 0.0 || p[a] == 3.0;
      if (fixed[n])
        for (int a = 0; a < 3; ++a) fixed_u[3 * n + a] = u[a];
    }
    k.multiply(fixed_u, ku);
    for (std::size_t d = 0; d < 3 * nn; ++d) rhs[d] = fixed[d / 3] ? fixed_u[d] : -ku[d];
    for (std::uint32_t i = 0; i < nn; ++i)
      for (std::uint32_t j = i; j < nn; ++j) {
        double* b = k.find(i, j);
        if (!b || (!fixed[i] && !fixed[j])) continue;
        for (int q = 0; q < 9; ++q) b[q] = 0.0;
        if (i == j)
          for (int a = 0; a < 3; ++a) b[4 * a] = 1.0;
      }
    const auto sol = pcg_solve(k, rhs, {1e-12, 0});
    double patch = 0.0, scale = 0.0;
    for (std::size_t d = 0; d < 3 * nn; ++d) {
      patch = std::max(patch, std::abs(sol.x[d] - exact[d]));
      scale = std::max(scale, std::abs(exact[d]));
    }
    v.require(patch / scale < 1e-9, "patch test");

    // Rigid-body null space of an irregular element.
    HexCorners x;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> jit(-0.15, 0.15);
    for (int c = 0; c < 8; ++c)
      x[c] = Vec3((kHexCorners[c][0] + 1) * 0.5 + jit(rng), (kHexCorners[c][1] + 1) * 0.6 + jit(rng),
                  (kHexCorners[c][2] + 1) * 0.4 + jit(rng));
    const ElementStiffness ke = hex8_stiffness(x, MaterialSpec{});
    Eigen::SelfAdjointEigenSolver<ElementStiffness> eig(ke);
    const auto& lambda = eig.eigenvalues();
    int nullity = 0;
    for (int i = 0; i < 24; ++i) nullity += std::abs(lambda[i]) < 1e-9 * lambda[23];
    v.require(nullity == 6 && lambda[6] > 1e-6 * lambda[23], "element null space is not six-dimensional");

    // Analytic gradient against central differences.
    const auto g = ImplicitLattice::uniform(5.0, 0.1);
    double grad_err = 0.0;
    for (std::uint64_t i = 0; i < 200; ++i) {
      const Vec3 p = 10.0 * counter_uniform_point(99, i);
      const Vec3 an = g.gradient(p);
      const double eps = 1e-5;
      for (int a = 0; a < 3; ++a) {
        Vec3 dp = Vec3::Zero();
        dp[a] = eps;
        grad_err = std::max(grad_err, std::abs((g.field(p + dp) - g.field(p - dp)) / (2 * eps) - an[a]));
      }
    }
    v.require(grad_err < 1e-6, "field gradient");

    // Exact-series recovery for f = a + b h^q.
    double series_err = 0.0;
    for (double q : {0.7, 1.5, 2.0, 3.3}) {
      const double a = 20.0, b = 4.0;
      MeshStudy s{"", {}};
      for (double h : {0.4, 0.2, 0.1}) s.points.push_back({h, a + b * std::pow(h, q)});
      const auto rep = gci_report(s);
      series_err = std::max({series_err, std::abs(rep.p - q), std::abs(rep.f_asym - a)});
    }
    v.require(series_err < 1e-10, "exact-series recovery");

    // Watertight STL whose volume agrees with Monte-Carlo.
    const auto lat = ImplicitLattice::uniform(5.0, 0.152344);
    const Box box = Box::cube(10.0);
    const TriMesh surf = extract_surface(lat, box, {64, true});
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
    for (const auto& t : surf.triangles)
      for (int a = 0; a < 3; ++a) ++directed[{t[a], t[(a + 1) % 3]}];
    bool closed = true;
    for (const auto& [edge, count] : directed) {
      const auto twin = directed.find({edge.second, edge.first});
      closed = closed && count == 1 && twin != directed.end() && twin->second == 1;
    }
    std::size_t hit = 0;
    std::mt19937_64 mc(77);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const std::size_t n_mc = 1'000'000;
    for (std::size_t i = 0; i < n_mc; ++i) hit += oracle::gyroid(u(mc), u(mc), u(mc), 5.0) >= 0.152344;
    const double v_mc = static_cast<double>(hit) / n_mc * box.volume();
    const double vol_err = std::abs(enclosed_volume(surf) - v_mc) / v_mc;
    v.require(closed, "STL not watertight");
    v.require(vol_err < 0.01, "STL volume off by 1% or more");

    v.detail << " patch max rel err " << patch / scale << " (< 1e-9); element nullity " << nullity
             << " (= 6); gradient err " << grad_err << " (< 1e-6); series err " << series_err
             << " (< 1e-10); STL " << (closed ? "watertight" : "open") << ", volume err " << 100 * vol_err
             << "% (< 1%)";
  });

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
