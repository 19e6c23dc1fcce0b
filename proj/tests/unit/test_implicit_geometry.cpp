#include "oracles.hpp"

#include "tpmsvox/errors.hpp"
#include "tpmsvox/implicit_geometry.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

using namespace tpmsvox;

namespace {

Vec3 random_point(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("gyroid field at reference points") {
  const auto g = ImplicitLattice::uniform(5.0, 0.0);
  CHECK(std::abs(g.field({0, 0, 0})) < 1e-15);
  CHECK(g.field({1.25, 0, 0}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gyroid field matches an independent evaluation") {
  std::mt19937_64 rng(7);
  const auto g = ImplicitLattice::uniform(5.0, 0.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = random_point(rng, 20.0);
    CHECK(g.field(p) == doctest::Approx(oracle::gyroid(p.x(), p.y(), p.z(), 5.0)).epsilon(1e-13));
  }
}

TEST_CASE("gyroid field is periodic in every axis") {
  std::mt19937_64 rng(11);
  const ImplicitLattice g(Vec3(5.0, 4.0, 3.0), OffsetProfile::constant(0.0));
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = random_point(rng, 10.0);
    const double f = g.field(p);
    CHECK(g.field(p + Vec3(5.0, 0, 0)) == doctest::Approx(f).epsilon(1e-12).scale(1.0));
    CHECK(g.field(p + Vec3(0, 4.0, 0)) == doctest::Approx(f).epsilon(1e-12).scale(1.0));
    CHECK(g.field(p + Vec3(0, 0, 3.0)) == doctest::Approx(f).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("analytic gradient agrees with central differences") {
  std::mt19937_64 rng(13);
  const auto g = ImplicitLattice::uniform(5.0, 0.2);
  const double step = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = random_point(rng, 10.0);
    const Vec3 grad = g.gradient(p);
    for (int a = 0; a < 3; ++a) {
      Vec3 dp = Vec3::Zero();
      dp[a] = step;
      const double fd = (g.field(p + dp) - g.field(p - dp)) / (2 * step);
      CHECK(std::abs(grad[a] - fd) < 1e-6);
    }
  }
  // Gradient at the origin: d/dx sinX cosY = 2 pi / L.
  const Vec3 g0 = g.gradient({0, 0, 0});
  CHECK(g0.x() == doctest::Approx(2 * std::numbers::pi / 5.0));
}

TEST_CASE("level gradient includes the offset slope of a graded field") {
  const ImplicitLattice g(Vec3::Constant(5.0), OffsetProfile({0.0, 10.0}, {0.4, -0.4}));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.5, 9.5);
  const double step = 1e-5;
  for (int i = 0; i < 50; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 grad = g.level_gradient(p);
    for (int a = 0; a < 3; ++a) {
      Vec3 dp = Vec3::Zero();
      dp[a] = step;
      const double fd = (g.level(p + dp) - g.level(p - dp)) / (2 * step);
      CHECK(std::abs(grad[a] - fd) < 1e-6);
    }
  }
}

TEST_CASE("solid predicates for network and sheet") {
  const auto net = ImplicitLattice::uniform(5.0, 0.3);
  const auto sheet = ImplicitLattice::uniform(5.0, 0.3, Topology::sheet);
  const Vec3 peak(1.25, 0, 0);  // phi = 1
  const Vec3 zero(0, 0, 0);     // phi = 0
  CHECK(net.is_solid(peak));
  CHECK_FALSE(net.is_solid(zero));
  CHECK_FALSE(sheet.is_solid(peak));
  CHECK(sheet.is_solid(zero));
  CHECK_THROWS_AS(ImplicitLattice::uniform(5.0, -0.1, Topology::sheet), std::invalid_argument);
  CHECK_THROWS_AS(ImplicitLattice::uniform(0.0, 0.1), std::invalid_argument);
}

TEST_CASE("counter-based stream does not depend on partitioning") {
  const std::uint64_t seed = 42;
  std::vector<Vec3> forward, backward(1000);
  for (std::uint64_t i = 0; i < 1000; ++i) forward.push_back(counter_uniform_point(seed, i));
  for (std::uint64_t i = 1000; i-- > 0;) backward[i] = counter_uniform_point(seed, i);
  for (std::size_t i = 0; i < 1000; ++i) {
    CHECK(forward[i] == backward[i]);
    CHECK((forward[i].array() >= 0.0).all());
    CHECK((forward[i].array() < 1.0).all());
  }
}

TEST_CASE("solid fraction: C = 0 halves the cell, grid and Monte-Carlo agree") {
  const auto g = ImplicitLattice::uniform(5.0, 0.0);
  const Box cell = Box::cube(5.0);
  // phi is odd under a half-period shift, so C = 0 splits the cell evenly.
  CHECK(solid_fraction(g, cell, GridSampler{64}) == doctest::Approx(0.5).epsilon(0.005));
  CHECK(solid_fraction(g, cell, MonteCarloSampler{}) == doctest::Approx(0.5).epsilon(0.005));
  const auto dense = ImplicitLattice::uniform(5.0, -2.0);
  CHECK(solid_fraction(dense, cell, GridSampler{16}) == 1.0);
  CHECK_THROWS_AS(solid_fraction(g, cell, MonteCarloSampler{999, 1}), std::invalid_argument);
}

TEST_CASE("calibrated offsets hit the target against an independent Monte-Carlo oracle") {
  const Vec3 cell = Vec3::Constant(5.0);
  for (double target : {0.1, 0.3, 0.45}) {
    CAPTURE(target);
    const auto cal = calibrate_offset(cell, Topology::network, target);
    CHECK(std::abs(cal.achieved - target) < 1e-3);
    const double rd = oracle::network_fraction(cal.offset, 5.0, 400'000, 99);
    CHECK(std::abs(rd - target) < 0.005);
  }
}

TEST_CASE("sheet calibration is increasing in C") {
  const auto cal = calibrate_offset(Vec3::Constant(5.0), Topology::sheet, 0.3);
  CHECK(cal.offset > 0.0);
  CHECK(std::abs(cal.achieved - 0.3) < 1e-3);
}

TEST_CASE("density table: monotone, invertible and range-checked") {
  const auto table = DensityCalibration::build(Vec3::Constant(5.0), Topology::network, {26, -1.25, 1.25, 32});
  const auto& rd = table.densities();
  REQUIRE(rd.size() == 26);
  for (std::size_t i = 1; i < rd.size(); ++i) CHECK(rd[i] < rd[i - 1]);
  for (double v : rd) CHECK((v >= 0.0 && v <= 1.0));
  for (double target : {0.2, 0.35, 0.5, 0.7}) {
    const double c = table.offset_for(target);
    CHECK(table.density_at(c) == doctest::Approx(target).epsilon(1e-12));
  }
  // Knots are reproduced exactly.
  CHECK(table.offset_for(rd[5]) == table.offsets()[5]);
  try {
    table.offset_for(0.999);
    FAIL("expected CalibrationRangeExceeded");
  } catch (const CalibrationRangeExceeded& e) {
    const std::string msg = e.what();
    CHECK(msg.find("0.999") != std::string::npos);
    CHECK(msg.find('[') != std::string::npos);
  }
  CHECK_THROWS_AS(DensityCalibration({0.0, 1.0}, {0.4, 0.6}, Topology::network, {}), std::invalid_argument);
}

TEST_CASE("density table CSV has header and optional comment") {
  const auto table = DensityCalibration::build(Vec3::Constant(5.0), Topology::network, {5, -1.0, 1.0, 16});
  const auto path = std::filesystem::temp_directory_path() / "tpmsvox_calibration.csv";
  table.write_csv(path, "config abc");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# config abc");
  std::getline(in, line);
  CHECK(line == "C,RD");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
  std::filesystem::remove(path);
}

TEST_CASE("graded lattice: slab densities follow the linear profile") {
  const Vec3 cell = Vec3::Constant(5.0);
  const auto table = DensityCalibration::build(cell, Topology::network, {26, -1.25, 1.25, 32});
  const auto g = graded_lattice(cell, 0.55, 0.35, 0.0, 10.0, table);
  double previous = 0.0;
  for (int k = 0; k < 4; ++k) {
    Box slab{Vec3(0, 0, 2.5 * k), Vec3(10, 10, 2.5 * (k + 1))};
    const double rd = solid_fraction(g, slab, MonteCarloSampler{200'000, 5});
    const double expected = 0.35 + 0.2 * (2.5 * k + 1.25) / 10.0;
    CAPTURE(k);
    CHECK(rd > previous);
    CHECK(std::abs(rd - expected) < 0.02);
    previous = rd;
  }
  CHECK_THROWS_AS(graded_lattice(cell, 0.999, 0.35, 0.0, 10.0, table), CalibrationRangeExceeded);
}

TEST_CASE("offset profile interpolation and slope") {
  const OffsetProfile p({0.0, 10.0}, {1.0, -1.0});
  CHECK(p.value(5.0) == doctest::Approx(0.0));
  CHECK(p.value(-1.0) == 1.0);
  CHECK(p.value(11.0) == -1.0);
  CHECK(p.slope(5.0) == doctest::Approx(-0.2));
  CHECK(p.slope(11.0) == 0.0);
  CHECK_THROWS_AS(OffsetProfile({1.0, 0.0}, {0.0, 0.0}), std::invalid_argument);
}
