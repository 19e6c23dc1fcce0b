#pragma once

#include "tpmsvox/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <variant>
#include <vector>

namespace tpmsvox {

enum class Topology { network, sheet };
enum class FieldKind { gyroid };

std::string_view to_string(Topology t);
Topology topology_from_string(std::string_view s);

/// Level offset C as a function of height. A single knot is a constant
/// offset; several knots are interpolated linearly in z and clamped to the
/// end values outside the knot range.
class OffsetProfile {
 public:
  static OffsetProfile constant(double c) { return OffsetProfile({0.0}, {c}); }

  OffsetProfile(std::vector<double> z, std::vector<double> c);

  double value(double z) const;
  /// dC/dz; zero outside the knot range and for constant profiles.
  double slope(double z) const;
  bool is_constant() const { return z_.size() == 1; }

  const std::vector<double>& knots_z() const { return z_; }
  const std::vector<double>& knots_c() const { return c_; }

 private:
  std::size_t segment(double z) const;

  std::vector<double> z_;
  std::vector<double> c_;
};

/// A triply periodic implicit field phi(x) together with an offset C and a
/// solid predicate.
///
/// Network solid: phi >= C.  Sheet solid: |phi| <= C (C >= 0).
/// level() folds both into one signed function that is >= 0 exactly on the
/// solid, which is what the mesher and surface extractor work with.
class ImplicitLattice {
 public:
  ImplicitLattice(Vec3 cell_size, OffsetProfile offset, Topology topology = Topology::network,
                  FieldKind kind = FieldKind::gyroid);

  static ImplicitLattice uniform(double cell_size, double offset,
                                 Topology topology = Topology::network) {
    return ImplicitLattice(Vec3::Constant(cell_size), OffsetProfile::constant(offset), topology);
  }

  /// phi at a point in mm.
  double field(const Vec3& p) const;
  /// Analytic gradient of phi, in 1/mm.
  Vec3 gradient(const Vec3& p) const;

  double offset_at(const Vec3& p) const { return offset_.value(p.z()); }

  /// Signed solid indicator: >= 0 inside the solid.
  double level(const Vec3& p) const;
  Vec3 level_gradient(const Vec3& p) const;
  bool is_solid(const Vec3& p) const { return level(p) >= 0.0; }

  const Vec3& cell_size() const { return cell_size_; }
  const OffsetProfile& offset() const { return offset_; }
  Topology topology() const { return topology_; }
  FieldKind kind() const { return kind_; }

 private:
  Vec3 cell_size_;
  OffsetProfile offset_;
  Topology topology_;
  FieldKind kind_;
};

/// Cell-centred n x n x n grid over the region.
struct GridSampler {
  int n = 64;
};

/// N uniform points from a counter-based stream: point i depends only on
/// (seed, i), so any partition of the index range yields the same samples.
struct MonteCarloSampler {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0x5eed'2024'7a11'ce00ULL;
};

using Sampler = std::variant<GridSampler, MonteCarloSampler>;

/// Fraction of sample points in `region` that satisfy the solid predicate.
double solid_fraction(const ImplicitLattice& lattice, const Box& region, const Sampler& sampler);

/// Uniform point i of a counter-based stream, in [0,1)^3.
Vec3 counter_uniform_point(std::uint64_t seed, std::uint64_t index);

struct OffsetCalibration {
  double offset = 0.0;
  double achieved = 0.0;
};

/// Bisection on C against the grid-sampled density of one unit cell.
/// Throws NonMonotoneBracket when the bracket does not straddle the target.
OffsetCalibration calibrate_offset(const Vec3& cell_size, Topology topology, double target_rd,
                                   double tolerance = 1e-3, int grid_n = 64);

/// Tabulated RD(C) with piecewise-linear interpolation in both directions.
class DensityCalibration {
 public:
  struct Spec {
    int samples = 26;
    double c_min = -1.25;
    double c_max = 1.25;
    int grid_n = 64;
  };

  static DensityCalibration build(const Vec3& cell_size, Topology topology, const Spec& spec);
  static DensityCalibration build(const Vec3& cell_size, Topology topology) {
    return build(cell_size, topology, Spec{});
  }

  /// Table must be strictly monotone in RD with every RD in [0,1].
  DensityCalibration(std::vector<double> offsets, std::vector<double> densities,
                     Topology topology, Spec spec);

  double density_at(double offset) const;
  /// Inverse lookup; throws CalibrationRangeExceeded outside the table.
  double offset_for(double rd) const;

  double min_density() const;
  double max_density() const;

  const std::vector<double>& offsets() const { return c_; }
  const std::vector<double>& densities() const { return rd_; }
  Topology topology() const { return topology_; }
  const Spec& spec() const { return spec_; }

  /// CSV with header `C,RD`.
  void write_csv(const std::filesystem::path& path, std::string_view comment = {}) const;

 private:
  std::vector<double> c_;
  std::vector<double> rd_;
  Topology topology_;
  Spec spec_;
};

/// Lattice whose offset follows RD(z) linear from rd_bottom at z_lo to
/// rd_top at z_hi, mapped through the calibration.
ImplicitLattice graded_lattice(const Vec3& cell_size, double rd_top, double rd_bottom,
                               double z_lo, double z_hi, const DensityCalibration& calibration);

}  // namespace tpmsvox
