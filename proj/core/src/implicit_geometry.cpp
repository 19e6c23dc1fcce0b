#include "tpmsvox/implicit_geometry.hpp"

#include "tpmsvox/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace tpmsvox {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace

std::string_view to_string(Topology t) { return t == Topology::network ? "network" : "sheet"; }

Topology topology_from_string(std::string_view s) {
  if (s == "network") return Topology::network;
  if (s == "sheet") return Topology::sheet;
  throw ConfigError("unknown topology '" + std::string(s) + "' (expected network|sheet)");
}

// ---------------------------------------------------------------------------
// OffsetProfile

OffsetProfile::OffsetProfile(std::vector<double> z, std::vector<double> c)
    : z_(std::move(z)), c_(std::move(c)) {
  if (z_.empty() || z_.size() != c_.size())
    throw std::invalid_argument("offset profile needs matching, non-empty knot arrays");
  for (std::size_t i = 1; i < z_.size(); ++i)
    if (!(z_[i] > z_[i - 1]))
      throw std::invalid_argument("offset profile knots must be strictly increasing in z");
}

std::size_t OffsetProfile::segment(double z) const {
  auto it = std::upper_bound(z_.begin(), z_.end(), z);
  std::size_t i = static_cast<std::size_t>(it - z_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, z_.size() - 2);
}

double OffsetProfile::value(double z) const {
  if (is_constant()) return c_.front();
  if (z <= z_.front()) return c_.front();
  if (z >= z_.back()) return c_.back();
  const std::size_t i = segment(z);
  const double t = (z - z_[i]) / (z_[i + 1] - z_[i]);
  return c_[i] + t * (c_[i + 1] - c_[i]);
}

double OffsetProfile::slope(double z) const {
  if (is_constant() || z <= z_.front() || z >= z_.back()) return 0.0;
  const std::size_t i = segment(z);
  return (c_[i + 1] - c_[i]) / (z_[i + 1] - z_[i]);
}

// ---------------------------------------------------------------------------
// ImplicitLattice

ImplicitLattice::ImplicitLattice(Vec3 cell_size, OffsetProfile offset, Topology topology,
                                 FieldKind kind)
    : cell_size_(std::move(cell_size)), offset_(std::move(offset)), topology_(topology), kind_(kind) {
  if ((cell_size_.array() <= 0.0).any())
    throw std::invalid_argument("lattice cell size must be positive on every axis");
  if (topology_ == Topology::sheet) {
    for (double c : offset_.knots_c())
      if (c < 0.0) throw std::invalid_argument("sheet topology requires a non-negative offset");
  }
}

double ImplicitLattice::field(const Vec3& p) const {
  const double X = kTwoPi * p.x() / cell_size_.x();
  const double Y = kTwoPi * p.y() / cell_size_.y();
  const double Z = kTwoPi * p.z() / cell_size_.z();
  return std::sin(X) * std::cos(Y) + std::sin(Y) * std::cos(Z) + std::sin(Z) * std::cos(X);
}

Vec3 ImplicitLattice::gradient(const Vec3& p) const {
  const double kx = kTwoPi / cell_size_.x();
  const double ky = kTwoPi / cell_size_.y();
  const double kz = kTwoPi / cell_size_.z();
  const double sx = std::sin(kx * p.x()), cx = std::cos(kx * p.x());
  const double sy = std::sin(ky * p.y()), cy = std::cos(ky * p.y());
  const double sz = std::sin(kz * p.z()), cz = std::cos(kz * p.z());
  return {kx * (cx * cy - sz * sx), ky * (cy * cz - sx * sy), kz * (cz * cx - sy * sz)};
}

double ImplicitLattice::level(const Vec3& p) const {
  const double phi = field(p);
  const double c = offset_.value(p.z());
  return topology_ == Topology::network ? phi - c : c - std::abs(phi);
}

Vec3 ImplicitLattice::level_gradient(const Vec3& p) const {
  Vec3 g = gradient(p);
  const double dc = offset_.slope(p.z());
  if (topology_ == Topology::network) {
    g.z() -= dc;
    return g;
  }
  const double s = field(p) >= 0.0 ? 1.0 : -1.0;
  g *= -s;
  g.z() += dc;
  return g;
}

// ---------------------------------------------------------------------------
// Sampling

Vec3 counter_uniform_point(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t base = splitmix64(seed) ^ (index * 3);
  return {unit_double(splitmix64(base)), unit_double(splitmix64(base + 1)),
          unit_double(splitmix64(base + 2))};
}

double solid_fraction(const ImplicitLattice& lattice, const Box& region, const Sampler& sampler) {
  if (region.empty()) throw std::invalid_argument("solid_fraction: empty region");
  const Vec3 ext = region.extent();

  if (const auto* grid = std::get_if<GridSampler>(&sampler)) {
    const int n = grid->n;
    if (static_cast<long long>(n) * n * n < 1000)
      throw std::invalid_argument("solid_fraction: grid sampler needs n^3 >= 1000");
    const Vec3 step = ext / static_cast<double>(n);
    std::uint64_t solid = 0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const Vec3 p = region.lo + Vec3((i + 0.5) * step.x(), (j + 0.5) * step.y(),
                                          (k + 0.5) * step.z());
          solid += lattice.is_solid(p) ? 1 : 0;
        }
    return static_cast<double>(solid) / (static_cast<double>(n) * n * n);
  }

  const auto& mc = std::get<MonteCarloSampler>(sampler);
  if (mc.samples < 1000)
    throw std::invalid_argument("solid_fraction: Monte-Carlo sampler needs N >= 1000");
  std::uint64_t solid = 0;
  for (std::uint64_t i = 0; i < mc.samples; ++i) {
    const Vec3 u = counter_uniform_point(mc.seed, i);
    solid += lattice.is_solid(region.lo + u.cwiseProduct(ext)) ? 1 : 0;
  }
  return static_cast<double>(solid) / static_cast<double>(mc.samples);
}

// ---------------------------------------------------------------------------
// Offset calibration

namespace {

double unit_cell_density(const Vec3& cell_size, Topology topology, double offset, int grid_n) {
  const ImplicitLattice lattice(cell_size, OffsetProfile::constant(offset), topology);
  return solid_fraction(lattice, Box{Vec3::Zero(), cell_size}, GridSampler{grid_n});
}

}  // namespace

OffsetCalibration calibrate_offset(const Vec3& cell_size, Topology topology, double target_rd,
                                   double tolerance, int grid_n) {
  if (!(target_rd > 0.0 && target_rd < 1.0))
    throw std::invalid_argument("calibrate_offset: target RD must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw std::invalid_argument("calibrate_offset: tolerance must be > 0");

  // Density falls with C for the network solid and rises with C for the sheet.
  const bool decreasing = topology == Topology::network;
  double lo = decreasing ? -1.5 : 0.0;
  double hi = 1.5;
  const double rd_lo = unit_cell_density(cell_size, topology, lo, grid_n);
  const double rd_hi = unit_cell_density(cell_size, topology, hi, grid_n);
  const bool straddles = decreasing ? (rd_lo >= target_rd && rd_hi <= target_rd)
                                    : (rd_lo <= target_rd && rd_hi >= target_rd);
  if (!straddles) {
    std::ostringstream msg;
    msg << "offset bracket [" << lo << ", " << hi << "] gives RD [" << rd_lo << ", " << rd_hi
        << "], which does not straddle target " << target_rd;
    throw NonMonotoneBracket(msg.str());
  }

  OffsetCalibration best{0.5 * (lo + hi), 0.0};
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double rd = unit_cell_density(cell_size, topology, mid, grid_n);
    best = {mid, rd};
    if (std::abs(rd - target_rd) < tolerance) return best;
    const bool too_dense = rd > target_rd;
    if (too_dense == decreasing)
      lo = mid;
    else
      hi = mid;
  }
  return best;
}

DensityCalibration DensityCalibration::build(const Vec3& cell_size, Topology topology,
                                             const Spec& spec_in) {
  Spec spec = spec_in;
  if (spec.samples < 2) throw std::invalid_argument("calibration needs at least two samples");
  // The sheet predicate is only meaningful for C >= 0.
  if (topology == Topology::sheet) spec.c_min = std::max(spec.c_min, 0.0);
  std::vector<double> c(spec.samples), rd(spec.samples);
  for (int i = 0; i < spec.samples; ++i) {
    c[i] = spec.c_min + (spec.c_max - spec.c_min) * i / (spec.samples - 1);
    rd[i] = unit_cell_density(cell_size, topology, c[i], spec.grid_n);
  }
  return DensityCalibration(std::move(c), std::move(rd), topology, spec);
}

DensityCalibration::DensityCalibration(std::vector<double> offsets, std::vector<double> densities,
                                       Topology topology, Spec spec)
    : c_(std::move(offsets)), rd_(std::move(densities)), topology_(topology), spec_(spec) {
  if (c_.size() < 2 || c_.size() != rd_.size())
    throw std::invalid_argument("calibration table needs >= 2 matching samples");
  for (std::size_t i = 0; i < rd_.size(); ++i) {
    if (rd_[i] < 0.0 || rd_[i] > 1.0)
      throw std::invalid_argument("calibration densities must lie in [0, 1]");
    if (i == 0) continue;
    if (!(c_[i] > c_[i - 1]))
      throw std::invalid_argument("calibration offsets must be strictly increasing");
    const bool ok = topology_ == Topology::network ? rd_[i] < rd_[i - 1] : rd_[i] > rd_[i - 1];
    if (!ok) throw std::invalid_argument("calibration densities are not strictly monotone in C");
  }
}

double DensityCalibration::min_density() const { return std::min(rd_.front(), rd_.back()); }
double DensityCalibration::max_density() const { return std::max(rd_.front(), rd_.back()); }

double DensityCalibration::density_at(double offset) const {
  if (offset <= c_.front()) return rd_.front();
  if (offset >= c_.back()) return rd_.back();
  const auto it = std::upper_bound(c_.begin(), c_.end(), offset);
  const std::size_t i = static_cast<std::size_t>(it - c_.begin()) - 1;
  const double t = (offset - c_[i]) / (c_[i + 1] - c_[i]);
  return rd_[i] + t * (rd_[i + 1] - rd_[i]);
}

double DensityCalibration::offset_for(double rd) const {
  if (rd < min_density() || rd > max_density()) {
    std::ostringstream msg;
    msg << "relative density " << rd << " outside calibration range [" << min_density() << ", "
        << max_density() << "] (C in [" << c_.front() << ", " << c_.back() << "])";
    throw CalibrationRangeExceeded(msg.str());
  }
  for (std::size_t i = 0; i + 1 < rd_.size(); ++i) {
    const double a = rd_[i], b = rd_[i + 1];
    if ((rd - a) * (rd - b) <= 0.0) {
      const double t = (rd - a) / (b - a);
      return c_[i] + t * (c_[i + 1] - c_[i]);
    }
  }
  return c_.back();  // unreachable for a monotone table
}

void DensityCalibration::write_csv(const std::filesystem::path& path,
                                   std::string_view comment) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "C,RD\n";
  out.precision(10);
  for (std::size_t i = 0; i < c_.size(); ++i) out << c_[i] << ',' << rd_[i] << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ImplicitLattice graded_lattice(const Vec3& cell_size, double rd_top, double rd_bottom,
                               double z_lo, double z_hi, const DensityCalibration& calibration) {
  if (!(rd_top > 0.0 && rd_top < 1.0 && rd_bottom > 0.0 && rd_bottom < 1.0))
    throw std::invalid_argument("graded_lattice: densities must lie in (0, 1)");
  if (!(z_hi > z_lo)) throw std::invalid_argument("graded_lattice: empty z range");

  if (rd_top == rd_bottom)
    return ImplicitLattice(cell_size, OffsetProfile::constant(calibration.offset_for(rd_top)),
                           calibration.topology());

  // RD(z) is linear and the inverse table is piecewise linear, so C(z) is
  // exact with knots at the ends and wherever RD(z) crosses a table density.
  auto rd_at = [&](double z) { return rd_bottom + (rd_top - rd_bottom) * (z - z_lo) / (z_hi - z_lo); };
  std::vector<double> zs{z_lo, z_hi};
  for (double rd : calibration.densities()) {
    const double t = (rd - rd_bottom) / (rd_top - rd_bottom);
    if (t > 0.0 && t < 1.0) zs.push_back(z_lo + t * (z_hi - z_lo));
  }
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end(),
                       [&](double a, double b) { return b - a < 1e-12 * (z_hi - z_lo); }),
           zs.end());
  std::vector<double> cs;
  cs.reserve(zs.size());
  for (double z : zs) cs.push_back(calibration.offset_for(std::clamp(rd_at(z),
      std::min(rd_top, rd_bottom), std::max(rd_top, rd_bottom))));
  return ImplicitLattice(cell_size, OffsetProfile(std::move(zs), std::move(cs)),
                         calibration.topology());
}

}  // namespace tpmsvox
