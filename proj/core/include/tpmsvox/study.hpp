#pragma once

#include "tpmsvox/convergence.hpp"
#include "tpmsvox/errors.hpp"
#include "tpmsvox/fem.hpp"
#include "tpmsvox/implicit_geometry.hpp"
#include "tpmsvox/voxel_mesher.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tpmsvox {

struct LatticeConfig {
  FieldKind kind = FieldKind::gyroid;
  Topology topology = Topology::network;
  double cell_size_mm = 5.0;
  double relative_density = 0.45;
  bool graded = false;
  double rd_bottom = 0.35;  // graded only, at z_min
  double rd_top = 0.55;     // graded only, at z_max
};

/// Declarative description of a study. JSON keys mirror the field names;
/// every physical quantity carries its unit in the key.
struct StudyConfig {
  LatticeConfig lattice;
  int cells_per_axis = 2;
  std::vector<double> element_sizes_mm{0.5, 0.25, 0.125};
  std::vector<double> min_jacobians{1.0, 0.3};
  /// Optional relative-density sweep for uniform lattices; empty means the
  /// lattice density only.
  std::vector<double> relative_densities;
  MaterialSpec material;
  double top_displacement_mm = 0.05;
  SolverOptions solver;
  ClassificationRule classification = ClassificationRule::intersect;
  double classification_threshold = 0.5;
  int conform_passes = 3;
  int surface_resolution = 64;
  int calibration_grid = 64;
  std::uint64_t seed = MonteCarloSampler{}.seed;
  std::string output_dir = "tpmsvox-out";

  /// FNV-1a of the canonical JSON form, recorded in every output CSV.
  std::string hash() const;
  std::string to_json() const;

  double domain_edge() const { return cells_per_axis * lattice.cell_size_mm; }
  Box domain() const { return Box::cube(domain_edge()); }
  std::vector<double> densities() const;

  /// Throws ConfigError naming the offending key.
  void validate(bool require_gci_order = false) const;
};

StudyConfig parse_study_config(std::string_view json_text);
StudyConfig load_study_config(const std::filesystem::path& path);

struct LatticeBuild {
  ImplicitLattice lattice;
  double target_rd = 0.0;
  double achieved_rd = 0.0;  // calibration estimate (mean over z when graded)
  std::optional<DensityCalibration> calibration;
};

/// Uniform lattices are calibrated by bisection; graded lattices map RD(z)
/// through a density table. `rd` overrides the configured density.
LatticeBuild build_lattice(const StudyConfig& config, std::optional<double> rd = std::nullopt);

struct MeshOutcome {
  HexMesh mesh;
  MeshQualityReport quality;
  ConformStats conform;
  double voxel_rd = 0.0;  // before conforming
};

/// classify -> build -> conform (MJ < 1) -> keep spanning components -> report.
MeshOutcome mesh_point(const StudyConfig& config, const ImplicitLattice& lattice, double h, double mj);

struct PointResult {
  double rd_target = 0.0;
  double h = 0.0;
  double mj = 0.0;
  MeshQualityReport quality;
  CompressionResult solution;  // displacement field dropped unless requested
  double seconds = 0.0;
};

/// Raised for a failed sweep point; names the stage and the (h, MJ) pair.
class StudyPointError : public Error {
 public:
  StudyPointError(std::string stage, double h, double mj, const std::string& what);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

PointResult run_point(const StudyConfig& config, const ImplicitLattice& lattice, double rd_target,
                      double h, double mj, bool keep_displacement = false);

using ProgressCallback = std::function<void(const PointResult&)>;

/// Every (RD, h, MJ) combination; points run on up to `jobs` threads and are
/// returned in (RD, h, MJ) configuration order regardless of completion order.
std::vector<PointResult> run_sweep(const StudyConfig& config, int jobs = 1,
                                   const ProgressCallback& progress = {});

/// Header `h,MJ,elements,RD_mesh,F_N,sigma_MPa,Eeff_MPa,iters,residual`.
std::vector<std::string> compression_csv_header();
std::vector<std::string> compression_csv_row(const PointResult& r);

/// Sweep rows: RD_target, the compression columns, then min_SJ.
std::vector<std::string> sweep_csv_header();
std::vector<std::string> sweep_csv_row(const PointResult& r);

/// MeshQualityReport row: `h,MJ,elements,elements_per_cell,min_SJ,RD_mesh,hist_0..hist_9`.
std::vector<std::string> quality_csv_header();
std::vector<std::string> quality_csv_row(double h, double mj, const MeshQualityReport& q);

/// Groups (h, f) series by label. Accepts either an `h,f` table (optional
/// `label` column) or a sweep table, whose Eeff_MPa series are grouped by
/// RD_target and MJ.
std::vector<MeshStudy> studies_from_csv(const std::filesystem::path& path);

/// Report CSV header `label,convention,p,f_asym,gci12_pct,gci23_pct,Ra`.
std::vector<std::string> gci_csv_header();
std::vector<std::string> gci_csv_row(const GciReport& r);

}  // namespace tpmsvox
