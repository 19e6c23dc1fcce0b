#pragma once

#include "tpmsvox/hex_mesh.hpp"
#include "tpmsvox/implicit_geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tpmsvox {

enum class ClassificationRule {
  intersect,  // keep if any subsample is solid
  centroid,   // keep if the voxel centroid is solid
  fraction,   // keep if the solid subsample fraction reaches the threshold
};

struct VoxelGridSpec {
  double element_size = 0.25;
  Box domain;
  ClassificationRule rule = ClassificationRule::intersect;
  double threshold = 0.5;  // fraction rule only, in (0, 1]
  int subsamples = 3;      // per axis, includes corners; >= 2
};

/// Boolean voxel occupancy on a regular grid, x fastest.
struct OccupancyGrid {
  std::array<int, 3> dims{};
  double h = 0.0;
  Box domain;
  std::vector<std::uint8_t> kept;

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  bool at(int i, int j, int k) const { return kept[index(i, j, k)] != 0; }
  std::size_t count() const;

  /// Raw u8 volume preceded by one text line:
  /// `tpmsvox-occupancy <nx> <ny> <nz> <h> <ox> <oy> <oz>`.
  void write_raw(const std::filesystem::path& path) const;
};

/// Throws DomainNotDivisible when a box edge is not an integer multiple of h.
OccupancyGrid classify_voxels(const ImplicitLattice& lattice, const VoxelGridSpec& spec);

/// Nodes are shared through integer lattice indices. Throws EmptyMesh.
HexMesh build_voxel_mesh(const OccupancyGrid& grid);

struct ConformOptions {
  double min_jacobian = 0.3;  // in (0, 1]
  int max_passes = 3;
  int newton_steps = 20;
  double newton_tolerance = 1e-9;
};

struct ConformStats {
  int passes = 0;
  std::size_t movable_nodes = 0;
  std::size_t moved_nodes = 0;      // distinct nodes displaced at least once
  std::size_t blocked_moves = 0;    // ladder fell through to t = 0
};

/// The two-parameter step: surface nodes are pulled onto the iso-level by a
/// Newton projection and backtracked along the ladder {1, .75, .5, .25, .1, 0}
/// until every incident element keeps a scaled Jacobian >= min_jacobian.
///
/// Only nodes on exposed faces that do not lie on the domain box move; a
/// node sitting on a box plane slides within that plane so the loading
/// faces stay flat. Connectivity and element count never change and
/// min_jacobian == 1 returns the input unchanged.
HexMesh conform_to_surface(const HexMesh& mesh, const ImplicitLattice& lattice,
                           const ConformOptions& options, ConformStats* stats = nullptr);

/// Sum of element volumes over the domain volume.
double mesh_relative_density(const HexMesh& mesh, const Box& domain);
inline double mesh_relative_density(const HexMesh& mesh) {
  return mesh_relative_density(mesh, mesh.domain());
}

enum class ComponentKeep {
  spanning,  // components touching both the bottom and the top of the domain
  largest,
};

/// Face-connected components; nodes are renumbered densely in their
/// original order. Throws NoSpanningComponent.
HexMesh filter_components(const HexMesh& mesh, ComponentKeep keep);

struct MeshQualityReport {
  std::size_t element_count = 0;
  double elements_per_cell = 0.0;
  double min_scaled_jacobian = 1.0;
  std::array<std::size_t, 10> histogram{};  // bins of width 0.1 over [0, 1]
  double relative_density = 0.0;
};

MeshQualityReport quality_report(const HexMesh& mesh, int cells_per_axis);

}  // namespace tpmsvox
