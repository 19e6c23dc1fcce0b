#pragma once

#include "tpmsvox/geometry.hpp"
#include "tpmsvox/implicit_geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tpmsvox {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  bool outward = true;

  std::size_t size() const { return triangles.size(); }
  Vec3 normal(std::size_t t) const;  // unit normal, right-hand rule
  double area(std::size_t t) const;
};

struct SurfaceOptions {
  /// Samples per unit-cell edge; must be >= 8.
  int resolution = 64;
  /// Pad the sample lattice with void so the surface closes at the box.
  bool capped = true;
};

/// Iso-surface of the solid predicate over `domain`, extracted with a
/// conforming six-tetrahedra split of every sample cube. Triangles are
/// oriented with normals pointing from solid into void. Throws EmptySurface
/// when the predicate never changes sign.
TriMesh extract_surface(const ImplicitLattice& lattice, const Box& domain,
                        const SurfaceOptions& options = {});

/// Volume enclosed by a closed, consistently oriented surface (signed
/// tetrahedra against the vertex centroid).
double enclosed_volume(const TriMesh& mesh);

enum class StlMode { ascii, binary };

void write_stl(const TriMesh& mesh, const std::filesystem::path& path, StlMode mode,
               std::string_view solid_name = "tpmsvox");

/// Reads either STL flavour back as a triangle soup (three vertices per
/// triangle, no welding).
TriMesh read_stl(const std::filesystem::path& path);

}  // namespace tpmsvox
