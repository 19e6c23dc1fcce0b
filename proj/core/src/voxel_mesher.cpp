#include "tpmsvox/voxel_mesher.hpp"

#include "tpmsvox/errors.hpp"
#include "face_table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tpmsvox {

std::size_t OccupancyGrid::count() const {
  return static_cast<std::size_t>(std::count(kept.begin(), kept.end(), std::uint8_t{1}));
}

void OccupancyGrid::write_raw(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  std::ostringstream header;
  header.precision(17);
  header << "tpmsvox-occupancy " << dims[0] << ' ' << dims[1] << ' ' << dims[2] << ' ' << h << ' '
         << domain.lo.x() << ' ' << domain.lo.y() << ' ' << domain.lo.z() << '\n';
  out << header.str();
  out.write(reinterpret_cast<const char*>(kept.data()), static_cast<std::streamsize>(kept.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Classification

OccupancyGrid classify_voxels(const ImplicitLattice& lattice, const VoxelGridSpec& spec) {
  if (!(spec.element_size > 0.0)) throw std::invalid_argument("element size must be > 0");
  if (spec.subsamples < 2) throw std::invalid_argument("subsample grid needs n >= 2");
  if (spec.rule == ClassificationRule::fraction && !(spec.threshold > 0.0 && spec.threshold <= 1.0))
    throw std::invalid_argument("fraction threshold must lie in (0, 1]");
  if (spec.domain.empty()) throw std::invalid_argument("empty design domain");

  OccupancyGrid grid;
  grid.h = spec.element_size;
  grid.domain = spec.domain;
  const Vec3 ext = spec.domain.extent();
  for (int a = 0; a < 3; ++a) {
    const double cells = ext[a] / spec.element_size;
    const double rounded = std::round(cells);
    if (rounded < 1.0 || std::abs(rounded * spec.element_size - ext[a]) > 1e-9 * ext[a]) {
      std::ostringstream msg;
      msg << "domain edge " << ext[a] << " mm on axis " << a << " is not a multiple of h = "
          << spec.element_size << " mm";
      throw DomainNotDivisible(msg.str());
    }
    grid.dims[a] = static_cast<int>(rounded);
  }
  const auto [nx, ny, nz] = grid.dims;
  grid.kept.assign(static_cast<std::size_t>(nx) * ny * nz, 0);
  const double h = spec.element_size;
  const Vec3& lo = spec.domain.lo;

  if (spec.rule == ClassificationRule::centroid) {
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
          grid.kept[grid.index(i, j, k)] =
              lattice.is_solid(lo + h * Vec3(i + 0.5, j + 0.5, k + 0.5)) ? 1 : 0;
    return grid;
  }

  // Shared subsample lattice; corner samples coincide exactly with the node
  // coordinates the mesh builder produces.
  const int s = spec.subsamples - 1;
  const int mx = nx * s + 1, my = ny * s + 1, mz = nz * s + 1;
  auto sample_index = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(mx) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(my) * k);
  };
  std::vector<std::uint8_t> solid(static_cast<std::size_t>(mx) * my * mz);
  const double inv = 1.0 / s;
  for (int k = 0; k < mz; ++k)
    for (int j = 0; j < my; ++j)
      for (int i = 0; i < mx; ++i) {
        const Vec3 p = lo + h * Vec3(i * inv, j * inv, k * inv);
        solid[sample_index(i, j, k)] = lattice.is_solid(p) ? 1 : 0;
      }

  const int per_voxel = (s + 1) * (s + 1) * (s + 1);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        int count = 0;
        for (int c = 0; c <= s; ++c)
          for (int b = 0; b <= s; ++b)
            for (int a = 0; a <= s; ++a) count += solid[sample_index(i * s + a, j * s + b, k * s + c)];
        bool keep = false;
        if (spec.rule == ClassificationRule::intersect)
          keep = count > 0;
        else
          keep = static_cast<double>(count) >= spec.threshold * per_voxel;
        grid.kept[grid.index(i, j, k)] = keep ? 1 : 0;
      }
  return grid;
}

// ---------------------------------------------------------------------------
// Mesh construction

HexMesh build_voxel_mesh(const OccupancyGrid& grid) {
  const auto [nx, ny, nz] = grid.dims;
  const std::size_t px = nx + 1, py = ny + 1, pz = nz + 1;
  auto node_index = [&](std::size_t i, std::size_t j, std::size_t k) { return i + px * (j + py * k); };

  constexpr std::uint32_t kUnused = 0xffffffffu;
  std::vector<std::uint32_t> id(px * py * pz, kUnused);
  std::size_t kept = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (!grid.at(i, j, k)) continue;
        ++kept;
        for (int c = 0; c < 8; ++c) {
          const auto& n = kHexCorners[c];
          id[node_index(i + (n[0] > 0), j + (n[1] > 0), k + (n[2] > 0))] = 0;
        }
      }
  if (kept == 0) throw EmptyMesh("occupancy grid has no kept voxels");

  std::vector<Vec3> nodes;
  for (std::size_t k = 0; k < pz; ++k)
    for (std::size_t j = 0; j < py; ++j)
      for (std::size_t i = 0; i < px; ++i) {
        auto& slot = id[node_index(i, j, k)];
        if (slot == kUnused) continue;
        slot = static_cast<std::uint32_t>(nodes.size());
        nodes.push_back(grid.domain.lo + grid.h * Vec3(double(i), double(j), double(k)));
      }

  std::vector<HexConnectivity> elements;
  elements.reserve(kept);
  std::vector<std::uint8_t> boundary(nodes.size(), 0);
  constexpr int kNeighbour[6][3] = {{0, 0, -1}, {0, 0, 1}, {0, -1, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}};
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (!grid.at(i, j, k)) continue;
        HexConnectivity conn;
        for (int c = 0; c < 8; ++c) {
          const auto& n = kHexCorners[c];
          conn[c] = id[node_index(i + (n[0] > 0), j + (n[1] > 0), k + (n[2] > 0))];
        }
        // kNeighbour[f] is the outward direction of kHexFaces[f].
        for (int f = 0; f < 6; ++f) {
          const int a = i + kNeighbour[f][0], b = j + kNeighbour[f][1], c = k + kNeighbour[f][2];
          const bool shared = a >= 0 && b >= 0 && c >= 0 && a < nx && b < ny && c < nz && grid.at(a, b, c);
          if (!shared)
            for (int v : kHexFaces[f]) boundary[conn[v]] = 1;
        }
        elements.push_back(conn);
      }
  return HexMesh(std::move(nodes), std::move(elements), grid.h, grid.domain, std::move(boundary));
}

// ---------------------------------------------------------------------------
// Surface conforming

namespace {

constexpr double kLadder[] = {1.0, 0.75, 0.5, 0.25, 0.1};

struct MovableNodes {
  std::vector<std::uint8_t> movable;
  std::vector<std::array<bool, 3>> locked;  // axis lies on a domain plane
};

MovableNodes find_movable_nodes(const HexMesh& mesh) {
  const Box& box = mesh.domain();
  const double tol = 1e-9 * box.extent().maxCoeff();
  const auto& x = mesh.nodes();
  auto on_plane = [&](std::uint32_t n, int axis, int side) {
    const double bound = side == 0 ? box.lo[axis] : box.hi[axis];
    return std::abs(x[n][axis] - bound) <= tol;
  };

  MovableNodes out;
  out.movable.assign(mesh.node_count(), 0);
  out.locked.assign(mesh.node_count(), {false, false, false});
  for (const auto& face : detail::collect_faces(mesh.elements())) {
    if (face.count != 1) continue;
    bool on_box = false;
    for (int axis = 0; axis < 3 && !on_box; ++axis)
      for (int side = 0; side < 2 && !on_box; ++side)
        on_box = std::all_of(face.nodes.begin(), face.nodes.end(),
                             [&](std::uint32_t n) { return on_plane(n, axis, side); });
    if (on_box) continue;
    for (auto n : face.nodes) out.movable[n] = 1;
  }
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (!out.movable[n]) continue;
    for (int axis = 0; axis < 3; ++axis)
      out.locked[n][axis] = on_plane(static_cast<std::uint32_t>(n), axis, 0) ||
                            on_plane(static_cast<std::uint32_t>(n), axis, 1);
  }
  return out;
}

}  // namespace

HexMesh conform_to_surface(const HexMesh& mesh, const ImplicitLattice& lattice,
                           const ConformOptions& options, ConformStats* stats) {
  if (!(options.min_jacobian > 0.0 && options.min_jacobian <= 1.0))
    throw std::invalid_argument("conform_to_surface: MJ target must lie in (0, 1]");
  ConformStats local;
  if (options.min_jacobian >= 1.0 || options.max_passes <= 0) {
    if (stats) *stats = local;
    return mesh;
  }

  const NodeElementAdjacency adjacency(mesh);
  const MovableNodes movable = find_movable_nodes(mesh);
  std::vector<Vec3> x = mesh.nodes();
  const auto& elements = mesh.elements();
  const double max_step = 2.0 * mesh.element_size();
  std::vector<std::uint8_t> ever_moved(mesh.node_count(), 0);

  auto star_ok = [&](std::size_t node) {
    for (auto e : adjacency.of(node)) {
      HexCorners c;
      for (int a = 0; a < 8; ++a) c[a] = x[elements[e][a]];
      try {
        if (scaled_jacobian(c) < options.min_jacobian) return false;
      } catch (const ZeroEdge&) {
        return false;
      }
    }
    return true;
  };

  auto project = [&](std::size_t node, Vec3& target) {
    Vec3 p = x[node];
    const auto& lock = movable.locked[node];
    for (int step = 0; step < options.newton_steps; ++step) {
      const double l = lattice.level(p);
      if (std::abs(l) < options.newton_tolerance) break;
      Vec3 g = lattice.level_gradient(p);
      for (int a = 0; a < 3; ++a)
        if (lock[a]) g[a] = 0.0;
      const double gg = g.squaredNorm();
      if (gg < 1e-14) return false;
      p -= (l / gg) * g;
    }
    if ((p - x[node]).norm() > max_step) return false;
    const Box& box = mesh.domain();
    if ((p.array() < box.lo.array()).any() || (p.array() > box.hi.array()).any()) return false;
    target = p;
    return true;
  };

  for (int pass = 0; pass < options.max_passes; ++pass) {
    ++local.passes;
    bool any_moved = false;
    for (std::size_t n = 0; n < mesh.node_count(); ++n) {
      if (!movable.movable[n]) continue;
      Vec3 target;
      if (!project(n, target)) continue;
      const Vec3 origin = x[n];
      const Vec3 d = target - origin;
      if (d.norm() <= 1e-9) continue;
      bool placed = false;
      for (double t : kLadder) {
        x[n] = origin + t * d;
        if (star_ok(n)) {
          placed = true;
          if (t * d.norm() > 1e-9) {
            any_moved = true;
            ever_moved[n] = 1;
          }
          break;
        }
      }
      if (!placed) {
        x[n] = origin;
        ++local.blocked_moves;
      }
    }
    if (!any_moved) break;
  }

  local.movable_nodes = static_cast<std::size_t>(std::count(movable.movable.begin(), movable.movable.end(), 1));
  local.moved_nodes = static_cast<std::size_t>(std::count(ever_moved.begin(), ever_moved.end(), 1));
  if (stats) *stats = local;
  return HexMesh(std::move(x), mesh.elements(), mesh.element_size(), mesh.domain(), mesh.boundary());
}

double mesh_relative_density(const HexMesh& mesh, const Box& domain) {
  double v = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) v += hex_volume(mesh.corners(e));
  return v / domain.volume();
}

// ---------------------------------------------------------------------------
// Components

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }
  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;  // smallest index is the representative
  }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

HexMesh filter_components(const HexMesh& mesh, ComponentKeep keep) {
  const std::size_t ne = mesh.element_count();
  if (ne == 0) throw EmptyMesh("cannot filter an empty mesh");
  DisjointSets sets(ne);
  for (const auto& face : detail::collect_faces(mesh.elements()))
    if (face.count == 2) sets.unite(face.owner, face.other);

  std::vector<std::uint32_t> root(ne);
  for (std::uint32_t e = 0; e < ne; ++e) root[e] = sets.find(e);

  std::vector<std::uint8_t> keep_element(ne, 0);
  if (keep == ComponentKeep::largest) {
    std::vector<std::size_t> size(ne, 0);
    for (auto r : root) ++size[r];
    const auto best = static_cast<std::uint32_t>(std::max_element(size.begin(), size.end()) - size.begin());
    for (std::size_t e = 0; e < ne; ++e) keep_element[e] = root[e] == best;
  } else {
    const Box& box = mesh.domain();
    const double tol = 1e-9 * box.extent().maxCoeff();
    std::vector<std::uint8_t> bottom(ne, 0), top(ne, 0);
    for (std::size_t e = 0; e < ne; ++e)
      for (auto n : mesh.elements()[e]) {
        const double z = mesh.nodes()[n].z();
        if (z <= box.lo.z() + tol) bottom[root[e]] = 1;
        if (z >= box.hi.z() - tol) top[root[e]] = 1;
      }
    bool any = false;
    for (std::size_t e = 0; e < ne; ++e) {
      keep_element[e] = bottom[root[e]] && top[root[e]];
      any = any || keep_element[e];
    }
    if (!any)
      throw NoSpanningComponent("no face-connected component touches both the bottom and top of the domain");
  }

  constexpr std::uint32_t kUnused = 0xffffffffu;
  std::vector<std::uint32_t> remap(mesh.node_count(), kUnused);
  for (std::size_t e = 0; e < ne; ++e)
    if (keep_element[e])
      for (auto n : mesh.elements()[e]) remap[n] = 0;
  std::vector<Vec3> nodes;
  std::vector<std::uint8_t> boundary;
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (remap[n] == kUnused) continue;
    remap[n] = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back(mesh.nodes()[n]);
    boundary.push_back(mesh.boundary()[n]);
  }
  std::vector<HexConnectivity> elements;
  for (std::size_t e = 0; e < ne; ++e) {
    if (!keep_element[e]) continue;
    HexConnectivity conn;
    for (int a = 0; a < 8; ++a) conn[a] = remap[mesh.elements()[e][a]];
    elements.push_back(conn);
  }
  return HexMesh(std::move(nodes), std::move(elements), mesh.element_size(), mesh.domain(),
                 std::move(boundary));
}

// ---------------------------------------------------------------------------

MeshQualityReport quality_report(const HexMesh& mesh, int cells_per_axis) {
  if (cells_per_axis < 1) throw std::invalid_argument("quality_report: n_cells must be >= 1");
  MeshQualityReport r;
  r.element_count = mesh.element_count();
  r.elements_per_cell =
      static_cast<double>(r.element_count) / (static_cast<double>(cells_per_axis) * cells_per_axis * cells_per_axis);
  double volume = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto c = mesh.corners(e);
    const double sj = scaled_jacobian(c);
    r.min_scaled_jacobian = std::min(r.min_scaled_jacobian, sj);
    const int bin = std::clamp(static_cast<int>(std::floor(sj * 10.0)), 0, 9);
    ++r.histogram[bin];
    volume += hex_volume(c);
  }
  r.relative_density = volume / mesh.domain().volume();
  return r;
}

}  // namespace tpmsvox
