#include "tpmsvox/surface.hpp"

#include "tpmsvox/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

namespace tpmsvox {

static_assert(std::endian::native == std::endian::little, "binary STL I/O assumes little-endian");

Vec3 TriMesh::normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriMesh::area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

namespace {

// Freudenthal split of the unit cube into six tetrahedra sharing the main
// diagonal 0-7. Corner c has offset (c & 1, c >> 1 & 1, c >> 2 & 1). Every
// face is cut along the diagonal through its lowest corner, so neighbouring
// cubes agree and the extracted surface is conforming.
constexpr int kTets[6][4] = {
    {0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7},
};

constexpr double kVoidSentinel = -1.0e3;
constexpr double kMinEdgeFraction = 1e-4;

class SampleLattice {
 public:
  SampleLattice(const ImplicitLattice& lattice, const Box& domain, int resolution, bool capped)
      : pad_(capped ? 1 : 0) {
    const Vec3 ext = domain.extent();
    for (int a = 0; a < 3; ++a) {
      const double cells = ext[a] / lattice.cell_size()[a];
      intervals_[a] = std::max(1, static_cast<int>(std::lround(cells * resolution)));
      step_[a] = ext[a] / intervals_[a];
      dims_[a] = intervals_[a] + 1 + 2 * pad_;
    }
    origin_ = domain.lo - Vec3(step_[0], step_[1], step_[2]) * pad_;
    values_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
    for (int k = 0; k < dims_[2]; ++k)
      for (int j = 0; j < dims_[1]; ++j)
        for (int i = 0; i < dims_[0]; ++i) {
          const bool pad = pad_ && (i == 0 || j == 0 || k == 0 || i == dims_[0] - 1 ||
                                    j == dims_[1] - 1 || k == dims_[2] - 1);
          values_[index(i, j, k)] = pad ? kVoidSentinel : lattice.level(position(i, j, k));
        }
  }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(dims_[0]) *
                                             (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
  }
  Vec3 position(int i, int j, int k) const {
    return origin_ + Vec3(i * step_[0], j * step_[1], k * step_[2]);
  }
  Vec3 position(std::size_t idx) const {
    const auto i = static_cast<int>(idx % dims_[0]);
    const auto j = static_cast<int>((idx / dims_[0]) % dims_[1]);
    const auto k = static_cast<int>(idx / (static_cast<std::size_t>(dims_[0]) * dims_[1]));
    return position(i, j, k);
  }
  double value(std::size_t idx) const { return values_[idx]; }
  int dim(int a) const { return dims_[a]; }
  std::size_t count() const { return values_.size(); }

 private:
  int pad_;
  std::array<int, 3> intervals_{};
  std::array<int, 3> dims_{};
  std::array<double, 3> step_{};
  Vec3 origin_;
  std::vector<double> values_;
};

class Extractor {
 public:
  explicit Extractor(const SampleLattice& samples) : s_(samples) {}

  void run() {
    for (int k = 0; k + 1 < s_.dim(2); ++k)
      for (int j = 0; j + 1 < s_.dim(1); ++j)
        for (int i = 0; i + 1 < s_.dim(0); ++i) cube(i, j, k);
  }

  TriMesh take() { return std::move(mesh_); }

 private:
  void cube(int i, int j, int k) {
    std::array<std::size_t, 8> corner;
    int solid = 0;
    for (int c = 0; c < 8; ++c) {
      corner[c] = s_.index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
      solid += s_.value(corner[c]) >= 0.0 ? 1 : 0;
    }
    if (solid == 0 || solid == 8) return;
    for (const auto& tet : kTets)
      tetrahedron({corner[tet[0]], corner[tet[1]], corner[tet[2]], corner[tet[3]]});
  }

  void tetrahedron(const std::array<std::size_t, 4>& v) {
    std::array<std::size_t, 4> in{}, out{};
    int n_in = 0, n_out = 0;
    for (std::size_t idx : v) {
      if (s_.value(idx) >= 0.0)
        in[n_in++] = idx;
      else
        out[n_out++] = idx;
    }
    if (n_in == 0 || n_out == 0) return;

    Vec3 c_in = Vec3::Zero(), c_out = Vec3::Zero();
    for (int a = 0; a < n_in; ++a) c_in += s_.position(in[a]);
    for (int a = 0; a < n_out; ++a) c_out += s_.position(out[a]);
    const Vec3 outward = c_out / n_out - c_in / n_in;

    if (n_in == 1) {
      emit(crossing(in[0], out[0]), crossing(in[0], out[1]), crossing(in[0], out[2]), outward);
    } else if (n_out == 1) {
      emit(crossing(in[0], out[0]), crossing(in[1], out[0]), crossing(in[2], out[0]), outward);
    } else {
      // Quad cross-section: a-c, a-d, b-d, b-c is a cycle.
      const auto ac = crossing(in[0], out[0]);
      const auto ad = crossing(in[0], out[1]);
      const auto bd = crossing(in[1], out[1]);
      const auto bc = crossing(in[1], out[0]);
      emit(ac, ad, bd, outward);
      emit(ac, bd, bc, outward);
    }
  }

  std::uint32_t crossing(std::size_t inside, std::size_t outside) {
    const std::uint64_t key = static_cast<std::uint64_t>(std::min(inside, outside)) * s_.count() +
                              std::max(inside, outside);
    auto [it, fresh] = edge_vertex_.try_emplace(key, static_cast<std::uint32_t>(mesh_.vertices.size()));
    if (fresh) {
      const double a = s_.value(inside);
      const double b = s_.value(outside);
      double t = a / (a - b);
      t = std::clamp(t, kMinEdgeFraction, 1.0 - kMinEdgeFraction);
      mesh_.vertices.push_back(s_.position(inside) + t * (s_.position(outside) - s_.position(inside)));
    }
    return it->second;
  }

  void emit(std::uint32_t a, std::uint32_t b, std::uint32_t c, const Vec3& outward) {
    const Vec3 n = (mesh_.vertices[b] - mesh_.vertices[a]).cross(mesh_.vertices[c] - mesh_.vertices[a]);
    if (n.dot(outward) >= 0.0)
      mesh_.triangles.push_back({a, b, c});
    else
      mesh_.triangles.push_back({a, c, b});
  }

  const SampleLattice& s_;
  TriMesh mesh_;
  std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex_;
};

}  // namespace

TriMesh extract_surface(const ImplicitLattice& lattice, const Box& domain,
                        const SurfaceOptions& options) {
  if (options.resolution < 8)
    throw std::invalid_argument("extract_surface: resolution must be >= 8 samples per cell edge");
  if (domain.empty()) throw std::invalid_argument("extract_surface: empty domain");

  const SampleLattice samples(lattice, domain, options.resolution, options.capped);
  Extractor extractor(samples);
  extractor.run();
  TriMesh mesh = extractor.take();
  if (mesh.triangles.empty())
    throw EmptySurface("solid predicate does not change sign anywhere in the domain");
  mesh.outward = true;
  return mesh;
}

double enclosed_volume(const TriMesh& mesh) {
  if (mesh.vertices.empty()) return 0.0;
  Vec3 c = Vec3::Zero();
  for (const auto& v : mesh.vertices) c += v;
  c /= static_cast<double>(mesh.vertices.size());
  double six_v = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]] - c;
    const Vec3 b = mesh.vertices[t[1]] - c;
    const Vec3 d = mesh.vertices[t[2]] - c;
    six_v += a.dot(b.cross(d));
  }
  return six_v / 6.0;
}

// ---------------------------------------------------------------------------
// STL

namespace {

void put_f32(std::ostream& out, double v) {
  const float f = static_cast<float>(v);
  char buf[4];
  std::memcpy(buf, &f, 4);
  out.write(buf, 4);
}

}  // namespace

void write_stl(const TriMesh& mesh, const std::filesystem::path& path, StlMode mode,
               std::string_view solid_name) {
  std::ofstream out(path, mode == StlMode::binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

  if (mode == StlMode::binary) {
    char header[80] = {};
    const std::string tag = "binary STL " + std::string(solid_name);
    std::memcpy(header, tag.data(), std::min<std::size_t>(tag.size(), 80));
    out.write(header, 80);
    const auto count = static_cast<std::uint32_t>(mesh.triangles.size());
    char cbuf[4];
    std::memcpy(cbuf, &count, 4);
    out.write(cbuf, 4);
    const char attr[2] = {0, 0};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const Vec3 n = mesh.normal(t);
      for (int a = 0; a < 3; ++a) put_f32(out, n[a]);
      for (auto vi : mesh.triangles[t])
        for (int a = 0; a < 3; ++a) put_f32(out, mesh.vertices[vi][a]);
      out.write(attr, 2);
    }
  } else {
    out << "solid " << solid_name << '\n';
    char line[160];
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const Vec3 n = mesh.normal(t);
      std::snprintf(line, sizeof line, "  facet normal %.9g %.9g %.9g\n", n.x(), n.y(), n.z());
      out << line << "    outer loop\n";
      for (auto vi : mesh.triangles[t]) {
        const Vec3& v = mesh.vertices[vi];
        std::snprintf(line, sizeof line, "      vertex %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
        out << line;
      }
      out << "    endloop\n  endfacet\n";
    }
    out << "endsolid " << solid_name << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

TriMesh read_stl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  TriMesh mesh;
  auto add_vertex = [&](const Vec3& v) {
    mesh.vertices.push_back(v);
    return static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  };

  const bool ascii = bytes.rfind("solid", 0) == 0 && bytes.find("facet") != std::string::npos;
  if (ascii) {
    std::istringstream ss(bytes);
    std::string word;
    std::array<std::uint32_t, 3> tri{};
    int corner = 0;
    while (ss >> word) {
      if (word != "vertex") continue;
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (!ss) throw IoError("malformed vertex line in '" + path.string() + "'");
      tri[corner++] = add_vertex(v);
      if (corner == 3) {
        mesh.triangles.push_back(tri);
        corner = 0;
      }
    }
    return mesh;
  }

  if (bytes.size() < 84) throw IoError("'" + path.string() + "' is too short for binary STL");
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 80, 4);
  if (bytes.size() < 84 + 50ULL * count)
    throw IoError("'" + path.string() + "' is truncated: header declares " +
                  std::to_string(count) + " triangles");
  const char* rec = bytes.data() + 84;
  for (std::uint32_t t = 0; t < count; ++t, rec += 50) {
    std::array<std::uint32_t, 3> tri{};
    for (int c = 0; c < 3; ++c) {
      float xyz[3];
      std::memcpy(xyz, rec + 12 + 12 * c, 12);
      tri[c] = add_vertex(Vec3(xyz[0], xyz[1], xyz[2]));
    }
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

}  // namespace tpmsvox
