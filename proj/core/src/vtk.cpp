#include "tpmsvox/vtk.hpp"

#include "tpmsvox/errors.hpp"

#include <fstream>

namespace tpmsvox {

namespace {

void check_field(const VtkField& f, std::size_t count, const char* where) {
  if (f.components != 1 && f.components != 3)
    throw std::invalid_argument("VTK field '" + f.name + "' must have 1 or 3 components");
  if (f.values.size() != count * static_cast<std::size_t>(f.components))
    throw std::invalid_argument(std::string("VTK ") + where + " field '" + f.name +
                                "' has " + std::to_string(f.values.size()) + " values, expected " +
                                std::to_string(count * f.components));
}

void write_fields(std::ostream& out, const std::vector<VtkField>& fields) {
  for (const auto& f : fields) {
    if (f.components == 1)
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    else
      out << "VECTORS " << f.name << " double\n";
    for (std::size_t i = 0; i < f.values.size(); i += f.components) {
      for (int c = 0; c < f.components; ++c) out << (c ? " " : "") << f.values[i + c];
      out << '\n';
    }
  }
}

}  // namespace

void write_vtk(const HexMesh& mesh, const std::vector<VtkField>& node_fields,
               const std::vector<VtkField>& element_fields, const std::filesystem::path& path) {
  for (const auto& f : node_fields) check_field(f, mesh.node_count(), "point");
  for (const auto& f : element_fields) check_field(f, mesh.element_count(), "cell");

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.precision(12);
  out << "# vtk DataFile Version 3.0\ntpmsvox hexahedral mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.node_count() << " double\n";
  for (const auto& p : mesh.nodes()) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  out << "CELLS " << mesh.element_count() << ' ' << mesh.element_count() * 9 << '\n';
  for (const auto& conn : mesh.elements()) {
    out << 8;
    for (auto n : conn) out << ' ' << n;
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.element_count() << '\n';
  for (std::size_t e = 0; e < mesh.element_count(); ++e) out << "12\n";
  if (!node_fields.empty()) {
    out << "POINT_DATA " << mesh.node_count() << '\n';
    write_fields(out, node_fields);
  }
  if (!element_fields.empty()) {
    out << "CELL_DATA " << mesh.element_count() << '\n';
    write_fields(out, element_fields);
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace tpmsvox
