#pragma once

#include "tpmsvox/hex_mesh.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tpmsvox {

struct VtkField {
  std::string name;
  int components = 1;  // 1 (scalar) or 3 (vector)
  std::vector<double> values;
};

/// Legacy ASCII unstructured grid, cell type 12. Field lengths must be
/// components x node count (point data) or components x element count
/// (cell data).
void write_vtk(const HexMesh& mesh, const std::vector<VtkField>& node_fields,
               const std::vector<VtkField>& element_fields, const std::filesystem::path& path);

}  // namespace tpmsvox
