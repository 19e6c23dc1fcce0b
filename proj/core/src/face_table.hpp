#pragma once

#include "tpmsvox/hex_mesh.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

namespace tpmsvox::detail {

struct FaceRecord {
  std::array<std::uint32_t, 4> nodes;  // corner order of the first owner
  std::uint32_t owner = 0;
  std::uint32_t other = 0;  // second owner when count == 2
  int count = 0;
};

/// Unique hex faces by node set, sorted by key so results are independent of
/// hashing.
inline std::vector<FaceRecord> collect_faces(const std::vector<HexConnectivity>& elements) {
  struct Entry {
    std::array<std::uint32_t, 4> key;
    std::uint32_t element;
    std::uint8_t face;
  };
  std::vector<Entry> entries;
  entries.reserve(elements.size() * 6);
  for (std::uint32_t e = 0; e < elements.size(); ++e)
    for (std::uint8_t f = 0; f < 6; ++f) {
      std::array<std::uint32_t, 4> key;
      for (int a = 0; a < 4; ++a) key[a] = elements[e][kHexFaces[f][a]];
      std::sort(key.begin(), key.end());
      entries.push_back({key, e, f});
    }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.element < b.element;
  });

  std::vector<FaceRecord> faces;
  faces.reserve(entries.size() / 2 + 1);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    FaceRecord rec;
    for (int a = 0; a < 4; ++a) rec.nodes[a] = elements[entries[i].element][kHexFaces[entries[i].face][a]];
    rec.owner = entries[i].element;
    rec.other = j - i > 1 ? entries[i + 1].element : entries[i].element;
    rec.count = static_cast<int>(j - i);
    faces.push_back(rec);
    i = j;
  }
  return faces;
}

}  // namespace tpmsvox::detail
