#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace tpmsvox {

/// Comma-separated table. Blank lines and lines starting with '#' are
/// skipped; the first remaining line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  /// Column index or -1.
  int find(std::string_view name) const;
  /// Column index; throws IoError naming the missing column.
  int column(std::string_view name) const;
  /// Parsed number; throws IoError naming the line and column.
  double number(std::size_t row, int col) const;
};

CsvTable parse_csv(std::string_view text, std::string_view source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

/// Writes a `# config <hash>` line, the header, then rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
            std::string_view config_hash = {});
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace tpmsvox
