#include "tpmsvox/csv.hpp"

#include "tpmsvox/errors.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace tpmsvox {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

int CsvTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int CsvTable::column(std::string_view name) const {
  const int c = find(name);
  if (c < 0) throw IoError("CSV is missing column '" + std::string(name) + "'");
  return c;
}

double CsvTable::number(std::size_t row, int col) const {
  const std::string& cell = rows.at(row).at(static_cast<std::size_t>(col));
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    std::ostringstream msg;
    msg << "line " << lines.at(row) << ", column '" << header.at(col) << "': not a number: '" << cell << "'";
    throw IoError(msg.str());
  }
  return v;
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
  CsvTable t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line = trim(text.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      std::ostringstream msg;
      msg << source << ":" << line_no << ": expected " << t.header.size() << " fields, found " << cells.size();
      throw IoError(msg.str());
    }
    t.rows.push_back(std::move(cells));
    t.lines.push_back(line_no);
  }
  if (t.header.empty()) throw IoError(std::string(source) + ": CSV has no header row");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path.string());
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
                     std::string_view config_hash)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw IoError("cannot write " + path.string());
  if (!config_hash.empty()) out_ << "# config " << config_hash << '\n';
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CSV row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
  if (!out_) throw IoError("write failed: " + path_.string());
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw IoError("write failed: " + path_.string());
}

}  // namespace tpmsvox
