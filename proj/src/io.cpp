#include "midas/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace midas {

namespace {

constexpr char kMagic[8] = {'M', 'I', 'D', 'A', 'S', 'C', 'O', 'L'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<std::size_t> CsvTable::column_index(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::require(std::string_view name) const {
  const auto idx = column_index(name);
  if (!idx) throw DataError("missing required column '" + std::string(name) + "'");
  return *idx;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (first) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      t.header = split_csv_line(line);
      first = false;
    } else {
      t.rows.push_back(split_csv_line(line));
    }
  }
  if (first) throw DataError(path.string() + ": empty file");
  return t;
}

std::optional<double> parse_cell(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".")
    return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::optional<std::pair<std::string, std::string>> parse_key_value(std::string_view line) {
  const auto hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  line = trim(line);
  if (line.empty()) return std::nullopt;
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(line) + "'");
  return std::pair{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))};
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto kv = parse_key_value(line)) out[kv->first] = kv->second;
  }
  return out;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const MatrixXd& ColumnStore::get(std::string_view name) const {
  for (const auto& [n, m] : columns)
    if (n == name) return m;
  throw DataError("column store has no column '" + std::string(name) + "'");
}

bool ColumnStore::has(std::string_view name) const {
  return std::any_of(columns.begin(), columns.end(), [&](const auto& c) { return c.first == name; });
}

void ColumnStore::write(const std::filesystem::path& path) const {
  static_assert(std::endian::native == std::endian::little, "column store assumes a little-endian host");
  nlohmann::ordered_json header;
  header["format"] = "midas-columns";
  header["version"] = 1;
  header["meta"] = header_json.empty() ? nlohmann::ordered_json::object() : nlohmann::ordered_json::parse(header_json);
  std::uint64_t offset = 0;
  auto cols = nlohmann::ordered_json::array();
  for (const auto& [name, m] : columns) {
    cols.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  }
  header["columns"] = cols;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : columns)
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!out) throw DataError("write failed for " + path.string());
}

ColumnStore ColumnStore::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw DataError(path.string() + ": not a column store");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError(path.string() + ": truncated header");
  const auto header = nlohmann::ordered_json::parse(text);
  if (header.at("version").get<int>() != 1) throw DataError(path.string() + ": unsupported version");
  ColumnStore store;
  store.header_json = header.at("meta").dump();
  for (const auto& c : header.at("columns")) {
    MatrixXd m(c.at("rows").get<Index>(), c.at("cols").get<Index>());
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw DataError(path.string() + ": truncated column " + c.at("name").get<std::string>());
    store.columns.emplace_back(c.at("name").get<std::string>(), std::move(m));
  }
  return store;
}

}  // namespace midas
