#pragma once

#include "midas/common.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace midas {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
  /// Index of a required column; throws DataError naming the column if absent.
  std::size_t require(std::string_view name) const;
};

std::vector<std::string> split_csv_line(std::string_view line);
CsvTable read_csv(const std::filesystem::path& path);

/// Empty, "NA", "NaN" or "." parse to NaN; returns nullopt for anything unparseable.
std::optional<double> parse_cell(std::string_view cell);

/// Formats a double with round-trip precision (shortest representation).
std::string format_double(double v);

/// `key=value` line, ignoring blank lines and '#' comments. Whitespace around key and value is trimmed.
std::optional<std::pair<std::string, std::string>> parse_key_value(std::string_view line);

/// Reads a flat key=value file; later occurrences of a key win.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// 64-bit FNV-1a, used to fingerprint configs and specs in run manifests.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

/// Columnar binary container: 8-byte magic, little-endian u64 header length,
/// UTF-8 JSON header, then raw little-endian float64 columns in header order.
struct ColumnStore {
  std::string header_json;  // free-form metadata written into the header's "meta" member
  std::vector<std::pair<std::string, MatrixXd>> columns;

  void add(std::string name, MatrixXd values) { columns.emplace_back(std::move(name), std::move(values)); }
  const MatrixXd& get(std::string_view name) const;
  bool has(std::string_view name) const;

  void write(const std::filesystem::path& path) const;
  static ColumnStore read(const std::filesystem::path& path);
};

}  // namespace midas
