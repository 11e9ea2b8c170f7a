#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fvselect {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

using CsvCell = std::variant<std::string, double, std::int64_t, std::uint64_t>;

/// Comma-separated output with a fixed header. Cells are never quoted, so
/// string cells must not contain commas or newlines.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(const std::vector<CsvCell>& cells);
  const std::vector<std::string>& header() const { return header_; }

 private:
  std::ofstream out_;
  std::vector<std::string> header_;
};

/// Whole-file CSV reader for the files CsvWriter produces.
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  bool has_column(std::string_view name) const;
  /// Throws std::runtime_error naming the missing column.
  std::size_t column(std::string_view name) const;
  const std::string& cell(std::size_t row, std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace fvselect
