#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bcdlab {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Fixed-point with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

/// Minimal CSV builder; fields are written verbatim (no quoting needed for our tables).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row);
  std::size_t row_count() const noexcept { return rows_.size(); }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  const std::vector<std::string>& header() const noexcept { return header_; }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace bcdlab
