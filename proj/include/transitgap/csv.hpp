#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace transitgap::csv {

// A parsed CSV file with a header row. Supports RFC 4180 quoting, which the
// block boundary column needs (WKT polygons contain commas).
class Table {
 public:
  static Table parse(std::string_view text, const std::string& source_name = "<memory>");
  static Table read(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }

  bool has_column(std::string_view name) const;
  // Throws SchemaError if the column is missing.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;

  const std::string& cell(std::size_t row, std::string_view column_name) const;
  double number(std::size_t row, std::string_view column_name) const;
  long long integer(std::size_t row, std::string_view column_name) const;
  bool boolean(std::size_t row, std::string_view column_name) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

double parse_number(std::string_view text, std::string_view context);
bool parse_bool(std::string_view text, std::string_view context);

// Shortest representation that round-trips exactly; locale independent.
std::string format_number(double value);

std::string escape_field(std::string_view field);

class Writer {
 public:
  explicit Writer(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& fields);
  std::string str() const { return out_; }
  void write(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::string out_;
};

}  // namespace transitgap::csv
