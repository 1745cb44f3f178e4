#include "transitgap/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "transitgap/error.hpp"

namespace transitgap::csv {
namespace {

std::vector<std::vector<std::string>> split_records(std::string_view text, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_record = [&] {
    fields.push_back(std::move(field));
    field.clear();
    bool blank = fields.size() == 1 && fields[0].empty();
    if (!blank) records.push_back(std::move(fields));
    fields.clear();
    field_started = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // tolerated before \n
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw Error(ErrorCode::SchemaError, source + ": unterminated quoted field");
  if (field_started || !field.empty() || !fields.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

Table Table::parse(std::string_view text, const std::string& source_name) {
  Table t;
  t.source_ = source_name;
  auto records = split_records(text, source_name);
  if (records.empty()) throw Error(ErrorCode::SchemaError, source_name + ": empty file (no header)");
  for (auto& h : records.front()) t.header_.emplace_back(trim(h));
  for (std::size_t i = 0; i < t.header_.size(); ++i) {
    if (!t.index_.emplace(t.header_[i], i).second)
      throw Error(ErrorCode::SchemaError, source_name + ": duplicate column '" + t.header_[i] + "'");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    // a trailing optional column may be omitted entirely
    if (rec.size() > t.header_.size() || rec.size() + 1 < t.header_.size())
      throw Error(ErrorCode::SchemaError, source_name + ": line " + std::to_string(r + 1) + " has " +
                                              std::to_string(rec.size()) + " fields, expected " +
                                              std::to_string(t.header_.size()));
    rec.resize(t.header_.size());
    t.rows_.push_back(std::move(rec));
  }
  return t;
}

Table Table::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool Table::has_column(std::string_view name) const { return find_column(name).has_value(); }

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Table::column(std::string_view name) const {
  auto c = find_column(name);
  if (!c) throw Error(ErrorCode::SchemaError, source_ + ": missing column '" + std::string(name) + "'");
  return *c;
}

const std::string& Table::cell(std::size_t row, std::string_view column_name) const {
  return rows_.at(row)[column(column_name)];
}

double Table::number(std::size_t row, std::string_view column_name) const {
  return parse_number(cell(row, column_name),
                      source_ + " line " + std::to_string(row + 2) + " column " + std::string(column_name));
}

long long Table::integer(std::size_t row, std::string_view column_name) const {
  double v = number(row, column_name);
  if (v != std::floor(v))
    throw Error(ErrorCode::SchemaError, source_ + " line " + std::to_string(row + 2) + ": column " +
                                            std::string(column_name) + " must be an integer");
  return static_cast<long long>(v);
}

bool Table::boolean(std::size_t row, std::string_view column_name) const {
  return parse_bool(cell(row, column_name),
                    source_ + " line " + std::to_string(row + 2) + " column " + std::string(column_name));
}

double parse_number(std::string_view text, std::string_view context) {
  auto s = trim(text);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw Error(ErrorCode::SchemaError,
                std::string(context) + ": expected a finite number, got '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text, std::string_view context) {
  auto s = trim(text);
  if (s == "true" || s == "TRUE" || s == "True" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "FALSE" || s == "False" || s == "0" || s == "no") return false;
  throw Error(ErrorCode::SchemaError, std::string(context) + ": expected a boolean, got '" + std::string(text) + "'");
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string escape_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Writer::Writer(std::vector<std::string> header) : width_(header.size()) { add_row(header); }

void Writer::add_row(const std::vector<std::string>& fields) {
  if (fields.size() != width_)
    throw Error(ErrorCode::SchemaError, "csv writer: row has " + std::to_string(fields.size()) + " fields, expected " +
                                            std::to_string(width_));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.push_back(',');
    out_ += escape_field(fields[i]);
  }
  out_.push_back('\n');
}

void Writer::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << out_;
}

}  // namespace transitgap::csv
