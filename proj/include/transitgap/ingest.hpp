#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "transitgap/census_geo.hpp"
#include "transitgap/error.hpp"
#include "transitgap/matrix.hpp"
#include "transitgap/records.hpp"

namespace transitgap::ingest {

inline constexpr double kDefaultOffSessionFactor = 0.9;

// City population corrected for students who leave when the university is
// off session: a fixed share of students not taking summer classes is
// assumed absent.
double adjusted_population(double base_pop, double enrollment, double summer_enrollment, bool in_session,
                           double off_session_factor = kDefaultOffSessionFactor);

// Sorted by (year, month). Columns other than the fixed schema are read as
// TVV values. If calendar_csv is given its in_session flags win.
std::vector<MonthlyRecord> load_monthly(const std::filesystem::path& monthly_csv,
                                        const std::optional<std::filesystem::path>& calendar_csv = std::nullopt);

struct StopLoad {
  std::vector<StopRecord> stops;
  std::size_t excluded_hubs = 0;
  std::size_t excluded_jmu = 0;
  Warnings warnings;
};

StopLoad load_stops(const std::filesystem::path& stops_csv, bool exclude_transfer_hubs, bool exclude_jmu_routes);

// Flat record keyed by feature name; the common currency between loaders
// and the design-matrix builder.
struct NamedRow {
  std::string row_id;
  std::map<std::string, double, std::less<>> values;

  bool operator==(const NamedRow&) const = default;
};

std::vector<NamedRow> temporal_rows(std::span<const MonthlyRecord> records,
                                    double off_session_factor = kDefaultOffSessionFactor);
std::vector<NamedRow> spatial_rows(std::span<const census::StopProfile> profiles);

std::vector<NamedRow> read_rows(const std::filesystem::path& path);
void write_rows(const std::filesystem::path& path, std::span<const NamedRow> rows);

enum class Encoding { Numeric, CyclicMonth, RawYear };
enum class MonthEncoding { Cyclic, Raw };

std::string_view to_string(Encoding e);
Encoding encoding_from_string(std::string_view s);

struct FeatureColumn {
  std::string name;    // column label, e.g. "month_sin"
  std::string source;  // requested feature it derives from, e.g. "month"
  Encoding encoding = Encoding::Numeric;
  double mean = 0.0;
  double stddev = 1.0;

  bool operator==(const FeatureColumn&) const = default;
};

struct FeatureSpec {
  std::vector<std::string> feature_names;
  std::vector<Encoding> encodings;     // parallel to feature_names
  std::vector<FeatureColumn> columns;  // column order of every design matrix
  std::string target;

  std::size_t column_count() const { return columns.size(); }
  std::vector<std::string> column_names() const;

  // Raw (unstandardized) column values for one row.
  std::vector<double> encode(const NamedRow& row) const;
  void standardize(std::span<double> raw_columns) const;
  void destandardize(std::span<double> columns) const;

  bool operator==(const FeatureSpec&) const = default;
};

struct Dataset {
  Matrix features;  // standardized
  std::vector<double> targets;
  FeatureSpec spec;
  std::vector<std::string> row_ids;

  std::size_t rows() const { return targets.size(); }
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct DesignRequest {
  std::vector<std::string> features;
  std::string target;
  MonthEncoding month_encoding = MonthEncoding::Cyclic;
};

// Standardization statistics are computed over the given rows and stored in
// the returned spec.
Dataset build_design_matrix(std::span<const NamedRow> rows, const DesignRequest& request);

// Encodes rows with an existing spec (no new statistics). The target is
// required unless allow_missing_target, in which case it is 0.
Dataset apply_spec(std::span<const NamedRow> rows, const FeatureSpec& spec, bool allow_missing_target = false);

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace transitgap::ingest
