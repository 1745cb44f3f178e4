#include "transitgap/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "transitgap/csv.hpp"
#include "transitgap/random.hpp"

namespace transitgap::ingest {
namespace {

const std::vector<std::string> kMonthlyColumns = {
    "year",           "month",          "passenger_trips", "revenue_miles",   "revenue_hours",
    "jmu_enrollment", "jmu_routes_ran", "city_routes_ran", "base_population", "in_session",
};
constexpr std::string_view kSummerColumn = "summer_enrollment";

double count(const csv::Table& t, std::size_t r, std::string_view col) {
  double v = t.number(r, col);
  if (v < 0.0)
    throw Error(ErrorCode::NegativeCount,
                t.source() + " line " + std::to_string(r + 2) + ": " + std::string(col) + " is negative");
  return v;
}

std::string column_label(std::string_view source, std::string_view suffix) {
  return std::string(source) + "_" + std::string(suffix);
}

}  // namespace

double adjusted_population(double base_pop, double enrollment, double summer_enrollment, bool in_session,
                           double off_session_factor) {
  if (summer_enrollment > enrollment)
    throw Error(ErrorCode::InconsistentEnrollment, "summer enrollment " + csv::format_number(summer_enrollment) +
                                                       " exceeds enrollment " + csv::format_number(enrollment));
  if (summer_enrollment < 0.0 || enrollment > base_pop)
    throw Error(ErrorCode::InconsistentEnrollment, "need 0 <= summer <= enrollment <= base population");
  if (in_session) return base_pop;
  return std::max(0.0, base_pop - off_session_factor * (enrollment - summer_enrollment));
}

std::vector<MonthlyRecord> load_monthly(const std::filesystem::path& monthly_csv,
                                        const std::optional<std::filesystem::path>& calendar_csv) {
  auto t = csv::Table::read(monthly_csv);
  for (const auto& c : kMonthlyColumns) t.column(c);
  const bool has_summer = t.has_column(kSummerColumn);
  std::vector<std::string> tvv_columns;
  for (const auto& h : t.header()) {
    if (std::find(kMonthlyColumns.begin(), kMonthlyColumns.end(), h) == kMonthlyColumns.end() && h != kSummerColumn)
      tvv_columns.push_back(h);
  }

  std::vector<MonthlyRecord> out;
  std::set<std::pair<int, int>> seen;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    MonthlyRecord m;
    m.year = static_cast<int>(t.integer(r, "year"));
    m.month = static_cast<int>(t.integer(r, "month"));
    if (m.month < 1 || m.month > 12)
      throw Error(ErrorCode::SchemaError, t.source() + " line " + std::to_string(r + 2) + ": month " +
                                              std::to_string(m.month) + " outside 1-12");
    if (!seen.emplace(m.year, m.month).second) throw Error(ErrorCode::DuplicateMonth, m.period());
    m.passenger_trips = count(t, r, "passenger_trips");
    m.revenue_miles = count(t, r, "revenue_miles");
    m.revenue_hours = count(t, r, "revenue_hours");
    m.jmu_enrollment = count(t, r, "jmu_enrollment");
    m.jmu_routes_ran = count(t, r, "jmu_routes_ran");
    m.city_routes_ran = count(t, r, "city_routes_ran");
    m.base_population = count(t, r, "base_population");
    m.in_session = t.boolean(r, "in_session");
    if (has_summer) m.jmu_summer_enrollment = count(t, r, kSummerColumn);
    for (const auto& c : tvv_columns) {
      double v = t.number(r, c);
      if (v < 0.0) throw Error(ErrorCode::NegativeCount, m.period() + ": " + c + " is negative");
      m.tvv[c] = v;
    }
    out.push_back(std::move(m));
  }
  if (out.size() < 12)
    throw Error(ErrorCode::TooFewRows, monthly_csv.string() + ": need at least 12 monthly rows, got " +
                                           std::to_string(out.size()));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return std::tie(a.year, a.month) < std::tie(b.year, b.month); });

  if (calendar_csv) {
    auto cal = csv::Table::read(*calendar_csv);
    std::map<std::pair<int, int>, bool> session;
    for (std::size_t r = 0; r < cal.rows(); ++r)
      session[{static_cast<int>(cal.integer(r, "year")), static_cast<int>(cal.integer(r, "month"))}] =
          cal.boolean(r, "in_session");
    for (auto& m : out) {
      auto it = session.find({m.year, m.month});
      if (it != session.end()) m.in_session = it->second;
    }
  }
  return out;
}

StopLoad load_stops(const std::filesystem::path& stops_csv, bool exclude_transfer_hubs, bool exclude_jmu_routes) {
  auto t = csv::Table::read(stops_csv);
  for (auto c : {"stop_id", "name", "lat", "lon", "total_riders", "city_routes_ran", "is_transfer_hub",
                 "on_jmu_route"})
    t.column(c);
  StopLoad out;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    StopRecord s;
    s.stop_id = t.cell(r, "stop_id");
    if (!ids.insert(s.stop_id).second) throw Error(ErrorCode::SchemaError, "duplicate stop_id " + s.stop_id);
    s.name = t.cell(r, "name");
    s.position = {t.number(r, "lat"), t.number(r, "lon")};
    s.total_riders = count(t, r, "total_riders");
    s.city_routes_ran = count(t, r, "city_routes_ran");
    s.is_transfer_hub = t.boolean(r, "is_transfer_hub");
    s.on_jmu_route = t.boolean(r, "on_jmu_route");
    if (exclude_transfer_hubs && s.is_transfer_hub) {
      ++out.excluded_hubs;
      continue;
    }
    if (exclude_jmu_routes && s.on_jmu_route) {
      ++out.excluded_jmu;
      continue;
    }
    out.stops.push_back(std::move(s));
  }
  if (out.stops.empty() && t.rows() > 0)
    out.warnings.push_back({"AllStopsExcluded", stops_csv.string(), "every stop was removed by the exclusion flags"});
  return out;
}

std::vector<NamedRow> temporal_rows(std::span<const MonthlyRecord> records, double off_session_factor) {
  std::vector<NamedRow> rows;
  for (const auto& m : records) {
    NamedRow r;
    r.row_id = m.period();
    auto& v = r.values;
    v["year"] = m.year;
    v["month"] = m.month;
    v["passenger_trips"] = m.passenger_trips;
    v["revenue_miles"] = m.revenue_miles;
    v["revenue_hours"] = m.revenue_hours;
    v["jmu_enrollment"] = m.jmu_enrollment;
    v["jmu_routes_ran"] = m.jmu_routes_ran;
    v["city_routes_ran"] = m.city_routes_ran;
    v["base_population"] = m.base_population;
    v["in_session"] = m.in_session ? 1.0 : 0.0;
    v["adjusted_population"] = adjusted_population(m.base_population, m.jmu_enrollment, m.jmu_summer_enrollment,
                                                   m.in_session, off_session_factor);
    for (const auto& [name, value] : m.tvv) v[name] = value;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<NamedRow> spatial_rows(std::span<const census::StopProfile> profiles) {
  std::vector<NamedRow> rows;
  for (const auto& p : profiles) {
    NamedRow r;
    r.row_id = p.stop.stop_id;
    auto& v = r.values;
    v["stop_pop"] = p.stop_pop;
    for (const auto& [name, value] : p.tvv) v[name] = value;
    v["latitude"] = p.stop.position.lat;
    v["longitude"] = p.stop.position.lon;
    v["city_routes_ran"] = p.stop.city_routes_ran;
    v["stop_ridership"] = p.stop.total_riders;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<NamedRow> read_rows(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingArtifact, path.string());
  auto t = csv::Table::read(path);
  t.column("row_id");
  std::vector<NamedRow> rows;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    NamedRow row;
    row.row_id = t.cell(r, "row_id");
    for (const auto& h : t.header()) {
      if (h != "row_id") row.values[h] = t.number(r, h);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_rows(const std::filesystem::path& path, std::span<const NamedRow> rows) {
  std::vector<std::string> header{"row_id"};
  if (!rows.empty()) {
    for (const auto& [name, _] : rows.front().values) header.push_back(name);
  }
  csv::Writer w(header);
  for (const auto& r : rows) {
    std::vector<std::string> fields{r.row_id};
    for (std::size_t i = 1; i < header.size(); ++i) {
      auto it = r.values.find(header[i]);
      if (it == r.values.end()) throw Error(ErrorCode::SchemaError, "row " + r.row_id + " lacks " + header[i]);
      fields.push_back(csv::format_number(it->second));
    }
    w.add_row(fields);
  }
  w.write(path);
}

std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::Numeric: return "numeric";
    case Encoding::CyclicMonth: return "cyclic-month";
    case Encoding::RawYear: return "raw-year";
  }
  return "numeric";
}

Encoding encoding_from_string(std::string_view s) {
  if (s == "numeric") return Encoding::Numeric;
  if (s == "cyclic-month") return Encoding::CyclicMonth;
  if (s == "raw-year") return Encoding::RawYear;
  throw Error(ErrorCode::SchemaError, "unknown feature encoding '" + std::string(s) + "'");
}

std::vector<std::string> FeatureSpec::column_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

std::vector<double> FeatureSpec::encode(const NamedRow& row) const {
  std::vector<double> out;
  out.reserve(columns.size());
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    auto it = row.values.find(feature_names[f]);
    if (it == row.values.end())
      throw Error(ErrorCode::UnknownFeature, "row " + row.row_id + " has no feature '" + feature_names[f] + "'");
    const double v = it->second;
    if (encodings[f] == Encoding::CyclicMonth) {
      const double angle = 2.0 * std::numbers::pi * v / 12.0;
      out.push_back(std::sin(angle));
      out.push_back(std::cos(angle));
    } else {
      out.push_back(v);
    }
  }
  if (out.size() != columns.size()) throw Error(ErrorCode::SpecMismatch, "feature spec columns inconsistent");
  return out;
}

void FeatureSpec::standardize(std::span<double> raw) const {
  if (raw.size() != columns.size()) throw Error(ErrorCode::DimensionMismatch, "standardize: wrong column count");
  for (std::size_t c = 0; c < raw.size(); ++c) raw[c] = (raw[c] - columns[c].mean) / columns[c].stddev;
}

void FeatureSpec::destandardize(std::span<double> z) const {
  if (z.size() != columns.size()) throw Error(ErrorCode::DimensionMismatch, "destandardize: wrong column count");
  for (std::size_t c = 0; c < z.size(); ++c) z[c] = z[c] * columns[c].stddev + columns[c].mean;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.spec = spec;
  for (auto i : indices) {
    out.targets.push_back(targets[i]);
    out.row_ids.push_back(row_ids[i]);
  }
  return out;
}

Dataset build_design_matrix(std::span<const NamedRow> rows, const DesignRequest& request) {
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "no rows to build a design matrix from");
  if (request.features.empty()) throw Error(ErrorCode::UnknownFeature, "no features requested");
  FeatureSpec spec;
  spec.target = request.target;
  for (const auto& name : request.features) {
    if (std::find(spec.feature_names.begin(), spec.feature_names.end(), name) != spec.feature_names.end())
      throw Error(ErrorCode::UnknownFeature, "feature '" + name + "' requested twice");
    if (!rows.front().values.contains(name)) throw Error(ErrorCode::UnknownFeature, "unknown feature '" + name + "'");
    Encoding enc = Encoding::Numeric;
    if (name == "year") enc = Encoding::RawYear;
    if (name == "month" && request.month_encoding == MonthEncoding::Cyclic) enc = Encoding::CyclicMonth;
    spec.feature_names.push_back(name);
    spec.encodings.push_back(enc);
    if (enc == Encoding::CyclicMonth) {
      spec.columns.push_back({column_label(name, "sin"), name, enc});
      spec.columns.push_back({column_label(name, "cos"), name, enc});
    } else {
      spec.columns.push_back({name, name, enc});
    }
  }

  const std::size_t n = rows.size();
  Matrix raw(n, spec.column_count());
  std::vector<double> targets(n);
  std::vector<std::string> ids(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto enc = spec.encode(rows[r]);
    std::copy(enc.begin(), enc.end(), raw.row(r).begin());
    auto it = rows[r].values.find(request.target);
    if (it == rows[r].values.end())
      throw Error(ErrorCode::UnknownFeature, "row " + rows[r].row_id + " has no target '" + request.target + "'");
    targets[r] = it->second;
    ids[r] = rows[r].row_id;
  }

  for (std::size_t c = 0; c < spec.column_count(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += raw(r, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (raw(r, c) - mean) * (raw(r, c) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
      throw Error(ErrorCode::ConstantFeature, "column '" + spec.columns[c].name + "' is constant");
    spec.columns[c].mean = mean;
    spec.columns[c].stddev = sd;
  }
  for (std::size_t r = 0; r < n; ++r) spec.standardize(raw.row(r));

  Dataset ds{std::move(raw), std::move(targets), std::move(spec), std::move(ids)};
  for (double v : ds.features.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::SchemaError, "non-finite feature value");
  }
  for (double v : ds.targets) {
    if (!std::isfinite(v)) throw Error(ErrorCode::SchemaError, "non-finite target value");
  }
  return ds;
}

Dataset apply_spec(std::span<const NamedRow> rows, const FeatureSpec& spec, bool allow_missing_target) {
  Dataset ds;
  ds.spec = spec;
  ds.features = Matrix(rows.size(), spec.column_count());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto enc = spec.encode(rows[r]);
    spec.standardize(enc);
    std::copy(enc.begin(), enc.end(), ds.features.row(r).begin());
    auto it = rows[r].values.find(spec.target);
    if (it == rows[r].values.end() && !allow_missing_target)
      throw Error(ErrorCode::SpecMismatch, "row " + rows[r].row_id + " has no target '" + spec.target + "'");
    ds.targets.push_back(it == rows[r].values.end() ? 0.0 : it->second);
    ds.row_ids.push_back(rows[r].row_id);
  }
  return ds;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  const std::size_t n = ds.rows();
  if (n < 5) throw Error(ErrorCode::TooFewRows, "split needs at least 5 rows, got " + std::to_string(n));
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::ConfigError, "train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  // the epsilon keeps e.g. 0.29 * 100 from flooring to 28
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
  std::span<const std::size_t> all(order);
  return {ds.subset(all.first(n_train)), ds.subset(all.subspan(n_train))};
}

}  // namespace transitgap::ingest
