#include "transitgap/census_geo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "transitgap/csv.hpp"

namespace transitgap {

std::string MonthlyRecord::period() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

}  // namespace transitgap

namespace transitgap::census {
namespace {

bool is_count_variable(std::string_view name) { return name != kMedianIncome; }

void check_coordinate(LatLon p, std::string_view context) {
  if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0))
    throw Error(ErrorCode::OutOfRangeCoordinate, std::string(context) + ": (" + csv::format_number(p.lat) + ", " +
                                                     csv::format_number(p.lon) + ")");
}

double non_negative(const csv::Table& t, std::size_t row, std::string_view column) {
  double v = t.number(row, column);
  if (v < 0.0)
    throw Error(ErrorCode::NegativeCount, t.source() + " line " + std::to_string(row + 2) + ": " +
                                              std::string(column) + " = " + csv::format_number(v));
  return v;
}

}  // namespace

CensusIndex::CensusIndex(std::vector<CensusTract> tracts, std::vector<BlockGroup> groups,
                         std::vector<CensusBlock> blocks)
    : tracts_(std::move(tracts)), groups_(std::move(groups)), blocks_(std::move(blocks)) {
  for (std::size_t i = 0; i < tracts_.size(); ++i) {
    const auto& t = tracts_[i];
    if (t.population < 0.0) throw Error(ErrorCode::NegativeCount, "tract " + t.tract_id + " population");
    if (t.svi && !(*t.svi >= 0.0 && *t.svi <= 1.0))
      throw Error(ErrorCode::SchemaError, "tract " + t.tract_id + ": svi outside [0,1]");
    if (!tract_index_.emplace(t.tract_id, i).second)
      throw Error(ErrorCode::SchemaError, "duplicate tract " + t.tract_id);
  }
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const auto& g = groups_[i];
    if (!tract_index_.contains(g.parent_tract_id))
      throw Error(ErrorCode::MissingParent, "block group " + g.group_id + " references unknown tract " +
                                                g.parent_tract_id);
    if (g.population < 0.0) throw Error(ErrorCode::NegativeCount, "block group " + g.group_id + " population");
    for (auto name : kTvvNames) {
      auto it = g.tvv.find(name);
      if (it == g.tvv.end())
        throw Error(ErrorCode::SchemaError, "block group " + g.group_id + " lacks variable " + std::string(name));
      if (it->second < 0.0)
        throw Error(ErrorCode::NegativeCount, "block group " + g.group_id + " " + std::string(name));
    }
    if (!group_index_.emplace(g.group_id, i).second)
      throw Error(ErrorCode::SchemaError, "duplicate block group " + g.group_id);
    children_[g.group_id];
  }
  std::unordered_map<std::string, bool> seen;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    if (!seen.emplace(b.block_id, true).second) throw Error(ErrorCode::SchemaError, "duplicate block " + b.block_id);
    auto it = children_.find(b.parent_group_id);
    if (it == children_.end())
      throw Error(ErrorCode::MissingParent, "block " + b.block_id + " references unknown group " + b.parent_group_id);
    if (b.population < 0.0) throw Error(ErrorCode::NegativeCount, "block " + b.block_id + " population");
    if (!b.boundary_points.empty() && b.boundary_points.size() < 3)
      throw Error(ErrorCode::SchemaError, "block " + b.block_id + ": boundary needs at least 3 vertices");
    check_coordinate(b.centroid, "block " + b.block_id);
    for (auto p : b.boundary_points) check_coordinate(p, "block " + b.block_id + " boundary");
    it->second.push_back(i);
  }
  for (const auto& g : groups_) {
    double sum = 0.0;
    for (auto i : children_.at(g.group_id)) sum += blocks_[i].population;
    double scale = std::max({std::abs(sum), std::abs(g.population), 1.0});
    if (std::abs(sum - g.population) > 1e-9 * scale)
      throw Error(ErrorCode::PopulationMismatch, "block group " + g.group_id + " population " +
                                                     csv::format_number(g.population) + " but blocks sum to " +
                                                     csv::format_number(sum));
  }
}

const BlockGroup& CensusIndex::group(const std::string& group_id) const {
  auto it = group_index_.find(group_id);
  if (it == group_index_.end()) throw Error(ErrorCode::MissingParent, "unknown block group " + group_id);
  return groups_[it->second];
}

const CensusTract& CensusIndex::tract(const std::string& tract_id) const {
  auto it = tract_index_.find(tract_id);
  if (it == tract_index_.end()) throw Error(ErrorCode::MissingParent, "unknown tract " + tract_id);
  return tracts_[it->second];
}

const std::vector<std::size_t>& CensusIndex::children(const std::string& group_id) const {
  auto it = children_.find(group_id);
  if (it == children_.end()) throw Error(ErrorCode::MissingParent, "unknown block group " + group_id);
  return it->second;
}

std::vector<LatLon> parse_polygon_wkt(std::string_view wkt) {
  auto fail = [&] { return Error(ErrorCode::SchemaError, "malformed POLYGON WKT: " + std::string(wkt)); };
  auto open = wkt.find("((");
  auto close = wkt.rfind("))");
  if (wkt.substr(0, 7) != "POLYGON" || open == std::string_view::npos || close == std::string_view::npos ||
      close < open)
    throw fail();
  auto body = wkt.substr(open + 2, close - open - 2);
  std::vector<LatLon> points;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto comma = body.find(',', pos);
    auto vertex = body.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    double coords[2];
    std::size_t k = 0;
    std::size_t i = 0;
    while (i < vertex.size() && k < 2) {
      while (i < vertex.size() && vertex[i] == ' ') ++i;
      if (i >= vertex.size()) break;
      auto [ptr, ec] = std::from_chars(vertex.data() + i, vertex.data() + vertex.size(), coords[k]);
      if (ec != std::errc()) throw fail();
      i = static_cast<std::size_t>(ptr - vertex.data());
      ++k;
    }
    while (i < vertex.size() && vertex[i] == ' ') ++i;
    if (k != 2 || i != vertex.size()) throw fail();
    points.push_back({coords[1], coords[0]});
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (points.size() > 1 && points.front() == points.back()) points.pop_back();
  if (points.size() < 3) throw fail();
  return points;
}

CensusIndex load_census(const std::filesystem::path& blocks_csv, const std::filesystem::path& groups_csv,
                        const std::filesystem::path& tracts_csv) {
  auto tt = csv::Table::read(tracts_csv);
  for (auto c : {"tract_id", "population", "svi"}) tt.column(c);
  std::vector<CensusTract> tracts;
  for (std::size_t r = 0; r < tt.rows(); ++r) {
    CensusTract t;
    t.tract_id = tt.cell(r, "tract_id");
    t.population = non_negative(tt, r, "population");
    if (!tt.cell(r, "svi").empty()) t.svi = tt.number(r, "svi");
    tracts.push_back(std::move(t));
  }

  auto gt = csv::Table::read(groups_csv);
  for (auto c : {"group_id", "tract_id", "population"}) gt.column(c);
  for (auto name : kTvvNames) gt.column(name);
  std::vector<BlockGroup> groups;
  for (std::size_t r = 0; r < gt.rows(); ++r) {
    BlockGroup g;
    g.group_id = gt.cell(r, "group_id");
    g.parent_tract_id = gt.cell(r, "tract_id");
    g.population = non_negative(gt, r, "population");
    for (auto name : kTvvNames) g.tvv.emplace(std::string(name), non_negative(gt, r, name));
    groups.push_back(std::move(g));
  }

  auto bt = csv::Table::read(blocks_csv);
  for (auto c : {"block_id", "group_id", "population", "lat", "lon"}) bt.column(c);
  const bool has_wkt = bt.has_column("boundary_wkt");
  std::vector<CensusBlock> blocks;
  for (std::size_t r = 0; r < bt.rows(); ++r) {
    CensusBlock b;
    b.block_id = bt.cell(r, "block_id");
    b.parent_group_id = bt.cell(r, "group_id");
    b.population = non_negative(bt, r, "population");
    b.centroid = {bt.number(r, "lat"), bt.number(r, "lon")};
    if (has_wkt && !bt.cell(r, "boundary_wkt").empty()) b.boundary_points = parse_polygon_wkt(bt.cell(r, "boundary_wkt"));
    blocks.push_back(std::move(b));
  }
  return CensusIndex(std::move(tracts), std::move(groups), std::move(blocks));
}

Apportionment apportion_to_blocks(const CensusIndex& index) {
  Apportionment out;
  out.blocks.reserve(index.blocks().size());
  for (const auto& g : index.groups()) {
    if (g.population > 0.0) continue;
    for (auto name : kCountTvvNames) {
      if (g.tvv.at(std::string(name)) != 0.0)
        out.warnings.push_back({"ZeroPopulationGroup", g.group_id,
                                "group has zero population but " + std::string(name) + " = " +
                                    csv::format_number(g.tvv.at(std::string(name))) + "; apportioned as 0"});
    }
  }
  for (const auto& b : index.blocks()) {
    const auto& g = index.group(b.parent_group_id);
    BlockProfile p;
    p.block_id = b.block_id;
    p.group_id = b.parent_group_id;
    p.population = b.population;
    p.centroid = b.centroid;
    p.boundary_points = b.boundary_points;
    const double share = g.population > 0.0 ? b.population / g.population : 0.0;
    for (const auto& [name, value] : g.tvv) p.tvv[name] = is_count_variable(name) ? value * share : value;
    out.blocks.push_back(std::move(p));
  }
  return out;
}

double haversine_miles(LatLon a, LatLon b) {
  check_coordinate(a, "haversine");
  check_coordinate(b, "haversine");
  constexpr double to_rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * to_rad;
  const double dlon = (b.lon - a.lon) * to_rad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  // symmetric in (a, b): cos(a)cos(b) commutes, squared sines are even
  double h = s1 * s1 + std::cos(a.lat * to_rad) * std::cos(b.lat * to_rad) * s2 * s2;
  h = std::min(1.0, h);
  return 2.0 * kEarthRadiusMiles * std::asin(std::sqrt(h));
}

double min_representative_distance(const StopRecord& stop, const BlockProfile& block) {
  double best = haversine_miles(stop.position, block.centroid);
  for (auto p : block.boundary_points) best = std::min(best, haversine_miles(stop.position, p));
  return best;
}

std::set<std::string> blocks_served(const StopRecord& stop, std::span<const BlockProfile> blocks,
                                    double radius_miles) {
  if (!(radius_miles > 0.0)) throw Error(ErrorCode::ConfigError, "coverage radius must be positive");
  std::set<std::string> served;
  for (const auto& b : blocks) {
    if (min_representative_distance(stop, b) <= radius_miles) served.insert(b.block_id);
  }
  return served;
}

void assign_coverage(std::span<const StopRecord> stops, std::span<BlockProfile> blocks, double radius_miles) {
  for (auto& b : blocks) b.covered_by.clear();
  for (const auto& s : stops) {
    auto served = blocks_served(s, blocks, radius_miles);
    for (auto& b : blocks) {
      if (served.contains(b.block_id)) b.covered_by.insert(s.stop_id);
    }
  }
}

StopProfile stop_profile(const StopRecord& stop, std::span<const BlockProfile> profiles, Warnings* warnings) {
  StopProfile out;
  out.stop = stop;
  for (auto name : kTvvNames) out.tvv[std::string(name)] = 0.0;
  double income_weighted = 0.0;
  for (const auto& b : profiles) {
    if (!b.covered_by.contains(stop.stop_id)) continue;
    out.served_blocks.push_back(b.block_id);
    out.stop_pop += b.population;
    for (auto name : kCountTvvNames) out.tvv[std::string(name)] += b.tvv.at(std::string(name));
    income_weighted += b.population * b.tvv.at(std::string(kMedianIncome));
  }
  if (out.stop_pop > 0.0) out.tvv[std::string(kMedianIncome)] = income_weighted / out.stop_pop;
  if (out.served_blocks.empty()) {
    out.empty_coverage = true;
    if (warnings) warnings->push_back({"EmptyCoverage", stop.stop_id, "stop serves no census blocks"});
  }
  return out;
}

std::vector<std::string> unserviced_blocks(std::span<const StopRecord> stops, std::span<const BlockProfile> blocks,
                                           double radius_miles) {
  std::set<std::string> served;
  for (const auto& s : stops) served.merge(blocks_served(s, blocks, radius_miles));
  std::vector<std::string> out;
  for (const auto& b : blocks) {
    if (!served.contains(b.block_id)) out.push_back(b.block_id);
  }
  return out;
}

}  // namespace transitgap::census
