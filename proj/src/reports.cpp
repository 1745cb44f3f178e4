#include "transitgap/reports.hpp"

#include <map>
#include <set>

#include "transitgap/csv.hpp"

namespace transitgap::reports {

using csv::format_number;

Json to_json(const analysis::SignificanceReport& report) {
  Json features = Json::array();
  for (const auto& f : report.features)
    features.push_back({{"column", f.column},
                        {"mean_abs_gradient", f.mean_abs_gradient},
                        {"mean_signed_gradient", f.mean_signed_gradient}});
  Json ranked = Json::array();
  for (auto i : analysis::ranking(report)) ranked.push_back(report.features[i].column);
  return {{"target", report.target},
          {"model_kind", report.model_kind},
          {"method", report.method},
          {"space", report.space},
          {"evaluation_points", report.evaluation_points},
          {"features", features},
          {"ranking", ranked}};
}

analysis::SignificanceReport significance_from_json(const Json& j) {
  analysis::SignificanceReport r;
  r.target = j.at("target").get<std::string>();
  r.model_kind = j.at("model_kind").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.space = j.at("space").get<std::string>();
  r.evaluation_points = j.at("evaluation_points").get<std::size_t>();
  for (const auto& f : j.at("features"))
    r.features.push_back({f.at("column").get<std::string>(), f.at("mean_abs_gradient").get<double>(),
                          f.at("mean_signed_gradient").get<double>()});
  return r;
}

std::string significance_csv(const analysis::SignificanceReport& report) {
  csv::Writer w({"rank", "column", "mean_abs_gradient", "mean_signed_gradient", "effect"});
  std::size_t rank = 1;
  for (auto i : analysis::ranking(report)) {
    const auto& f = report.features[i];
    w.add_row({std::to_string(rank++), f.column, format_number(f.mean_abs_gradient),
               format_number(f.mean_signed_gradient), f.mean_signed_gradient >= 0.0 ? "positive" : "negative"});
  }
  return w.str();
}

Json to_json(const analysis::LinearLink& link) {
  return {{"intercept", link.intercept},
          {"slope", link.slope},
          {"predictor", link.predictor},
          {"r_squared", link.r_squared},
          {"excluded_rows", link.excluded_rows}};
}

analysis::LinearLink link_from_json(const Json& j) {
  analysis::LinearLink l;
  l.intercept = j.at("intercept").get<double>();
  l.slope = j.at("slope").get<double>();
  l.predictor = j.at("predictor").get<std::string>();
  l.r_squared = j.at("r_squared").get<double>();
  l.excluded_rows = j.at("excluded_rows").get<std::vector<std::string>>();
  return l;
}

Json to_json(const analysis::GapRatio& ratio) {
  Json j = {{"infinite", ratio.infinite}, {"riders", ratio.riders}, {"routes", ratio.routes}};
  j["value"] = ratio.infinite ? Json(nullptr) : Json(ratio.value);
  return j;
}

Json to_json(const analysis::StopGap& g) {
  return {{"stop_id", g.stop_id},
          {"name", g.name},
          {"lat", g.position.lat},
          {"lon", g.position.lon},
          {"gap_ratio", to_json(g.ratio)},
          {"predicted_supply", g.predicted_supply},
          {"actual_supply", g.actual_supply},
          {"predicted_demand", g.predicted_demand},
          {"actual_demand", g.actual_demand},
          {"supply_gap", g.supply_gap},
          {"demand_gap", g.demand_gap},
          {"classification", analysis::to_string(g.classification)}};
}

Json to_json(const analysis::GapReport& report) {
  Json stops = Json::array();
  for (const auto& g : report.stops) stops.push_back(to_json(g));
  return {{"thresholds",
           {{"shortage_factor", report.thresholds.shortage_factor},
            {"surplus_factor", report.thresholds.surplus_factor}}},
          {"stops", stops},
          {"unserviced_block_ids", report.unserviced_block_ids}};
}

std::string gaps_csv(const analysis::GapReport& report) {
  csv::Writer w({"rank", "stop_id", "name", "gap_ratio", "gap_ratio_infinite", "total_riders", "city_routes_ran",
                 "predicted_supply", "supply_gap", "predicted_demand", "demand_gap", "classification"});
  std::size_t rank = 1;
  for (const auto& g : report.stops) {
    w.add_row({std::to_string(rank++), g.stop_id, g.name, g.ratio.infinite ? "" : format_number(g.ratio.value),
               g.ratio.infinite ? "true" : "false", format_number(g.actual_demand), format_number(g.actual_supply),
               format_number(g.predicted_supply), format_number(g.supply_gap), format_number(g.predicted_demand),
               format_number(g.demand_gap), std::string(analysis::to_string(g.classification))});
  }
  return w.str();
}

Json to_json(const analysis::ScenarioStop& s) {
  return {{"stop_id", s.stop_id},
          {"city_routes_ran", s.city_routes_ran},
          {"predicted_supply", s.predicted_supply},
          {"predicted_demand", s.predicted_demand},
          {"demand_gap", s.demand_gap},
          {"classification", analysis::to_string(s.classification)},
          {"overridden", s.overridden}};
}

Json profile_values(const census::StopProfile& p) {
  Json values = {{"stop_pop", p.stop_pop}};
  for (const auto& [name, v] : p.tvv) values[name] = v;
  return values;
}

Json to_json(const census::StopProfile& p) {
  return {{"stop_id", p.stop.stop_id},
          {"name", p.stop.name},
          {"lat", p.stop.position.lat},
          {"lon", p.stop.position.lon},
          {"total_riders", p.stop.total_riders},
          {"city_routes_ran", p.stop.city_routes_ran},
          {"is_transfer_hub", p.stop.is_transfer_hub},
          {"on_jmu_route", p.stop.on_jmu_route},
          {"profile", profile_values(p)},
          {"served_blocks", p.served_blocks},
          {"empty_coverage", p.empty_coverage}};
}

census::StopProfile stop_profile_from_json(const Json& j) {
  census::StopProfile p;
  p.stop.stop_id = j.at("stop_id").get<std::string>();
  p.stop.name = j.at("name").get<std::string>();
  p.stop.position = {j.at("lat").get<double>(), j.at("lon").get<double>()};
  p.stop.total_riders = j.at("total_riders").get<double>();
  p.stop.city_routes_ran = j.at("city_routes_ran").get<double>();
  p.stop.is_transfer_hub = j.at("is_transfer_hub").get<bool>();
  p.stop.on_jmu_route = j.at("on_jmu_route").get<bool>();
  for (const auto& [name, v] : j.at("profile").items()) {
    if (name == "stop_pop")
      p.stop_pop = v.get<double>();
    else
      p.tvv[name] = v.get<double>();
  }
  p.served_blocks = j.at("served_blocks").get<std::vector<std::string>>();
  p.empty_coverage = j.at("empty_coverage").get<bool>();
  return p;
}

std::string block_profiles_csv(std::span<const census::BlockProfile> blocks) {
  std::vector<std::string> header{"block_id", "group_id", "population", "lat", "lon"};
  for (auto name : kTvvNames) header.emplace_back(name);
  header.push_back("covered_by");
  csv::Writer w(header);
  for (const auto& b : blocks) {
    std::vector<std::string> row{b.block_id, b.group_id, format_number(b.population), format_number(b.centroid.lat),
                                 format_number(b.centroid.lon)};
    for (auto name : kTvvNames) row.push_back(format_number(b.tvv.at(std::string(name))));
    std::string covered;
    for (const auto& s : b.covered_by) covered += (covered.empty() ? "" : ";") + s;
    row.push_back(covered);
    w.add_row(row);
  }
  return w.str();
}

Json coverage_geojson(std::span<const census::StopProfile> profiles, std::span<const census::BlockProfile> blocks,
                      std::span<const std::string> unserviced_block_ids, const analysis::GapReport* gaps) {
  std::map<std::string, const analysis::StopGap*> gap_by_stop;
  if (gaps) {
    for (const auto& g : gaps->stops) gap_by_stop[g.stop_id] = &g;
  }
  Json features = Json::array();
  for (const auto& p : profiles) {
    Json props = {{"kind", "stop"},
                  {"stop_id", p.stop.stop_id},
                  {"name", p.stop.name},
                  {"total_riders", p.stop.total_riders},
                  {"city_routes_ran", p.stop.city_routes_ran},
                  {"profile", profile_values(p)},
                  {"served_blocks", p.served_blocks}};
    if (auto it = gap_by_stop.find(p.stop.stop_id); it != gap_by_stop.end()) {
      props["gap_ratio"] = to_json(it->second->ratio);
      props["classification"] = analysis::to_string(it->second->classification);
      props["supply_gap"] = it->second->supply_gap;
      props["demand_gap"] = it->second->demand_gap;
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {p.stop.position.lon, p.stop.position.lat}}}},
                        {"properties", props}});
  }
  std::set<std::string> unserviced(unserviced_block_ids.begin(), unserviced_block_ids.end());
  for (const auto& b : blocks) {
    if (!unserviced.contains(b.block_id)) continue;
    Json props = {{"kind", "unserviced_block"}, {"block_id", b.block_id}, {"group_id", b.group_id},
                  {"population", b.population}};
    Json values = Json::object();
    for (const auto& [name, v] : b.tvv) values[name] = v;
    props["profile"] = values;
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {b.centroid.lon, b.centroid.lat}}}},
                        {"properties", props}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace transitgap::reports
