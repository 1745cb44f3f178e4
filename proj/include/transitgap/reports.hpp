#pragma once

#include <span>
#include <string>
#include <vector>

#include "transitgap/analysis.hpp"
#include "transitgap/census_geo.hpp"
#include "transitgap/json_io.hpp"

namespace transitgap::reports {

Json to_json(const analysis::SignificanceReport& report);
analysis::SignificanceReport significance_from_json(const Json& j);
// One row per column, in ranking order, with the bar colour of the sign.
std::string significance_csv(const analysis::SignificanceReport& report);

Json to_json(const analysis::LinearLink& link);
analysis::LinearLink link_from_json(const Json& j);

Json to_json(const analysis::GapRatio& ratio);
Json to_json(const analysis::StopGap& gap);
Json to_json(const analysis::GapReport& report);
std::string gaps_csv(const analysis::GapReport& report);

Json to_json(const analysis::ScenarioStop& s);

Json to_json(const census::StopProfile& profile);
census::StopProfile stop_profile_from_json(const Json& j);
Json profile_values(const census::StopProfile& profile);

std::string block_profiles_csv(std::span<const census::BlockProfile> blocks);

// FeatureCollection: stops as Points (with profile, coverage and, when a
// gap report is given, gap fields) and unserviced blocks as centroid Points.
Json coverage_geojson(std::span<const census::StopProfile> profiles, std::span<const census::BlockProfile> blocks,
                      std::span<const std::string> unserviced_block_ids,
                      const analysis::GapReport* gaps = nullptr);

}  // namespace transitgap::reports
