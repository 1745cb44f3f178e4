#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "transitgap/error.hpp"
#include "transitgap/records.hpp"

namespace transitgap::census {

inline constexpr double kEarthRadiusMiles = 3958.7613;
inline constexpr double kDefaultRadiusMiles = 0.75;

struct CensusBlock {
  std::string block_id;
  std::string parent_group_id;
  double population = 0.0;
  LatLon centroid;
  std::vector<LatLon> boundary_points;  // empty or at least 3 vertices
};

struct BlockGroup {
  std::string group_id;
  std::string parent_tract_id;
  double population = 0.0;
  TvvValues tvv;
};

struct CensusTract {
  std::string tract_id;
  double population = 0.0;
  std::optional<double> svi;
};

// Linked tract -> block group -> block hierarchy. Containers keep file order.
class CensusIndex {
 public:
  CensusIndex(std::vector<CensusTract> tracts, std::vector<BlockGroup> groups, std::vector<CensusBlock> blocks);

  const std::vector<CensusTract>& tracts() const { return tracts_; }
  const std::vector<BlockGroup>& groups() const { return groups_; }
  const std::vector<CensusBlock>& blocks() const { return blocks_; }

  const BlockGroup& group(const std::string& group_id) const;
  const CensusTract& tract(const std::string& tract_id) const;
  // Indices into blocks() of the group's children.
  const std::vector<std::size_t>& children(const std::string& group_id) const;

 private:
  std::vector<CensusTract> tracts_;
  std::vector<BlockGroup> groups_;
  std::vector<CensusBlock> blocks_;
  std::unordered_map<std::string, std::size_t> tract_index_;
  std::unordered_map<std::string, std::size_t> group_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> children_;
};

CensusIndex load_census(const std::filesystem::path& blocks_csv, const std::filesystem::path& groups_csv,
                        const std::filesystem::path& tracts_csv);

// Parses "POLYGON((lon lat, lon lat, ...))". The closing vertex, when it
// repeats the first, is dropped.
std::vector<LatLon> parse_polygon_wkt(std::string_view wkt);

struct BlockProfile {
  std::string block_id;
  std::string group_id;
  double population = 0.0;
  LatLon centroid;
  std::vector<LatLon> boundary_points;
  TvvValues tvv;
  std::set<std::string> covered_by;
};

struct Apportionment {
  std::vector<BlockProfile> blocks;
  Warnings warnings;
};

// Spreads block-group counts over child blocks by population share.
// median_income is copied through unchanged.
Apportionment apportion_to_blocks(const CensusIndex& index);

double haversine_miles(LatLon a, LatLon b);

// Block is served when any representative point (centroid or boundary
// vertex) lies within radius of the stop.
std::set<std::string> blocks_served(const StopRecord& stop, std::span<const BlockProfile> blocks,
                                    double radius_miles = kDefaultRadiusMiles);

double min_representative_distance(const StopRecord& stop, const BlockProfile& block);

// Fills covered_by on every block.
void assign_coverage(std::span<const StopRecord> stops, std::span<BlockProfile> blocks,
                     double radius_miles = kDefaultRadiusMiles);

struct StopProfile {
  StopRecord stop;
  double stop_pop = 0.0;
  TvvValues tvv;
  std::vector<std::string> served_blocks;
  bool empty_coverage = false;
};

// Aggregates the served blocks (by covered_by membership) into one profile.
StopProfile stop_profile(const StopRecord& stop, std::span<const BlockProfile> profiles, Warnings* warnings = nullptr);

std::vector<std::string> unserviced_blocks(std::span<const StopRecord> stops, std::span<const BlockProfile> blocks,
                                           double radius_miles = kDefaultRadiusMiles);

}  // namespace transitgap::census
