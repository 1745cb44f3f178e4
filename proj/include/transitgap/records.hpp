#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace transitgap {

// Transit vulnerability variables carried on block groups, monthly records
// and stop profiles. Every name except median_income is a person count.
inline constexpr std::string_view kMedianIncome = "median_income";

inline constexpr std::array<std::string_view, 12> kCountTvvNames = {
    "age_65_over",
    "with_disability",
    "below_poverty",
    "speak_english_less_than_well",
    "renter_population",
    "vehicle_ownership",
    "unemployed",
    "commute_private_vehicle",
    "commute_public_transit",
    "commute_bicycle",
    "commute_walking",
    "commute_worked_at_home",
};

inline constexpr std::array<std::string_view, 13> kTvvNames = {
    "age_65_over",
    "with_disability",
    "below_poverty",
    "speak_english_less_than_well",
    "renter_population",
    "vehicle_ownership",
    "unemployed",
    "commute_private_vehicle",
    "commute_public_transit",
    "commute_bicycle",
    "commute_walking",
    "commute_worked_at_home",
    "median_income",
};

using TvvValues = std::map<std::string, double, std::less<>>;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const LatLon&) const = default;
};

struct StopRecord {
  std::string stop_id;
  std::string name;
  LatLon position;
  double total_riders = 0.0;     // boardings + alightings over the period
  double city_routes_ran = 0.0;  // buses passing the stop over the period
  bool is_transfer_hub = false;
  bool on_jmu_route = false;

  bool operator==(const StopRecord&) const = default;
};

struct MonthlyRecord {
  int year = 0;
  int month = 0;
  double passenger_trips = 0.0;
  double revenue_miles = 0.0;
  double revenue_hours = 0.0;
  double jmu_enrollment = 0.0;
  double jmu_summer_enrollment = 0.0;
  double jmu_routes_ran = 0.0;
  double city_routes_ran = 0.0;
  double base_population = 0.0;
  bool in_session = true;
  TvvValues tvv;

  // "YYYY-MM"
  std::string period() const;

  bool operator==(const MonthlyRecord&) const = default;
};

}  // namespace transitgap
