#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transitgap/census_geo.hpp"
#include "transitgap/ingest.hpp"
#include "transitgap/ml.hpp"

namespace transitgap::analysis {

// --- significance of predictors ------------------------------------------

enum class AveragingMode {
  Rows,  // gradients at every dataset row
  Grid,  // each row with one column swept over evenly spaced levels
};

struct SignificanceOptions {
  AveragingMode mode = AveragingMode::Rows;
  int grid_levels = 10;
  double fd_step = 1e-4;  // used for models without exact gradients
};

struct FeatureSignificance {
  std::string column;
  double mean_abs_gradient = 0.0;     // significance
  double mean_signed_gradient = 0.0;  // direction of the average effect
};

struct SignificanceReport {
  std::string target;
  std::string model_kind;
  std::string method;  // "exact" or "finite_difference"
  std::string space = "standardized";
  std::size_t evaluation_points = 0;
  std::vector<FeatureSignificance> features;  // spec column order
};

SignificanceReport significance(const ml::ModelArtifact& model, const ingest::Dataset& ds,
                                const SignificanceOptions& options = {});

// Divides each column's gradients by its standard deviation, giving effects
// per raw unit of the input.
SignificanceReport to_raw_space(const SignificanceReport& report, const ingest::FeatureSpec& spec);

// Column indices sorted by descending significance, ties by column order.
std::vector<std::size_t> ranking(const SignificanceReport& report);

// --- linear supply -> demand link ------------------------------------------

struct LinearLink {
  double intercept = 0.0;
  double slope = 0.0;
  std::string predictor;  // "revenue_hours" or "revenue_miles"
  double r_squared = 0.0;
  std::vector<std::string> excluded_rows;  // periods "YYYY-MM"
};

// Simple least squares of passenger_trips on one supply measure. Rows whose
// period is listed in `exclusions` are dropped before fitting.
LinearLink fit_linear_link(std::span<const MonthlyRecord> records, const std::string& predictor,
                           std::span<const std::string> exclusions = {});

double predict_trips(const LinearLink& link, double value);

// --- service gaps --------------------------------------------------------

struct GapRatio {
  double value = 0.0;  // riders per route; 0 when infinite
  bool infinite = false;
  double riders = 0.0;
  double routes = 0.0;
};

GapRatio gap_ratio(const StopRecord& stop);

enum class Classification { Shortage, Surplus, Balanced };
std::string_view to_string(Classification c);

struct GapThresholds {
  double shortage_factor = 1.5;
  double surplus_factor = 1.5;
};

Classification classify(double predicted_supply, double actual_supply, const GapThresholds& thresholds);

struct StopGap {
  std::string stop_id;
  std::string name;
  LatLon position;
  GapRatio ratio;
  double predicted_supply = 0.0;
  double actual_supply = 0.0;
  double predicted_demand = 0.0;
  double actual_demand = 0.0;
  double supply_gap = 0.0;  // predicted - actual
  double demand_gap = 0.0;  // predicted - actual
  Classification classification = Classification::Balanced;
};

struct GapReport {
  GapThresholds thresholds;
  std::vector<StopGap> stops;  // descending gap ratio, ties by stop_id
  std::vector<std::string> unserviced_block_ids;
};

// Orders by descending gap ratio; infinite ratios first (more riders first),
// remaining ties by stop_id.
bool gap_order(const StopGap& a, const StopGap& b);

// Demand is predicted from the stop's actual supply.
GapReport assess_gaps(std::span<const census::StopProfile> profiles, const ml::ModelArtifact& supply_model,
                      const ml::ModelArtifact& demand_model, const GapThresholds& thresholds,
                      std::vector<std::string> unserviced_block_ids = {});

// Demand prediction with the stop's city_routes_ran replaced by the override.
double scenario_demand(const ml::ModelArtifact& demand_model, const census::StopProfile& profile,
                       double routes_ran_override);

struct ScenarioStop {
  std::string stop_id;
  double city_routes_ran = 0.0;
  double predicted_supply = 0.0;
  double predicted_demand = 0.0;
  double demand_gap = 0.0;
  Classification classification = Classification::Balanced;
  bool overridden = false;
};

// Recomputes every stop's demand and classification with the overrides
// applied; stops without an override keep their actual supply.
std::vector<ScenarioStop> scenario_spatial(std::span<const census::StopProfile> profiles,
                                           const ml::ModelArtifact& supply_model,
                                           const ml::ModelArtifact& demand_model, const GapThresholds& thresholds,
                                           const std::map<std::string, double>& overrides);

}  // namespace transitgap::analysis
