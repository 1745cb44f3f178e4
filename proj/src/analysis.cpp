#include "transitgap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace transitgap::analysis {
namespace {

std::vector<double> gradient_at(const ml::ModelArtifact& model, std::span<const double> x, double h) {
  if (model.kind == ml::ModelKind::NeuralNet) return ml::input_gradient(model, x);
  return ml::finite_difference_gradient(model, x, h);
}

double predictor_value(const MonthlyRecord& m, const std::string& predictor) {
  if (predictor == "revenue_hours") return m.revenue_hours;
  if (predictor == "revenue_miles") return m.revenue_miles;
  throw Error(ErrorCode::UnknownFeature, "linear link predictor must be revenue_hours or revenue_miles, got '" +
                                             predictor + "'");
}

ingest::NamedRow profile_row(const census::StopProfile& p) {
  census::StopProfile copy = p;
  return ingest::spatial_rows(std::span<const census::StopProfile>(&copy, 1)).front();
}

double predict_row(const ml::ModelArtifact& model, const ingest::NamedRow& row) {
  std::vector<double> x;
  try {
    x = model.spec.encode(row);
  } catch (const Error& e) {
    throw Error(ErrorCode::SpecMismatch, std::string("stop data does not match model spec: ") + e.what());
  }
  model.spec.standardize(x);
  return ml::predict_one(model, x);
}

void require_feature(const ml::ModelArtifact& model, std::string_view feature, std::string_view role) {
  const auto& names = model.spec.feature_names;
  if (std::find(names.begin(), names.end(), feature) == names.end())
    throw Error(ErrorCode::SpecMismatch,
                std::string(role) + " model does not take '" + std::string(feature) + "' as an input");
}

}  // namespace

SignificanceReport significance(const ml::ModelArtifact& model, const ingest::Dataset& ds,
                                const SignificanceOptions& options) {
  if (ds.rows() == 0) throw Error(ErrorCode::EmptyDataset, "significance needs at least one row");
  if (ds.features.cols() != model.spec.column_count())
    throw Error(ErrorCode::DimensionMismatch, "dataset columns differ from the model spec");
  const std::size_t d = ds.features.cols();
  SignificanceReport report;
  report.target = model.spec.target;
  report.model_kind = std::string(ml::to_string(model.kind));
  report.method = model.kind == ml::ModelKind::NeuralNet ? "exact" : "finite_difference";
  std::vector<double> abs_sum(d, 0.0), signed_sum(d, 0.0);
  std::vector<std::size_t> points(d, 0);

  if (options.mode == AveragingMode::Rows) {
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      auto g = gradient_at(model, ds.features.row(r), options.fd_step);
      for (std::size_t c = 0; c < d; ++c) {
        abs_sum[c] += std::abs(g[c]);
        signed_sum[c] += g[c];
        ++points[c];
      }
    }
  } else {
    if (options.grid_levels < 2) throw Error(ErrorCode::ConfigError, "grid mode needs at least 2 levels");
    for (std::size_t c = 0; c < d; ++c) {
      double lo = ds.features(0, c), hi = lo;
      for (std::size_t r = 0; r < ds.rows(); ++r) {
        lo = std::min(lo, ds.features(r, c));
        hi = std::max(hi, ds.features(r, c));
      }
      std::vector<double> x(d);
      for (std::size_t r = 0; r < ds.rows(); ++r) {
        auto row = ds.features.row(r);
        std::copy(row.begin(), row.end(), x.begin());
        for (int k = 0; k < options.grid_levels; ++k) {
          x[c] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(options.grid_levels - 1);
          const double g = gradient_at(model, x, options.fd_step)[c];
          abs_sum[c] += std::abs(g);
          signed_sum[c] += g;
          ++points[c];
        }
      }
    }
  }
  report.evaluation_points = points.empty() ? 0 : points.front();
  for (std::size_t c = 0; c < d; ++c) {
    const double n = static_cast<double>(points[c]);
    report.features.push_back({model.spec.columns[c].name, abs_sum[c] / n, signed_sum[c] / n});
  }
  return report;
}

SignificanceReport to_raw_space(const SignificanceReport& report, const ingest::FeatureSpec& spec) {
  if (report.space != "standardized") return report;
  if (report.features.size() != spec.column_count())
    throw Error(ErrorCode::DimensionMismatch, "significance report does not match the spec");
  SignificanceReport out = report;
  out.space = "raw";
  for (std::size_t c = 0; c < out.features.size(); ++c) {
    out.features[c].mean_abs_gradient /= spec.columns[c].stddev;
    out.features[c].mean_signed_gradient /= spec.columns[c].stddev;
  }
  return out;
}

std::vector<std::size_t> ranking(const SignificanceReport& report) {
  std::vector<std::size_t> order(report.features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return report.features[a].mean_abs_gradient > report.features[b].mean_abs_gradient;
  });
  return order;
}

LinearLink fit_linear_link(std::span<const MonthlyRecord> records, const std::string& predictor,
                           std::span<const std::string> exclusions) {
  std::set<std::string> excluded(exclusions.begin(), exclusions.end());
  LinearLink link;
  link.predictor = predictor;
  std::vector<double> xs, ys;
  for (const auto& m : records) {
    const double x = predictor_value(m, predictor);
    if (excluded.contains(m.period())) {
      link.excluded_rows.push_back(m.period());
      continue;
    }
    xs.push_back(x);
    ys.push_back(m.passenger_trips);
  }
  if (xs.size() < 3)
    throw Error(ErrorCode::TooFewRows, "linear link needs at least 3 rows after exclusions, got " +
                                           std::to_string(xs.size()));
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx) * n))
    throw Error(ErrorCode::DegeneratePredictor, predictor + " has zero variance");
  link.slope = sxy / sxx;
  link.intercept = my - link.slope * mx;
  link.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return link;
}

double predict_trips(const LinearLink& link, double value) { return link.intercept + link.slope * value; }

GapRatio gap_ratio(const StopRecord& stop) {
  GapRatio g;
  g.riders = stop.total_riders;
  g.routes = stop.city_routes_ran;
  if (stop.city_routes_ran > 0.0) {
    g.value = stop.total_riders / stop.city_routes_ran;
  } else {
    g.infinite = true;
  }
  return g;
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::Shortage: return "shortage";
    case Classification::Surplus: return "surplus";
    case Classification::Balanced: return "balanced";
  }
  return "balanced";
}

Classification classify(double predicted_supply, double actual_supply, const GapThresholds& thresholds) {
  if (predicted_supply == actual_supply) return Classification::Balanced;
  if (predicted_supply >= thresholds.shortage_factor * actual_supply) return Classification::Shortage;
  if (actual_supply >= thresholds.surplus_factor * predicted_supply) return Classification::Surplus;
  return Classification::Balanced;
}

bool gap_order(const StopGap& a, const StopGap& b) {
  if (a.ratio.infinite != b.ratio.infinite) return a.ratio.infinite;
  if (a.ratio.infinite) {
    if (a.ratio.riders != b.ratio.riders) return a.ratio.riders > b.ratio.riders;
  } else if (a.ratio.value != b.ratio.value) {
    return a.ratio.value > b.ratio.value;
  }
  return a.stop_id < b.stop_id;
}

GapReport assess_gaps(std::span<const census::StopProfile> profiles, const ml::ModelArtifact& supply_model,
                      const ml::ModelArtifact& demand_model, const GapThresholds& thresholds,
                      std::vector<std::string> unserviced_block_ids) {
  GapReport report;
  report.thresholds = thresholds;
  report.unserviced_block_ids = std::move(unserviced_block_ids);
  for (const auto& p : profiles) {
    const auto row = profile_row(p);
    StopGap g;
    g.stop_id = p.stop.stop_id;
    g.name = p.stop.name;
    g.position = p.stop.position;
    g.ratio = gap_ratio(p.stop);
    g.actual_supply = p.stop.city_routes_ran;
    g.actual_demand = p.stop.total_riders;
    g.predicted_supply = predict_row(supply_model, row);
    g.predicted_demand = predict_row(demand_model, row);
    g.supply_gap = g.predicted_supply - g.actual_supply;
    g.demand_gap = g.predicted_demand - g.actual_demand;
    g.classification = classify(g.predicted_supply, g.actual_supply, thresholds);
    report.stops.push_back(std::move(g));
  }
  std::sort(report.stops.begin(), report.stops.end(), gap_order);
  return report;
}

double scenario_demand(const ml::ModelArtifact& demand_model, const census::StopProfile& profile,
                       double routes_ran_override) {
  if (!(routes_ran_override >= 0.0))
    throw Error(ErrorCode::NegativeOverride, "city_routes_ran override must be non-negative");
  require_feature(demand_model, "city_routes_ran", "demand");
  auto row = profile_row(profile);
  row.values["city_routes_ran"] = routes_ran_override;
  return predict_row(demand_model, row);
}

std::vector<ScenarioStop> scenario_spatial(std::span<const census::StopProfile> profiles,
                                           const ml::ModelArtifact& supply_model,
                                           const ml::ModelArtifact& demand_model, const GapThresholds& thresholds,
                                           const std::map<std::string, double>& overrides) {
  for (const auto& [id, value] : overrides) {
    if (!(value >= 0.0)) throw Error(ErrorCode::NegativeOverride, "override for " + id + " is negative");
  }
  std::vector<ScenarioStop> out;
  for (const auto& p : profiles) {
    ScenarioStop s;
    s.stop_id = p.stop.stop_id;
    auto it = overrides.find(s.stop_id);
    s.overridden = it != overrides.end();
    s.city_routes_ran = s.overridden ? it->second : p.stop.city_routes_ran;
    s.predicted_supply = predict_row(supply_model, profile_row(p));
    s.predicted_demand = scenario_demand(demand_model, p, s.city_routes_ran);
    s.demand_gap = s.predicted_demand - p.stop.total_riders;
    s.classification = classify(s.predicted_supply, s.city_routes_ran, thresholds);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace transitgap::analysis
