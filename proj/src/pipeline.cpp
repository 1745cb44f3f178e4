#include "transitgap/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "transitgap/census_geo.hpp"
#include "transitgap/csv.hpp"
#include "transitgap/reports.hpp"

namespace transitgap::pipeline {
namespace {

std::vector<std::string> temporal_supply_inputs() {
  return {"adjusted_population", "jmu_enrollment", "jmu_routes_ran", "city_routes_ran", "year", "month"};
}

std::vector<std::string> temporal_demand_inputs() {
  std::vector<std::string> f{"revenue_miles", "revenue_hours", "adjusted_population"};
  for (auto n : kTvvNames) f.emplace_back(n);
  f.emplace_back("year");
  f.emplace_back("month");
  return f;
}

std::vector<std::string> spatial_supply_inputs() {
  std::vector<std::string> f{"latitude", "longitude", "stop_pop"};
  for (auto n : kTvvNames) {
    if (n != "below_poverty") f.emplace_back(n);  // demand-only variable
  }
  return f;
}

std::vector<std::string> spatial_demand_inputs() {
  std::vector<std::string> f{"latitude", "longitude", "stop_pop"};
  for (auto n : kTvvNames) f.emplace_back(n);
  f.emplace_back("city_routes_ran");
  return f;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<ingest::NamedRow> rows_for(const Layout& layout, RowSource source) {
  return ingest::read_rows(source == RowSource::Temporal ? layout.temporal_rows() : layout.spatial_rows());
}

std::vector<MonthlyRecord> records_from_rows(const std::vector<ingest::NamedRow>& rows) {
  std::vector<MonthlyRecord> out;
  for (const auto& r : rows) {
    MonthlyRecord m;
    m.year = static_cast<int>(r.values.at("year"));
    m.month = static_cast<int>(r.values.at("month"));
    m.passenger_trips = r.values.at("passenger_trips");
    m.revenue_hours = r.values.at("revenue_hours");
    m.revenue_miles = r.values.at("revenue_miles");
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

std::vector<ModelTarget> default_targets() {
  return {
      {"temporal_supply_miles", RowSource::Temporal, "revenue_miles", temporal_supply_inputs()},
      {"temporal_supply_hours", RowSource::Temporal, "revenue_hours", temporal_supply_inputs()},
      {"temporal_demand", RowSource::Temporal, "passenger_trips", temporal_demand_inputs()},
      {"spatial_supply", RowSource::Spatial, "city_routes_ran", spatial_supply_inputs()},
      {"spatial_demand", RowSource::Spatial, "stop_ridership", spatial_demand_inputs()},
  };
}

std::vector<std::string> resolve_target_group(const std::string& which) {
  if (which == "temporal_supply") return {"temporal_supply_miles", "temporal_supply_hours"};
  for (const auto& t : default_targets()) {
    if (t.name == which) return {which};
  }
  throw Error(ErrorCode::ConfigError, "unknown model '" + which +
                                          "' (expected temporal_supply, temporal_supply_miles, "
                                          "temporal_supply_hours, temporal_demand, spatial_supply, spatial_demand)");
}

const ModelTarget& PipelineConfig::target(const std::string& name) const {
  for (const auto& t : targets) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::ConfigError, "unknown model target '" + name + "'");
}

void validate(const PipelineConfig& c) {
  if (!(c.coverage_radius_miles > 0.0)) throw Error(ErrorCode::ConfigError, "coverage_radius_miles must be > 0");
  if (!(c.off_session_factor >= 0.0 && c.off_session_factor <= 1.0))
    throw Error(ErrorCode::ConfigError, "off_session_factor must lie in [0, 1]");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    throw Error(ErrorCode::ConfigError, "train_fraction must lie in (0, 1)");
  if (!(c.thresholds.shortage_factor >= 1.0 && c.thresholds.surplus_factor >= 1.0))
    throw Error(ErrorCode::ConfigError, "gap thresholds must be >= 1");
  if (c.kinds.empty()) throw Error(ErrorCode::ConfigError, "no model kinds configured");
}

PipelineConfig config_from_json(const Json& j, const fs::path& base_dir) {
  try {
    PipelineConfig c;
    const auto& p = j.at("paths");
    c.paths.blocks = resolve(base_dir, p.at("blocks").get<std::string>());
    c.paths.block_groups = resolve(base_dir, p.at("block_groups").get<std::string>());
    c.paths.tracts = resolve(base_dir, p.at("tracts").get<std::string>());
    c.paths.monthly = resolve(base_dir, p.at("monthly").get<std::string>());
    c.paths.stops = resolve(base_dir, p.at("stops").get<std::string>());
    if (p.contains("calendar") && !p.at("calendar").is_null())
      c.paths.calendar = resolve(base_dir, p.at("calendar").get<std::string>());
    c.paths.output_dir = resolve(base_dir, p.value("output_dir", std::string("out")));

    if (!j.contains("seed")) throw Error(ErrorCode::ConfigError, "config must set an explicit seed");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.coverage_radius_miles = j.value("coverage_radius_miles", c.coverage_radius_miles);
    c.off_session_factor = j.value("off_session_factor", c.off_session_factor);
    c.exclude_transfer_hubs = j.value("exclude_transfer_hubs", c.exclude_transfer_hubs);
    c.exclude_jmu_routes = j.value("exclude_jmu_routes", c.exclude_jmu_routes);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    const auto enc = j.value("month_encoding", std::string("cyclic"));
    if (enc == "cyclic")
      c.month_encoding = ingest::MonthEncoding::Cyclic;
    else if (enc == "raw")
      c.month_encoding = ingest::MonthEncoding::Raw;
    else
      throw Error(ErrorCode::ConfigError, "month_encoding must be 'cyclic' or 'raw'");

    if (j.contains("models")) {
      const auto& m = j.at("models");
      if (m.contains("kinds")) {
        c.kinds.clear();
        for (const auto& k : m.at("kinds")) c.kinds.push_back(ml::kind_from_string(k.get<std::string>()));
      }
      if (m.contains("serving_kind")) c.serving_kind = ml::kind_from_string(m.at("serving_kind").get<std::string>());
      if (m.contains("polynomial")) c.training.polynomial_degree = m["polynomial"].value("degree", 2);
      if (m.contains("random_forest")) {
        const auto& f = m.at("random_forest");
        c.training.forest.trees = f.value("trees", c.training.forest.trees);
        c.training.forest.max_depth = f.value("max_depth", c.training.forest.max_depth);
        c.training.forest.min_leaf = f.value("min_leaf", c.training.forest.min_leaf);
        c.training.forest.max_features = f.value("max_features", c.training.forest.max_features);
      }
      if (m.contains("neural_net")) {
        const auto& n = m.at("neural_net");
        auto& nn = c.training.neural_net;
        nn.hidden = n.value("hidden", nn.hidden);
        nn.epochs = n.value("epochs", nn.epochs);
        nn.step = n.value("step", nn.step);
        nn.batch = n.value("batch", nn.batch);
      }
    }
    if (j.contains("features")) {
      for (auto& t : c.targets) {
        if (j["features"].contains(t.name)) t.features = j["features"][t.name].get<std::vector<std::string>>();
      }
    }
    if (j.contains("thresholds")) {
      c.thresholds.shortage_factor = j["thresholds"].value("shortage_factor", c.thresholds.shortage_factor);
      c.thresholds.surplus_factor = j["thresholds"].value("surplus_factor", c.thresholds.surplus_factor);
    }
    if (j.contains("linear_link")) c.link_exclusions = j["linear_link"].value("exclusions", c.link_exclusions);
    if (j.contains("significance")) {
      const auto& s = j.at("significance");
      const auto mode = s.value("mode", std::string("rows"));
      if (mode == "rows")
        c.significance.mode = analysis::AveragingMode::Rows;
      else if (mode == "grid")
        c.significance.mode = analysis::AveragingMode::Grid;
      else
        throw Error(ErrorCode::ConfigError, "significance.mode must be 'rows' or 'grid'");
      c.significance.grid_levels = s.value("grid_levels", c.significance.grid_levels);
    }
    validate(c);
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

PipelineConfig load_config(const fs::path& path) {
  Json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

Json config_to_json(const PipelineConfig& c) {
  Json paths = {{"blocks", c.paths.blocks.string()},       {"block_groups", c.paths.block_groups.string()},
                {"tracts", c.paths.tracts.string()},       {"monthly", c.paths.monthly.string()},
                {"stops", c.paths.stops.string()},         {"output_dir", c.paths.output_dir.string()},
                {"calendar", c.paths.calendar ? Json(c.paths.calendar->string()) : Json(nullptr)}};
  Json kinds = Json::array();
  for (auto k : c.kinds) kinds.push_back(ml::to_string(k));
  Json features = Json::object();
  for (const auto& t : c.targets) features[t.name] = t.features;
  const auto& nn = c.training.neural_net;
  const auto& f = c.training.forest;
  return {{"paths", paths},
          {"seed", c.seed},
          {"coverage_radius_miles", c.coverage_radius_miles},
          {"off_session_factor", c.off_session_factor},
          {"exclude_transfer_hubs", c.exclude_transfer_hubs},
          {"exclude_jmu_routes", c.exclude_jmu_routes},
          {"month_encoding", c.month_encoding == ingest::MonthEncoding::Cyclic ? "cyclic" : "raw"},
          {"train_fraction", c.train_fraction},
          {"models",
           {{"kinds", kinds},
            {"serving_kind", ml::to_string(c.serving_kind)},
            {"polynomial", {{"degree", c.training.polynomial_degree}}},
            {"random_forest",
             {{"trees", f.trees}, {"max_depth", f.max_depth}, {"min_leaf", f.min_leaf}, {"max_features", f.max_features}}},
            {"neural_net", {{"hidden", nn.hidden}, {"epochs", nn.epochs}, {"step", nn.step}, {"batch", nn.batch}}}}},
          {"features", features},
          {"thresholds",
           {{"shortage_factor", c.thresholds.shortage_factor}, {"surplus_factor", c.thresholds.surplus_factor}}},
          {"linear_link", {{"exclusions", c.link_exclusions}}},
          {"significance",
           {{"mode", c.significance.mode == analysis::AveragingMode::Rows ? "rows" : "grid"},
            {"grid_levels", c.significance.grid_levels}}}};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(dump(config_to_json(config))); }

fs::path Layout::model(const std::string& target, ml::ModelKind kind) const {
  return root / "models" / (target + "__" + std::string(ml::to_string(kind)) + ".json");
}

fs::path Layout::metrics(const std::string& target, ml::ModelKind kind) const {
  return root / "metrics" / (target + "__" + std::string(ml::to_string(kind)) + ".json");
}

fs::path Layout::significance_json(const std::string& target) const {
  return root / "reports" / ("significance_" + target + ".json");
}

fs::path Layout::significance_csv(const std::string& target) const {
  return root / "reports" / ("significance_" + target + ".csv");
}

void update_manifest(const PipelineConfig& config, const std::string& command, const std::vector<fs::path>& outputs,
                     const Json& metrics) {
  const Layout layout{config.paths.output_dir};
  const auto hash = config_hash(config);
  Json manifest;
  if (fs::exists(layout.manifest())) {
    manifest = read_json(layout.manifest());
    if (manifest.value("config_hash", std::string()) != hash) manifest = Json::object();
  }
  manifest["format_version"] = 1;
  manifest["config_hash"] = hash;
  manifest["config"] = config_to_json(config);
  Json inputs = Json::object();
  auto add_input = [&](const std::string& name, const fs::path& p) {
    inputs[name] = {{"path", p.string()}, {"sha256", sha256_file(p)}};
  };
  add_input("blocks", config.paths.blocks);
  add_input("block_groups", config.paths.block_groups);
  add_input("tracts", config.paths.tracts);
  add_input("monthly", config.paths.monthly);
  add_input("stops", config.paths.stops);
  if (config.paths.calendar) add_input("calendar", *config.paths.calendar);
  manifest["inputs"] = inputs;

  Json artifacts = manifest.value("artifacts", Json::object());
  for (const auto& out : outputs) artifacts[fs::relative(out, layout.root).generic_string()] = sha256_file(out);
  Json kept = Json::object();
  for (const auto& [rel, sha] : artifacts.items()) {
    if (fs::exists(layout.root / rel)) kept[rel] = sha;
  }
  manifest["artifacts"] = kept;
  if (!metrics.is_null()) manifest["metrics"][command] = metrics;
  const auto now = utc_now();
  manifest["timestamps"][command] = {{"finished", now}};
  write_json(layout.manifest(), manifest);
}

IngestSummary cmd_ingest(const PipelineConfig& config) {
  const Layout layout{config.paths.output_dir};
  IngestSummary summary;

  auto index = census::load_census(config.paths.blocks, config.paths.block_groups, config.paths.tracts);
  auto apportioned = census::apportion_to_blocks(index);
  summary.warnings = apportioned.warnings;
  auto& blocks = apportioned.blocks;

  // Transfer hubs still serve their neighbourhood; they are only dropped
  // from the modelled stop set.
  auto city = ingest::load_stops(config.paths.stops, false, config.exclude_jmu_routes);
  summary.excluded_jmu = city.excluded_jmu;
  summary.warnings.insert(summary.warnings.end(), city.warnings.begin(), city.warnings.end());
  std::vector<StopRecord> modelled;
  for (const auto& s : city.stops) {
    if (config.exclude_transfer_hubs && s.is_transfer_hub) {
      ++summary.excluded_hubs;
      continue;
    }
    modelled.push_back(s);
  }
  if (modelled.empty() && !city.stops.empty())
    summary.warnings.push_back({"AllStopsExcluded", config.paths.stops.string(), "no stops left to model"});

  census::assign_coverage(modelled, blocks, config.coverage_radius_miles);
  std::vector<census::StopProfile> profiles;
  for (const auto& s : modelled) profiles.push_back(census::stop_profile(s, blocks, &summary.warnings));
  summary.unserviced_blocks = census::unserviced_blocks(city.stops, blocks, config.coverage_radius_miles);
  summary.blocks = blocks.size();
  summary.stops = modelled.size();

  auto monthly = ingest::load_monthly(config.paths.monthly, config.paths.calendar);
  summary.months = monthly.size();
  auto trows = ingest::temporal_rows(monthly, config.off_session_factor);
  auto srows = ingest::spatial_rows(profiles);

  fs::create_directories(layout.temporal_rows().parent_path());
  fs::create_directories(layout.stop_profiles().parent_path());
  ingest::write_rows(layout.temporal_rows(), trows);
  ingest::write_rows(layout.spatial_rows(), srows);
  write_text(layout.block_profiles(), reports::block_profiles_csv(blocks));
  Json pj = Json::array();
  for (const auto& p : profiles) pj.push_back(reports::to_json(p));
  write_json(layout.stop_profiles(), pj);
  Json warnings = Json::array();
  for (const auto& w : summary.warnings)
    warnings.push_back({{"code", w.code}, {"subject", w.subject}, {"message", w.message}});
  write_json(layout.coverage(), {{"radius_miles", config.coverage_radius_miles},
                                 {"modelled_stops", summary.stops},
                                 {"excluded_transfer_hubs", summary.excluded_hubs},
                                 {"excluded_jmu_route_stops", summary.excluded_jmu},
                                 {"unserviced_block_ids", summary.unserviced_blocks},
                                 {"warnings", warnings}});
  update_manifest(config, "ingest",
                  {layout.temporal_rows(), layout.spatial_rows(), layout.block_profiles(), layout.stop_profiles(),
                   layout.coverage()});
  return summary;
}

ingest::Dataset full_dataset(const PipelineConfig& config, const ModelTarget& target,
                             const std::vector<ingest::NamedRow>& rows) {
  return ingest::build_design_matrix(rows, {target.features, target.target, config.month_encoding});
}

std::vector<TrainOutcome> cmd_train(const PipelineConfig& config, const std::vector<std::string>& which,
                                    const std::vector<ml::ModelKind>& kinds) {
  const Layout layout{config.paths.output_dir};
  std::vector<std::string> names = which;
  if (names.empty()) {
    for (const auto& t : config.targets) names.push_back(t.name);
  }
  const auto& use_kinds = kinds.empty() ? config.kinds : kinds;
  std::map<RowSource, std::vector<ingest::NamedRow>> rows;
  std::vector<TrainOutcome> outcomes;
  std::vector<fs::path> outputs;
  Json metrics_summary = Json::object();
  fs::create_directories(layout.root / "models");
  fs::create_directories(layout.root / "metrics");

  for (const auto& name : names) {
    const auto& target = config.target(name);
    if (!rows.contains(target.source)) rows[target.source] = rows_for(layout, target.source);
    const auto ds = full_dataset(config, target, rows[target.source]);
    const auto [train, test] = ingest::train_test_split(ds, config.train_fraction, config.seed);
    for (auto kind : use_kinds) {
      TrainOutcome o;
      o.target = name;
      o.kind = kind;
      const auto model_path = layout.model(name, kind);
      Json record = {{"target", name},
                     {"kind", ml::to_string(kind)},
                     {"n_train", train.rows()},
                     {"n_test", test.rows()},
                     {"seed", config.seed}};
      try {
        auto model = ml::fit(kind, train, config.training, config.seed);
        o.train_metrics = ml::metrics(ml::predict(model, train.features), train.targets);
        o.test_metrics = ml::metrics(ml::predict(model, test.features), test.targets);
        o.ok = true;
        ml::save_model(model_path, model);
        outputs.push_back(model_path);
        record["status"] = "ok";
        record["train"] = to_json(o.train_metrics);
        record["test"] = to_json(o.test_metrics);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        o.error_code = std::string(to_string(e.code()));
        o.message = e.what();
        fs::remove(model_path);
        record["status"] = "error";
        record["error"] = {{"code", o.error_code}, {"message", o.message}};
      }
      write_json(layout.metrics(name, kind), record);
      outputs.push_back(layout.metrics(name, kind));
      metrics_summary[name + "__" + std::string(ml::to_string(kind))] = record;
      outcomes.push_back(std::move(o));
    }
  }

  if (which.empty()) {
    if (!rows.contains(RowSource::Temporal)) rows[RowSource::Temporal] = rows_for(layout, RowSource::Temporal);
    const auto records = records_from_rows(rows[RowSource::Temporal]);
    for (const std::string predictor : {"revenue_hours", "revenue_miles"}) {
      auto link = analysis::fit_linear_link(records, predictor, config.link_exclusions);
      write_json(layout.link(predictor), reports::to_json(link));
      outputs.push_back(layout.link(predictor));
    }
  }
  update_manifest(config, "train", outputs, metrics_summary);
  return outcomes;
}

Json cmd_evaluate(const PipelineConfig& config) {
  const Layout layout{config.paths.output_dir};
  std::map<RowSource, std::vector<ingest::NamedRow>> rows;
  Json tables = Json::array();
  std::string csv_text;
  csv::Writer w({"target", "kind", "status", "rmse", "relative_rmse", "n_test"});
  for (const auto& target : config.targets) {
    if (!rows.contains(target.source)) rows[target.source] = rows_for(layout, target.source);
    const auto ds = full_dataset(config, target, rows[target.source]);
    const auto split = ingest::train_test_split(ds, config.train_fraction, config.seed);
    const auto& test = split.second;
    Json entries = Json::array();
    std::string best;
    double best_rrmse = 0.0;
    for (auto kind : config.kinds) {
      const auto metrics_path = layout.metrics(target.name, kind);
      if (!fs::exists(metrics_path))
        throw Error(ErrorCode::MissingArtifact, metrics_path.string() + " (run train first)");
      const auto record = read_json(metrics_path);
      Json entry = {{"kind", ml::to_string(kind)}};
      if (record.at("status") != "ok") {
        entry["status"] = "error";
        entry["error"] = record.at("error");
        w.add_row({target.name, std::string(ml::to_string(kind)), record["error"]["code"].get<std::string>(), "", "",
                   ""});
      } else {
        const auto model = ml::load_model(layout.model(target.name, kind));
        if (!(model.spec == ds.spec))
          throw Error(ErrorCode::SpecMismatch, "model " + target.name + "/" + std::string(ml::to_string(kind)) +
                                                   " was trained on different data; rerun train");
        const auto m = ml::metrics(ml::predict(model, test.features), test.targets);
        entry["status"] = "ok";
        entry["rmse"] = m.rmse;
        entry["relative_rmse"] = m.relative_rmse;
        entry["n_test"] = m.n_test;
        w.add_row({target.name, std::string(ml::to_string(kind)), "ok", csv::format_number(m.rmse),
                   csv::format_number(m.relative_rmse), std::to_string(m.n_test)});
        if (best.empty() || std::abs(m.relative_rmse) < best_rrmse) {
          best = std::string(ml::to_string(kind));
          best_rrmse = std::abs(m.relative_rmse);
        }
      }
      entries.push_back(entry);
    }
    tables.push_back({{"target", target.name},
                      {"target_variable", target.target},
                      {"models", entries},
                      {"best_kind", best.empty() ? Json(nullptr) : Json(best)}});
  }
  Json report = {{"seed", config.seed}, {"train_fraction", config.train_fraction}, {"tables", tables}};
  write_json(layout.evaluation_json(), report);
  write_text(layout.evaluation_csv(), w.str());
  update_manifest(config, "evaluate", {layout.evaluation_json(), layout.evaluation_csv()});
  return report;
}

std::vector<analysis::SignificanceReport> cmd_significance(const PipelineConfig& config,
                                                           const std::vector<std::string>& which) {
  const Layout layout{config.paths.output_dir};
  std::vector<std::string> names = which.empty() ? std::vector<std::string>{"temporal_demand", "spatial_demand"} : which;
  std::vector<analysis::SignificanceReport> out;
  std::vector<fs::path> outputs;
  for (const auto& name : names) {
    const auto& target = config.target(name);
    const auto model_path = layout.model(name, config.serving_kind);
    if (!fs::exists(model_path)) throw Error(ErrorCode::MissingArtifact, model_path.string() + " (run train first)");
    const auto model = ml::load_model(model_path);
    const auto ds = ingest::apply_spec(rows_for(layout, target.source), model.spec);
    auto report = analysis::significance(model, ds, config.significance);
    write_json(layout.significance_json(name), reports::to_json(report));
    write_text(layout.significance_csv(name), reports::significance_csv(report));
    outputs.push_back(layout.significance_json(name));
    outputs.push_back(layout.significance_csv(name));
    out.push_back(std::move(report));
  }
  update_manifest(config, "significance", outputs);
  return out;
}

std::vector<census::BlockProfile> read_block_profiles(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingArtifact, path.string());
  auto t = csv::Table::read(path);
  std::vector<census::BlockProfile> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    census::BlockProfile b;
    b.block_id = t.cell(r, "block_id");
    b.group_id = t.cell(r, "group_id");
    b.population = t.number(r, "population");
    b.centroid = {t.number(r, "lat"), t.number(r, "lon")};
    for (auto n : kTvvNames) b.tvv[std::string(n)] = t.number(r, n);
    std::stringstream ss(t.cell(r, "covered_by"));
    std::string id;
    while (std::getline(ss, id, ';')) {
      if (!id.empty()) b.covered_by.insert(id);
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<census::StopProfile> load_stop_profiles(const fs::path& path) {
  const auto j = read_json(path);
  std::vector<census::StopProfile> out;
  try {
    for (const auto& p : j) out.push_back(reports::stop_profile_from_json(p));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  return out;
}

analysis::GapReport cmd_gaps(const PipelineConfig& config) {
  const Layout layout{config.paths.output_dir};
  const auto profiles = load_stop_profiles(layout.stop_profiles());
  const auto coverage = read_json(layout.coverage());
  auto load = [&](const std::string& name) {
    const auto p = layout.model(name, config.serving_kind);
    if (!fs::exists(p)) throw Error(ErrorCode::MissingArtifact, p.string() + " (run train first)");
    return ml::load_model(p);
  };
  const auto supply = load("spatial_supply");
  const auto demand = load("spatial_demand");
  auto report = analysis::assess_gaps(profiles, supply, demand, config.thresholds,
                                      coverage.at("unserviced_block_ids").get<std::vector<std::string>>());
  const auto blocks = read_block_profiles(layout.block_profiles());
  write_json(layout.gaps_json(), reports::to_json(report));
  write_text(layout.gaps_csv(), reports::gaps_csv(report));
  write_json(layout.gaps_geojson(), reports::coverage_geojson(profiles, blocks, report.unserviced_block_ids, &report));
  update_manifest(config, "gaps", {layout.gaps_json(), layout.gaps_csv(), layout.gaps_geojson()});
  return report;
}

}  // namespace transitgap::pipeline
