#include "transitgap/service.hpp"

#include <httplib.h>

#include <algorithm>

#include "transitgap/reports.hpp"

namespace transitgap::service {
namespace {

Json error_body(ErrorCode code, const std::string& message) {
  return {{"code", std::string(to_string(code))}, {"message", message}};
}

[[noreturn]] void malformed(const std::string& message) { throw Error(ErrorCode::MalformedRequest, message); }

Json parse_body(const std::string& body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) malformed("request body is not valid JSON");
  if (!j.is_object()) malformed("request body must be a JSON object");
  return j;
}

double number_field(const Json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) malformed("'" + key + "' must be a number");
  return v.get<double>();
}

std::optional<double> optional_number(const Json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return number_field(j, key);
}

}  // namespace

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRequest: return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::IoError: return 500;
    default: return 422;
  }
}

Service::Service(const pipeline::PipelineConfig& config) : config_(config) {
  const pipeline::Layout layout{config.paths.output_dir};
  profiles_ = pipeline::load_stop_profiles(layout.stop_profiles());
  blocks_ = pipeline::read_block_profiles(layout.block_profiles());
  temporal_rows_ = ingest::read_rows(layout.temporal_rows());
  coverage_ = read_json(layout.coverage());
  for (const auto& t : config.targets) {
    const auto path = layout.model(t.name, config.serving_kind);
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingArtifact, path.string() + " (run train first)");
    models_.emplace(t.name, ml::load_model(path));
  }
  for (const std::string predictor : {"revenue_hours", "revenue_miles"}) {
    const auto path = layout.link(predictor);
    if (std::filesystem::exists(path)) links_.emplace(predictor, reports::link_from_json(read_json(path)));
  }
  const auto spatial_rows = ingest::read_rows(layout.spatial_rows());
  for (const std::string name : {"temporal_demand", "spatial_demand"}) {
    const auto& model = models_.at(name);
    const auto& rows = config.target(name).source == pipeline::RowSource::Temporal ? temporal_rows_ : spatial_rows;
    const auto ds = ingest::apply_spec(rows, model.spec);
    significance_.emplace(name, reports::to_json(analysis::significance(model, ds, config.significance)));
  }
  baseline_ = analysis::assess_gaps(profiles_, models_.at("spatial_supply"), models_.at("spatial_demand"),
                                    config.thresholds,
                                    coverage_.at("unserviced_block_ids").get<std::vector<std::string>>());
}

const census::StopProfile& Service::profile(const std::string& stop_id) const {
  for (const auto& p : profiles_) {
    if (p.stop.stop_id == stop_id) return p;
  }
  throw Error(ErrorCode::NotFound, "unknown stop_id '" + stop_id + "'");
}

const ml::ModelArtifact& Service::temporal_model(const std::string& name) const {
  auto it = models_.find(name);
  if (it == models_.end() || config_.target(name).source != pipeline::RowSource::Temporal)
    throw Error(ErrorCode::NotFound, "unknown temporal model '" + name + "'");
  return it->second;
}

Response Service::handle(const std::string& method, const std::string& path,
                         const std::map<std::string, std::string>& query, const std::string& body) const {
  struct Route {
    const char* method;
    const char* path;
  };
  static constexpr Route kRoutes[] = {
      {"GET", "/health"},           {"GET", "/stops"},          {"GET", "/significance"},
      {"POST", "/predict/temporal"}, {"POST", "/predict/spatial"}, {"POST", "/scenario/spatial"},
      {"POST", "/scenario/temporal"}, {"GET", "/geo/coverage"},
  };
  const auto* route = std::find_if(std::begin(kRoutes), std::end(kRoutes), [&](const Route& r) { return path == r.path; });
  if (route == std::end(kRoutes)) return {404, error_body(ErrorCode::NotFound, "no route " + path)};
  if (method != route->method) return {405, error_body(ErrorCode::MalformedRequest, method + " not allowed on " + path)};

  try {
    if (path == "/health") return {200, {{"status", "ok"}}};
    if (path == "/stops") return {200, stops()};
    if (path == "/significance") return {200, significance(query)};
    if (path == "/geo/coverage")
      return {200, reports::coverage_geojson(profiles_, blocks_, baseline_.unserviced_block_ids, &baseline_)};
    const auto j = parse_body(body);
    if (path == "/predict/temporal") return {200, predict_temporal(j)};
    if (path == "/predict/spatial") return {200, predict_spatial(j)};
    if (path == "/scenario/spatial") return {200, scenario_spatial(j)};
    return {200, scenario_temporal(j)};
  } catch (const Error& e) {
    return {status_for(e.code()), error_body(e.code(), e.what())};
  } catch (const Json::exception& e) {
    return {400, error_body(ErrorCode::MalformedRequest, e.what())};
  }
}

Json Service::stops() const {
  Json out = Json::array();
  for (const auto& g : baseline_.stops) {
    const auto& p = profile(g.stop_id);
    out.push_back({{"stop_id", g.stop_id},
                   {"name", g.name},
                   {"lat", g.position.lat},
                   {"lon", g.position.lon},
                   {"profile", reports::profile_values(p)},
                   {"served_blocks", p.served_blocks},
                   {"gap_ratio", g.ratio.infinite ? Json(nullptr) : Json(g.ratio.value)},
                   {"classification", std::string(analysis::to_string(g.classification))}});
  }
  return out;
}

Json Service::significance(const std::map<std::string, std::string>& query) const {
  auto it = query.find("model");
  if (it == query.end()) malformed("query parameter 'model' is required");
  auto found = significance_.find(it->second);
  if (found == significance_.end())
    throw Error(ErrorCode::NotFound, "no significance report for model '" + it->second + "'");
  return found->second;
}

Json Service::predict_temporal(const Json& body) const {
  std::string name = "temporal_demand";
  if (body.contains("model")) {
    if (!body.at("model").is_string()) malformed("'model' must be a string");
    name = body.at("model").get<std::string>();
  }
  const auto& model = temporal_model(name);
  const Json* features = &body;
  if (body.contains("features")) {
    if (!body.at("features").is_object()) malformed("'features' must be an object");
    features = &body.at("features");
  }
  ingest::NamedRow row{"request", {}};
  for (const auto& [key, value] : features->items()) {
    if (features == &body && key == "model") continue;
    if (!value.is_number()) malformed("feature '" + key + "' must be a number");
    row.values[key] = value.get<double>();
  }
  const auto ds = ingest::apply_spec(std::span<const ingest::NamedRow>(&row, 1), model.spec, true);
  return {{"prediction", ml::predict_one(model, ds.features.row(0))},
          {"model", name},
          {"model_kind", std::string(ml::to_string(model.kind))}};
}

Json Service::predict_spatial(const Json& body) const {
  if (!body.contains("stop_id") || !body.at("stop_id").is_string()) malformed("'stop_id' must be a string");
  const auto id = body.at("stop_id").get<std::string>();
  profile(id);
  const auto& g = *std::find_if(baseline_.stops.begin(), baseline_.stops.end(),
                                [&](const analysis::StopGap& s) { return s.stop_id == id; });
  return {{"stop_id", id},
          {"predicted_supply", g.predicted_supply},
          {"predicted_demand", g.predicted_demand},
          {"actual_supply", g.actual_supply},
          {"actual_demand", g.actual_demand},
          {"classification", std::string(analysis::to_string(g.classification))},
          {"model_kind", std::string(ml::to_string(config_.serving_kind))}};
}

Json Service::scenario_spatial(const Json& body) const {
  if (!body.contains("overrides") || !body.at("overrides").is_array()) malformed("'overrides' must be an array");
  std::map<std::string, double> overrides;
  for (const auto& o : body.at("overrides")) {
    if (!o.is_object() || !o.contains("stop_id") || !o.at("stop_id").is_string() || !o.contains("city_routes_ran"))
      malformed("each override needs a string 'stop_id' and a numeric 'city_routes_ran'");
    const auto id = o.at("stop_id").get<std::string>();
    profile(id);
    overrides[id] = number_field(o, "city_routes_ran");
  }
  const auto result = analysis::scenario_spatial(profiles_, models_.at("spatial_supply"), models_.at("spatial_demand"),
                                                 config_.thresholds, overrides);
  Json stops = Json::array();
  for (const auto& s : result) stops.push_back(reports::to_json(s));
  return {{"stops", stops}};
}

Json Service::scenario_temporal(const Json& body) const {
  const auto hours = optional_number(body, "revenue_hours");
  const auto miles = optional_number(body, "revenue_miles");
  bool use_link = false;
  if (body.contains("use_linear_link")) {
    if (!body.at("use_linear_link").is_boolean()) malformed("'use_linear_link' must be a boolean");
    use_link = body.at("use_linear_link").get<bool>();
  }
  if ((hours && *hours < 0.0) || (miles && *miles < 0.0))
    throw Error(ErrorCode::NegativeOverride, "supply overrides must be non-negative");

  if (use_link) {
    if (!hours && !miles) throw Error(ErrorCode::SchemaError, "give revenue_hours or revenue_miles");
    Json by_predictor = Json::object();
    std::optional<double> first;
    for (const auto& [predictor, value] : {std::pair{std::string("revenue_hours"), hours},
                                           std::pair{std::string("revenue_miles"), miles}}) {
      if (!value) continue;
      auto it = links_.find(predictor);
      if (it == links_.end()) throw Error(ErrorCode::MissingArtifact, "no linear link for " + predictor);
      const double trips = analysis::predict_trips(it->second, *value);
      by_predictor[predictor] = {{"predicted_trips", trips},
                                 {"intercept", it->second.intercept},
                                 {"slope", it->second.slope}};
      if (!first) first = trips;
    }
    return {{"predicted_trips", *first}, {"method", "linear_link"}, {"by_predictor", by_predictor}};
  }

  // Hold every other input at a base month and replace the supply values.
  const ingest::NamedRow* base = &temporal_rows_.back();
  if (body.contains("year") || body.contains("month")) {
    const auto year = number_field(body, "year");
    const auto month = number_field(body, "month");
    auto it = std::find_if(temporal_rows_.begin(), temporal_rows_.end(), [&](const ingest::NamedRow& r) {
      return r.values.at("year") == year && r.values.at("month") == month;
    });
    if (it == temporal_rows_.end()) throw Error(ErrorCode::NotFound, "no monthly record for the requested period");
    base = &*it;
  }
  ingest::NamedRow row = *base;
  if (hours) row.values["revenue_hours"] = *hours;
  if (miles) row.values["revenue_miles"] = *miles;
  const auto& model = models_.at("temporal_demand");
  const auto ds = ingest::apply_spec(std::span<const ingest::NamedRow>(&row, 1), model.spec, true);
  return {{"predicted_trips", ml::predict_one(model, ds.features.row(0))},
          {"method", std::string(ml::to_string(model.kind))},
          {"base_period", base->row_id}};
}

HttpServer::HttpServer(const Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const auto r = service_.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(dump(r.body), "application/json; charset=utf-8");
  };
  server_->Get(".*", dispatch);
  server_->Post(".*", dispatch);
  server_->Put(".*", dispatch);
  server_->Delete(".*", dispatch);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

}  // namespace transitgap::service
