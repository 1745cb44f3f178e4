#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "transitgap/analysis.hpp"
#include "transitgap/census_geo.hpp"
#include "transitgap/json_io.hpp"
#include "transitgap/pipeline.hpp"

namespace httplib {
class Server;
}

namespace transitgap::service {

struct Response {
  int status = 200;
  Json body;
};

// Read-only view over the trained artifacts. Everything is loaded in the
// constructor; handle() never mutates state and is safe to call from
// several threads at once.
class Service {
 public:
  explicit Service(const pipeline::PipelineConfig& config);

  Response handle(const std::string& method, const std::string& path,
                  const std::map<std::string, std::string>& query, const std::string& body) const;

  const analysis::GapReport& baseline() const { return baseline_; }

 private:
  Json stops() const;
  Json significance(const std::map<std::string, std::string>& query) const;
  Json predict_temporal(const Json& body) const;
  Json predict_spatial(const Json& body) const;
  Json scenario_spatial(const Json& body) const;
  Json scenario_temporal(const Json& body) const;

  const ml::ModelArtifact& temporal_model(const std::string& name) const;
  const census::StopProfile& profile(const std::string& stop_id) const;

  pipeline::PipelineConfig config_;
  std::vector<census::StopProfile> profiles_;
  std::vector<census::BlockProfile> blocks_;
  std::vector<ingest::NamedRow> temporal_rows_;
  std::map<std::string, ml::ModelArtifact> models_;
  std::map<std::string, analysis::LinearLink> links_;
  std::map<std::string, Json> significance_;
  analysis::GapReport baseline_;
  Json coverage_;
};

// 400 malformed body, 404 unknown stop or model, 422 failed precondition.
int status_for(ErrorCode code);

// Thin HTTP front over Service.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();

  // Returns the bound port (useful with port 0).
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void run();
  void stop();

 private:
  const Service& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace transitgap::service
