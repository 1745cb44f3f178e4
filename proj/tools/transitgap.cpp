#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "transitgap/pipeline.hpp"
#include "transitgap/reports.hpp"
#include "transitgap/service.hpp"

using namespace transitgap;

namespace {

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::pair<std::string, int> split_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, "--bind expects host:port");
  try {
    return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "--bind expects host:port");
  }
}

void print_warnings(const Warnings& warnings) {
  for (const auto& w : warnings) std::cerr << "warning " << w.code << " " << w.subject << ": " << w.message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transitgap: transit supply and demand gap modelling"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> which;
  std::vector<std::string> kinds;
  std::string bind = "127.0.0.1:8080";

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline configuration JSON")->required();
    cmd->add_option("--seed", seed, "override the configured seed");
    cmd->add_option("--out", out_dir, "override the output directory");
  };
  auto* ingest = app.add_subcommand("ingest", "load census, stops and monthly data; write datasets");
  auto* train = app.add_subcommand("train", "fit models and write artifacts and metrics");
  auto* evaluate = app.add_subcommand("evaluate", "compare model kinds on the held-out split");
  auto* significance = app.add_subcommand("significance", "input-gradient feature significance");
  auto* gaps = app.add_subcommand("gaps", "classify stops by supply gap");
  auto* serve = app.add_subcommand("serve", "run the scenario REST service");
  for (auto* cmd : {ingest, train, evaluate, significance, gaps, serve}) common(cmd);
  train->add_option("--model", which,
                    "temporal_supply, temporal_demand, spatial_supply, spatial_demand (repeatable; default all)");
  train->add_option("--kind", kinds, "linear, polynomial, random_forest, neural_net (repeatable)");
  significance->add_option("--model", which, "temporal_demand or spatial_demand (repeatable)");
  serve->add_option("--bind", bind, "host:port");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = pipeline::load_config(config_path);
    if (seed) config.seed = *seed;
    if (out_dir) config.paths.output_dir = std::filesystem::absolute(*out_dir);
    std::vector<std::string> targets;
    for (const auto& w : which) {
      for (auto& t : pipeline::resolve_target_group(w)) targets.push_back(t);
    }

    if (*ingest) {
      const auto s = pipeline::cmd_ingest(config);
      print_warnings(s.warnings);
      std::cout << "blocks " << s.blocks << ", modelled stops " << s.stops << " (excluded " << s.excluded_hubs
                << " transfer hubs, " << s.excluded_jmu << " university-route stops), months " << s.months
                << ", unserviced blocks " << s.unserviced_blocks.size() << "\n";
    } else if (*train) {
      std::vector<ml::ModelKind> ks;
      for (const auto& k : kinds) ks.push_back(ml::kind_from_string(k));
      for (const auto& o : pipeline::cmd_train(config, targets, ks)) {
        std::cout << o.target << " " << ml::to_string(o.kind) << ": ";
        if (o.ok)
          std::cout << "test rmse " << o.test_metrics.rmse << ", relative " << o.test_metrics.relative_rmse << "\n";
        else
          std::cout << o.message << "\n";
      }
    } else if (*evaluate) {
      const auto report = pipeline::cmd_evaluate(config);
      for (const auto& t : report.at("tables")) {
        std::cout << t.at("target").get<std::string>() << "\n";
        for (const auto& m : t.at("models")) {
          std::cout << "  " << m.at("kind").get<std::string>() << ": ";
          if (m.at("status") == "ok")
            std::cout << "rmse " << m.at("rmse").get<double>() << ", relative " << m.at("relative_rmse").get<double>()
                      << "\n";
          else
            std::cout << m.at("error").at("code").get<std::string>() << "\n";
        }
      }
    } else if (*significance) {
      for (const auto& r : pipeline::cmd_significance(config, targets)) {
        std::cout << r.target << " (" << r.model_kind << ")\n";
        for (auto i : analysis::ranking(r)) {
          const auto& f = r.features[i];
          std::cout << "  " << f.column << " " << f.mean_abs_gradient << " " << (f.mean_signed_gradient < 0 ? "-" : "+")
                    << "\n";
        }
      }
    } else if (*gaps) {
      const auto report = pipeline::cmd_gaps(config);
      std::size_t shown = 0;
      for (const auto& g : report.stops) {
        if (shown++ == 10) break;
        std::cout << g.stop_id << " " << g.name << " ratio "
                  << (g.ratio.infinite ? std::string("inf") : std::to_string(g.ratio.value)) << " "
                  << analysis::to_string(g.classification) << "\n";
      }
      std::cout << report.unserviced_block_ids.size() << " unserviced blocks\n";
    } else if (*serve) {
      const auto [host, port] = split_bind(bind);
      service::Service svc(config);
      service::HttpServer server(svc);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << host << ":" << bound << std::endl;
      server.run();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error " << e.what() << "\n";
    return 1;
  }
  return 0;
}
