#include <doctest.h>

#include <set>

#include "pipeline_fixture.hpp"
#include "transitgap/reports.hpp"

using namespace transitgap;
using namespace transitgap::pipeline;
using testsupport::TempDir;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception thrown");
  return ErrorCode::IoError;
}

std::map<std::string, std::string> tree_hashes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel == "manifest.json") continue;
    out[rel] = sha256_file(e.path());
  }
  return out;
}

}  // namespace

TEST_SUITE("configuration") {
  TEST_CASE("sha256 known answer") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("fixture config loads with paths resolved next to it") {
    auto c = load_config(testsupport::data_dir() / "fixture_city" / "config.json");
    CHECK(c.seed == 7);
    CHECK(c.paths.blocks == testsupport::data_dir() / "fixture_city" / "blocks.csv");
    CHECK(c.paths.calendar.has_value());
    CHECK(c.kinds.size() == 4);
    CHECK(c.serving_kind == ml::ModelKind::NeuralNet);
    CHECK(c.coverage_radius_miles == 0.75);
  }

  TEST_CASE("invariant violations are ConfigError") {
    TempDir dir;
    auto base = testsupport::fixture_config_json(dir.path());
    const auto city = testsupport::data_dir() / "fixture_city";
    auto bad = base;
    bad.erase("seed");
    CHECK(code_of([&] { config_from_json(bad, city); }) == ErrorCode::ConfigError);
    bad = base;
    bad["coverage_radius_miles"] = 0.0;
    CHECK(code_of([&] { config_from_json(bad, city); }) == ErrorCode::ConfigError);
    bad = base;
    bad["off_session_factor"] = 1.2;
    CHECK(code_of([&] { config_from_json(bad, city); }) == ErrorCode::ConfigError);
    bad = base;
    bad["month_encoding"] = "roman";
    CHECK(code_of([&] { config_from_json(bad, city); }) == ErrorCode::ConfigError);
    bad = base;
    bad["models"]["kinds"] = {"gbm"};
    CHECK_THROWS_AS(config_from_json(bad, city), Error);
    bad = base;
    bad["paths"].erase("stops");
    CHECK(code_of([&] { config_from_json(bad, city); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { load_config("/nonexistent/config.json"); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("config hash is stable and tracks every setting") {
    TempDir dir;
    auto a = testsupport::fixture_config(dir.path());
    auto b = testsupport::fixture_config(dir.path());
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 8;
    CHECK(config_hash(a) != config_hash(b));
    auto round = config_from_json(config_to_json(a), "/");
    CHECK(config_hash(round) == config_hash(a));
  }

  TEST_CASE("model groups resolve to targets") {
    CHECK(resolve_target_group("temporal_supply") ==
          std::vector<std::string>{"temporal_supply_miles", "temporal_supply_hours"});
    CHECK(resolve_target_group("spatial_demand") == std::vector<std::string>{"spatial_demand"});
    CHECK(code_of([] { resolve_target_group("weather"); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("default spatial supply inputs leave out poverty; demand inputs include routes") {
    PipelineConfig c;
    const auto& supply = c.target("spatial_supply").features;
    CHECK(std::find(supply.begin(), supply.end(), "below_poverty") == supply.end());
    const auto& demand = c.target("spatial_demand").features;
    CHECK(std::find(demand.begin(), demand.end(), "city_routes_ran") != demand.end());
    CHECK(std::find(demand.begin(), demand.end(), "below_poverty") != demand.end());
  }
}

TEST_SUITE("commands") {
  TEST_CASE("commands before ingest report MissingArtifact") {
    TempDir dir;
    auto c = testsupport::fixture_config(dir.path());
    CHECK(code_of([&] { cmd_train(c); }) == ErrorCode::MissingArtifact);
    CHECK(code_of([&] { cmd_gaps(c); }) == ErrorCode::MissingArtifact);
    cmd_ingest(c);
    CHECK(code_of([&] { cmd_evaluate(c); }) == ErrorCode::MissingArtifact);
    CHECK(code_of([&] { cmd_significance(c); }) == ErrorCode::MissingArtifact);
  }

  TEST_CASE("ingest summary on the fixture city") {
    TempDir dir;
    auto s = cmd_ingest(testsupport::fixture_config(dir.path()));
    CHECK(s.blocks == 40);
    CHECK(s.stops == 43);
    CHECK(s.excluded_hubs == 3);
    CHECK(s.excluded_jmu == 4);
    CHECK(s.months == 60);
    CHECK(s.unserviced_blocks == std::vector<std::string>{"B040"});
  }

  TEST_CASE("failed fits are recorded, not fatal") {
    const auto& c = testsupport::trained_fixture();
    const Layout layout{c.paths.output_dir};
    auto record = read_json(layout.metrics("spatial_demand", ml::ModelKind::Polynomial));
    CHECK(record.at("status") == "error");
    CHECK(record.at("error").at("code") == "ExpansionTooLarge");
    CHECK_FALSE(fs::exists(layout.model("spatial_demand", ml::ModelKind::Polynomial)));
    CHECK(fs::exists(layout.model("spatial_demand", ml::ModelKind::NeuralNet)));
    CHECK(fs::exists(layout.link("revenue_hours")));
    CHECK(fs::exists(layout.link("revenue_miles")));
  }

  TEST_CASE("evaluation covers every target and kind") {
    TempDir dir;
    auto c = testsupport::fixture_config(dir.path());
    cmd_ingest(c);
    cmd_train(c);
    auto report = cmd_evaluate(c);
    REQUIRE(report.at("tables").size() == 5);
    for (const auto& t : report.at("tables")) {
      CHECK(t.at("models").size() == 4);
      for (const auto& m : t.at("models")) {
        if (m.at("status") == "ok") CHECK(m.at("rmse").get<double>() >= 0.0);
      }
    }
    CHECK(fs::exists(Layout{c.paths.output_dir}.evaluation_csv()));
  }

  TEST_CASE("training twice gives identical artifacts") {
    TempDir dir;
    auto c = testsupport::fixture_config(dir.path());
    cmd_ingest(c);
    cmd_train(c);
    const auto first = tree_hashes(c.paths.output_dir);
    cmd_train(c);
    CHECK(tree_hashes(c.paths.output_dir) == first);
  }

  TEST_CASE("manifest lists exactly the outputs, with matching hashes") {
    TempDir dir;
    auto c = testsupport::fixture_config(dir.path());
    cmd_ingest(c);
    cmd_train(c);
    cmd_evaluate(c);
    cmd_significance(c);
    cmd_gaps(c);
    const Layout layout{c.paths.output_dir};
    auto manifest = read_json(layout.manifest());
    CHECK(manifest.at("config_hash") == config_hash(c));
    const auto on_disk = tree_hashes(c.paths.output_dir);
    std::map<std::string, std::string> listed;
    for (const auto& [rel, sha] : manifest.at("artifacts").items()) listed[rel] = sha.get<std::string>();
    CHECK(listed == on_disk);
    for (const auto& [name, input] : manifest.at("inputs").items())
      CHECK(input.at("sha256") == sha256_file(input.at("path").get<std::string>()));
    for (auto cmd : {"ingest", "train", "evaluate", "significance", "gaps"})
      CHECK(manifest.at("timestamps").contains(cmd));
  }

  TEST_CASE("a new config starts a fresh manifest") {
    TempDir dir;
    auto c = testsupport::fixture_config(dir.path());
    cmd_ingest(c);
    c.seed = 99;
    update_manifest(c, "probe", {});
    auto manifest = read_json(Layout{c.paths.output_dir}.manifest());
    CHECK(manifest.at("config_hash") == config_hash(c));
    CHECK_FALSE(manifest.at("timestamps").contains("ingest"));
  }

  TEST_CASE("significance reports cover both demand models") {
    const auto& c = testsupport::trained_fixture();
    auto reports = cmd_significance(c);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].target == "passenger_trips");
    CHECK(reports[1].target == "stop_ridership");
    for (const auto& r : reports) {
      CHECK(r.method == "exact");
      for (const auto& f : r.features) CHECK(f.mean_abs_gradient >= std::abs(f.mean_signed_gradient));
    }
    const Layout layout{c.paths.output_dir};
    CHECK(fs::exists(layout.significance_csv("temporal_demand")));
  }

  TEST_CASE("gap report ranks the engineered stop first and lists the remote block") {
    const auto& c = testsupport::trained_fixture();
    auto report = cmd_gaps(c);
    REQUIRE_FALSE(report.stops.empty());
    CHECK(report.stops.front().stop_id == "S031");
    CHECK(report.unserviced_block_ids == std::vector<std::string>{"B040"});
    auto geo = read_json(Layout{c.paths.output_dir}.gaps_geojson());
    CHECK(geo.at("type") == "FeatureCollection");
    std::size_t unserviced = 0;
    for (const auto& f : geo.at("features")) {
      if (f.at("properties").at("kind") == "unserviced_block") ++unserviced;
    }
    CHECK(unserviced == 1);
  }
}
