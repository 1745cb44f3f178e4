#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "transitgap/analysis.hpp"
#include "transitgap/ingest.hpp"
#include "transitgap/json_io.hpp"
#include "transitgap/ml.hpp"

namespace transitgap::pipeline {

namespace fs = std::filesystem;

enum class RowSource { Temporal, Spatial };

// One learned function: which rows it reads, what it predicts, and from what.
struct ModelTarget {
  std::string name;
  RowSource source = RowSource::Temporal;
  std::string target;
  std::vector<std::string> features;
};

// temporal_supply_miles, temporal_supply_hours, temporal_demand,
// spatial_supply, spatial_demand with their default inputs.
std::vector<ModelTarget> default_targets();

// Expands a command-line group ("temporal_supply") or exact name into targets.
std::vector<std::string> resolve_target_group(const std::string& which);

struct Paths {
  fs::path blocks;
  fs::path block_groups;
  fs::path tracts;
  fs::path monthly;
  fs::path stops;
  std::optional<fs::path> calendar;
  fs::path output_dir;
};

struct PipelineConfig {
  Paths paths;
  std::uint64_t seed = 7;
  double coverage_radius_miles = 0.75;
  double off_session_factor = 0.9;
  bool exclude_transfer_hubs = true;
  bool exclude_jmu_routes = true;
  ingest::MonthEncoding month_encoding = ingest::MonthEncoding::Cyclic;
  double train_fraction = 0.8;
  ml::TrainingConfig training;
  std::vector<ml::ModelKind> kinds = {std::begin(ml::kAllKinds), std::end(ml::kAllKinds)};
  ml::ModelKind serving_kind = ml::ModelKind::NeuralNet;
  std::vector<ModelTarget> targets = default_targets();
  analysis::GapThresholds thresholds;
  std::vector<std::string> link_exclusions;
  analysis::SignificanceOptions significance;

  const ModelTarget& target(const std::string& name) const;
};

// Relative paths resolve against the config file's directory. Invariants
// (radius > 0, factor in [0,1], seed present) raise ConfigError.
PipelineConfig load_config(const fs::path& path);
PipelineConfig config_from_json(const Json& j, const fs::path& base_dir);
Json config_to_json(const PipelineConfig& config);
void validate(const PipelineConfig& config);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);
std::string config_hash(const PipelineConfig& config);

// Output layout under the output directory.
struct Layout {
  fs::path root;

  fs::path manifest() const { return root / "manifest.json"; }
  fs::path temporal_rows() const { return root / "datasets" / "temporal_rows.csv"; }
  fs::path spatial_rows() const { return root / "datasets" / "spatial_rows.csv"; }
  fs::path block_profiles() const { return root / "census" / "block_profiles.csv"; }
  fs::path stop_profiles() const { return root / "census" / "stop_profiles.json"; }
  fs::path coverage() const { return root / "census" / "coverage.json"; }
  fs::path model(const std::string& target, ml::ModelKind kind) const;
  fs::path metrics(const std::string& target, ml::ModelKind kind) const;
  fs::path link(const std::string& predictor) const { return root / "models" / ("link_" + predictor + ".json"); }
  fs::path evaluation_json() const { return root / "reports" / "evaluation.json"; }
  fs::path evaluation_csv() const { return root / "reports" / "evaluation.csv"; }
  fs::path significance_json(const std::string& target) const;
  fs::path significance_csv(const std::string& target) const;
  fs::path gaps_json() const { return root / "reports" / "gaps.json"; }
  fs::path gaps_csv() const { return root / "reports" / "gaps.csv"; }
  fs::path gaps_geojson() const { return root / "reports" / "gaps.geojson"; }
};

struct TrainOutcome {
  std::string target;
  ml::ModelKind kind;
  bool ok = false;
  std::string error_code;
  std::string message;
  ml::MetricReport train_metrics;
  ml::MetricReport test_metrics;
};

struct IngestSummary {
  std::size_t blocks = 0;
  std::size_t stops = 0;
  std::size_t excluded_hubs = 0;
  std::size_t excluded_jmu = 0;
  std::size_t months = 0;
  std::vector<std::string> unserviced_blocks;
  Warnings warnings;
};

IngestSummary cmd_ingest(const PipelineConfig& config);

// `which` holds target names (empty = all); `kinds` empty = config kinds.
std::vector<TrainOutcome> cmd_train(const PipelineConfig& config, const std::vector<std::string>& which = {},
                                    const std::vector<ml::ModelKind>& kinds = {});

Json cmd_evaluate(const PipelineConfig& config);

std::vector<analysis::SignificanceReport> cmd_significance(const PipelineConfig& config,
                                                           const std::vector<std::string>& which = {});

analysis::GapReport cmd_gaps(const PipelineConfig& config);

// Helpers shared with the service.
ingest::Dataset full_dataset(const PipelineConfig& config, const ModelTarget& target,
                             const std::vector<ingest::NamedRow>& rows);
std::vector<census::StopProfile> load_stop_profiles(const fs::path& path);
std::vector<census::BlockProfile> read_block_profiles(const fs::path& path);

// Records output files (with hashes), inputs and per-command timestamps.
// Only the "timestamps" member varies between identical runs.
void update_manifest(const PipelineConfig& config, const std::string& command,
                     const std::vector<fs::path>& outputs, const Json& metrics = nullptr);

}  // namespace transitgap::pipeline
