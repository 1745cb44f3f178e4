#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "transitgap/ingest.hpp"
#include "transitgap/ml.hpp"

namespace transitgap {

using Json = nlohmann::json;

Json spec_to_json(const ingest::FeatureSpec& spec);
ingest::FeatureSpec spec_from_json(const Json& j);

Json to_json(const ml::ModelArtifact& model);
ml::ModelArtifact model_from_json(const Json& j);

Json to_json(const ml::MetricReport& m);

// Two-space indented with trailing newline. Object keys are sorted, so the
// bytes depend only on the content.
std::string dump(const Json& j);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace transitgap
