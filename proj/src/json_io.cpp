#include "transitgap/json_io.hpp"

#include <fstream>
#include <sstream>

namespace transitgap {
namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) throw Error(ErrorCode::SchemaError, "weight matrix has wrong row count");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto values = j[r].get<std::vector<double>>();
    if (values.size() != cols) throw Error(ErrorCode::SchemaError, "weight matrix has wrong column count");
    std::copy(values.begin(), values.end(), m.row(r).begin());
  }
  return m;
}

Json parameters_to_json(const ml::Parameters& params) {
  return std::visit(
      [](const auto& p) -> Json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ml::LinearParams>) {
          return {{"weights", p.weights}};
        } else if constexpr (std::is_same_v<P, ml::PolynomialParams>) {
          return {{"degree", p.degree}, {"monomials", p.monomials}, {"coefficients", p.coefficients}};
        } else if constexpr (std::is_same_v<P, ml::ForestParams>) {
          Json trees = Json::array();
          for (const auto& t : p.trees) {
            // columnar layout keeps files compact
            Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
                 value = Json::array();
            for (const auto& n : t.nodes) {
              feature.push_back(n.feature);
              threshold.push_back(n.threshold);
              left.push_back(n.left);
              right.push_back(n.right);
              value.push_back(n.value);
            }
            trees.push_back(
                {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
          }
          return {{"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}, {"max_features", p.max_features},
                  {"trees", trees}};
        } else {
          Json weights = Json::array();
          for (const auto& w : p.weights) weights.push_back(matrix_to_json(w));
          return {{"layer_sizes", p.layer_sizes}, {"activation", "relu"},   {"weights", weights},
                  {"biases", p.biases},           {"target_mean", p.target_mean}, {"target_scale", p.target_scale}};
        }
      },
      params);
}

ml::Parameters parameters_from_json(ml::ModelKind kind, const Json& j, std::size_t columns) {
  switch (kind) {
    case ml::ModelKind::Linear: {
      ml::LinearParams p{j.at("weights").get<std::vector<double>>()};
      if (p.weights.size() != columns + 1)
        throw Error(ErrorCode::SchemaError, "linear weights must have feature count + 1 entries");
      return p;
    }
    case ml::ModelKind::Polynomial: {
      ml::PolynomialParams p;
      p.degree = j.at("degree").get<int>();
      p.monomials = j.at("monomials").get<std::vector<std::vector<int>>>();
      p.coefficients = j.at("coefficients").get<std::vector<double>>();
      if (p.monomials.size() != p.coefficients.size())
        throw Error(ErrorCode::SchemaError, "polynomial monomials and coefficients differ in length");
      for (const auto& mono : p.monomials) {
        if (mono.size() != columns) throw Error(ErrorCode::SchemaError, "monomial has wrong arity");
      }
      return p;
    }
    case ml::ModelKind::RandomForest: {
      ml::ForestParams p;
      p.max_depth = j.at("max_depth").get<int>();
      p.min_leaf = j.at("min_leaf").get<int>();
      p.max_features = j.at("max_features").get<int>();
      for (const auto& t : j.at("trees")) {
        auto feature = t.at("feature").get<std::vector<int>>();
        auto threshold = t.at("threshold").get<std::vector<double>>();
        auto left = t.at("left").get<std::vector<int>>();
        auto right = t.at("right").get<std::vector<int>>();
        auto value = t.at("value").get<std::vector<double>>();
        const std::size_t n = feature.size();
        if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n)
          throw Error(ErrorCode::SchemaError, "tree node arrays differ in length");
        ml::RegressionTree tree;
        for (std::size_t i = 0; i < n; ++i) {
          if (feature[i] >= static_cast<int>(columns) ||
              (feature[i] >= 0 && (left[i] <= 0 || right[i] <= 0 || left[i] >= static_cast<int>(n) ||
                                   right[i] >= static_cast<int>(n))))
            throw Error(ErrorCode::SchemaError, "tree node references out of range");
          tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
        }
        p.trees.push_back(std::move(tree));
      }
      if (p.trees.empty()) throw Error(ErrorCode::SchemaError, "forest has no trees");
      return p;
    }
    case ml::ModelKind::NeuralNet: {
      ml::NeuralNetParams p;
      p.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
      if (p.layer_sizes.size() < 2 || p.layer_sizes.front() != columns || p.layer_sizes.back() != 1)
        throw Error(ErrorCode::SchemaError, "layer sizes inconsistent with the feature spec");
      const auto& w = j.at("weights");
      p.biases = j.at("biases").get<std::vector<std::vector<double>>>();
      if (w.size() + 1 != p.layer_sizes.size() || p.biases.size() + 1 != p.layer_sizes.size())
        throw Error(ErrorCode::SchemaError, "layer count mismatch");
      for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
        p.weights.push_back(matrix_from_json(w[l], p.layer_sizes[l + 1], p.layer_sizes[l]));
        if (p.biases[l].size() != p.layer_sizes[l + 1]) throw Error(ErrorCode::SchemaError, "bias length mismatch");
      }
      p.target_mean = j.at("target_mean").get<double>();
      p.target_scale = j.at("target_scale").get<double>();
      return p;
    }
  }
  throw Error(ErrorCode::SchemaError, "unknown model kind");
}

}  // namespace

Json spec_to_json(const ingest::FeatureSpec& spec) {
  Json features = Json::array();
  for (std::size_t i = 0; i < spec.feature_names.size(); ++i)
    features.push_back({{"name", spec.feature_names[i]}, {"encoding", ingest::to_string(spec.encodings[i])}});
  Json columns = Json::array();
  for (const auto& c : spec.columns)
    columns.push_back({{"name", c.name},
                       {"source", c.source},
                       {"encoding", ingest::to_string(c.encoding)},
                       {"mean", c.mean},
                       {"stddev", c.stddev}});
  return {{"target", spec.target}, {"features", features}, {"columns", columns}};
}

ingest::FeatureSpec spec_from_json(const Json& j) {
  ingest::FeatureSpec spec;
  spec.target = j.at("target").get<std::string>();
  for (const auto& f : j.at("features")) {
    spec.feature_names.push_back(f.at("name").get<std::string>());
    spec.encodings.push_back(ingest::encoding_from_string(f.at("encoding").get<std::string>()));
  }
  for (const auto& c : j.at("columns")) {
    ingest::FeatureColumn col;
    col.name = c.at("name").get<std::string>();
    col.source = c.at("source").get<std::string>();
    col.encoding = ingest::encoding_from_string(c.at("encoding").get<std::string>());
    col.mean = c.at("mean").get<double>();
    col.stddev = c.at("stddev").get<double>();
    if (!(col.stddev > 0.0)) throw Error(ErrorCode::SchemaError, "column " + col.name + " has non-positive stddev");
    spec.columns.push_back(std::move(col));
  }
  std::size_t expected = 0;
  for (auto e : spec.encodings) expected += e == ingest::Encoding::CyclicMonth ? 2 : 1;
  if (expected != spec.columns.size()) throw Error(ErrorCode::SchemaError, "feature spec columns inconsistent");
  return spec;
}

Json to_json(const ml::ModelArtifact& model) {
  return {{"format_version", ml::kFormatVersion},
          {"kind", ml::to_string(model.kind)},
          {"spec", spec_to_json(model.spec)},
          {"parameters", parameters_to_json(model.parameters)},
          {"seed", model.seed},
          {"training_log", model.training_log}};
}

ml::ModelArtifact model_from_json(const Json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != ml::kFormatVersion)
      throw Error(ErrorCode::SchemaError, "unsupported model format_version " + std::to_string(version));
    ml::ModelArtifact m;
    m.kind = ml::kind_from_string(j.at("kind").get<std::string>());
    m.spec = spec_from_json(j.at("spec"));
    m.parameters = parameters_from_json(m.kind, j.at("parameters"), m.spec.column_count());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.training_log = j.at("training_log").get<std::vector<double>>();
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("model artifact: ") + e.what());
  }
}

Json to_json(const ml::MetricReport& m) {
  return {{"rmse", m.rmse}, {"relative_rmse", m.relative_rmse}, {"n_test", m.n_test}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, dump(j)); }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

}  // namespace transitgap

namespace transitgap::ml {

std::string dump_model(const ModelArtifact& model) { return dump(to_json(model)); }

ModelArtifact parse_model(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("model artifact: ") + e.what());
  }
  return model_from_json(j);
}

void save_model(const std::filesystem::path& path, const ModelArtifact& model) { write_text(path, dump_model(model)); }

ModelArtifact load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

}  // namespace transitgap::ml
