#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "transitgap/ingest.hpp"
#include "transitgap/matrix.hpp"

namespace transitgap::ml {

using ingest::Dataset;
using ingest::FeatureSpec;

enum class ModelKind { Linear, Polynomial, RandomForest, NeuralNet };

inline constexpr ModelKind kAllKinds[] = {ModelKind::Linear, ModelKind::Polynomial, ModelKind::RandomForest,
                                          ModelKind::NeuralNet};

std::string_view to_string(ModelKind kind);
ModelKind kind_from_string(std::string_view s);

// weights[0..d) are per-column slopes, weights[d] is the intercept.
struct LinearParams {
  std::vector<double> weights;
};

// Each monomial is an exponent vector over the standardized columns; the
// all-zero vector is the constant term.
struct PolynomialParams {
  int degree = 2;
  std::vector<std::vector<int>> monomials;
  std::vector<double> coefficients;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
};

struct ForestParams {
  int max_depth = 8;
  int min_leaf = 2;
  int max_features = 0;
  std::vector<RegressionTree> trees;
};

// Fully connected ReLU network with a linear output unit. The network is
// trained on standardized targets; predictions are mapped back through
// target_mean / target_scale.
struct NeuralNetParams {
  std::vector<std::size_t> layer_sizes;  // {input, hidden..., 1}
  std::vector<Matrix> weights;           // weights[l] is layer_sizes[l+1] x layer_sizes[l]
  std::vector<std::vector<double>> biases;
  double target_mean = 0.0;
  double target_scale = 1.0;
};

using Parameters = std::variant<LinearParams, PolynomialParams, ForestParams, NeuralNetParams>;

struct ModelArtifact {
  ModelKind kind = ModelKind::Linear;
  Parameters parameters;
  FeatureSpec spec;
  std::uint64_t seed = 0;
  std::vector<double> training_log;
};

struct MetricReport {
  double rmse = 0.0;
  double relative_rmse = 0.0;
  std::size_t n_test = 0;
};

struct ForestConfig {
  int trees = 200;
  int max_depth = 8;
  int min_leaf = 2;
  int max_features = 0;  // 0 selects max(1, columns / 3)
};

struct NeuralNetConfig {
  std::vector<std::size_t> hidden = {10, 10};
  int epochs = 2000;
  double step = 1e-3;
  std::size_t batch = 0;  // 0 is full batch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainingConfig {
  int polynomial_degree = 2;
  ForestConfig forest;
  NeuralNetConfig neural_net;
};

// Solves min ||X w - y|| through the normal equations (Cholesky). When the
// Gram matrix is numerically singular a 1e-10 ridge jitter is tried once.
std::vector<double> least_squares(const Matrix& design, std::span<const double> y);

ModelArtifact fit_linear(const Dataset& train);
ModelArtifact fit_polynomial(const Dataset& train, int degree = 2);
ModelArtifact fit_random_forest(const Dataset& train, const ForestConfig& config, std::uint64_t seed);
ModelArtifact fit_neural_net(const Dataset& train, const NeuralNetConfig& config, std::uint64_t seed);
ModelArtifact fit(ModelKind kind, const Dataset& train, const TrainingConfig& config, std::uint64_t seed);

// Number of monomials of total degree <= degree in `columns` variables.
std::uint64_t monomial_count(std::size_t columns, int degree);
std::vector<std::vector<int>> enumerate_monomials(std::size_t columns, int degree);

double predict_one(const ModelArtifact& model, std::span<const double> x);
std::vector<double> predict(const ModelArtifact& model, const Matrix& features);

MetricReport metrics(std::span<const double> predicted, std::span<const double> actual);

// Exact reverse-mode gradient of the network output with respect to the
// standardized inputs. ReLU'(0) is taken as 0.
std::vector<double> input_gradient(const ModelArtifact& model, std::span<const double> x);

// Which hidden units are active at x, layer by layer.
std::vector<bool> activation_pattern(const ModelArtifact& model, std::span<const double> x);

// True when some coordinate perturbation of size h flips a hidden unit.
bool near_kink(const ModelArtifact& model, std::span<const double> x, double h);

std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                               std::span<const double> x, double h = 1e-4);
std::vector<double> finite_difference_gradient(const ModelArtifact& model, std::span<const double> x,
                                               double h = 1e-4);

inline constexpr int kFormatVersion = 1;

// Pretty-printed JSON with a trailing newline; identical models give
// identical bytes.
std::string dump_model(const ModelArtifact& model);
ModelArtifact parse_model(std::string_view text);
void save_model(const std::filesystem::path& path, const ModelArtifact& model);
ModelArtifact load_model(const std::filesystem::path& path);

}  // namespace transitgap::ml
