#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "support.hpp"
#include "transitgap/ml.hpp"

using namespace transitgap;
using namespace transitgap::ml;
using testsupport::make_dataset;
using testsupport::random_matrix;

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

// Independent oracle: minimum-norm least squares through the SVD
// pseudo-inverse of [X 1].
std::vector<double> pinv_oracle(const Matrix& x, const std::vector<double>& y) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  Eigen::VectorXd b(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) a(r, c) = x(r, c);
    a(r, x.cols()) = 1.0;
    b(r) = y[r];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd inv = s;
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > 1e-12 * s(0) ? 1.0 / s(i) : 0.0;
  Eigen::VectorXd w = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * b;
  return {w.data(), w.data() + w.size()};
}

ingest::Dataset line_dataset(std::size_t n, double slope, double intercept, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x = random_matrix(rng, n, 1);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) y[r] = slope * x(r, 0) + intercept;
  return make_dataset(x, y);
}

ModelArtifact network(std::vector<std::size_t> sizes, double weight, double bias) {
  NeuralNetParams p;
  p.layer_sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    p.weights.emplace_back(sizes[l + 1], sizes[l], weight);
    p.biases.emplace_back(sizes[l + 1], bias);
  }
  ModelArtifact m;
  m.kind = ModelKind::NeuralNet;
  m.parameters = p;
  Matrix x(1, sizes.front());
  m.spec = make_dataset(x, {0.0}).spec;
  return m;
}

NeuralNetConfig quick_net(int epochs = 2000) {
  NeuralNetConfig c;
  c.epochs = epochs;
  return c;
}

}  // namespace

TEST_SUITE("linear regression") {
  TEST_CASE("exact line y = 2x + 1 is recovered") {
    auto m = fit_linear(line_dataset(20, 2.0, 1.0, 1));
    const auto& w = std::get<LinearParams>(m.parameters).weights;
    REQUIRE(w.size() == 2);
    CHECK(std::abs(w[0] - 2.0) <= 1e-10);
    CHECK(std::abs(w[1] - 1.0) <= 1e-10);
  }

  TEST_CASE("matches the pseudo-inverse oracle on random full-rank problems") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
      Matrix x = random_matrix(rng, 50, 3, -3.0, 3.0);
      std::vector<double> y(50);
      for (auto& v : y) v = rng.uniform(-10, 10);
      auto w = std::get<LinearParams>(fit_linear(make_dataset(x, y)).parameters).weights;
      auto oracle = pinv_oracle(x, y);
      for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(w[i] - oracle[i]) <= 1e-8);
    }
  }

  TEST_CASE("property: residuals are orthogonal to every column") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
      const auto n = 10 + rng.below(60);
      const auto d = 1 + rng.below(5);
      Matrix x = random_matrix(rng, n, d);
      std::vector<double> y(n);
      for (auto& v : y) v = rng.uniform(-5, 5);
      auto model = fit_linear(make_dataset(x, y));
      auto pred = predict(model, x);
      for (std::size_t c = 0; c <= d; ++c) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += (y[r] - pred[r]) * (c < d ? x(r, c) : 1.0);
        CHECK(std::abs(dot) <= 1e-8);
      }
    }
  }

  TEST_CASE("duplicate columns are SingularDesign; too few rows is TooFewRows") {
    Rng rng(3);
    Matrix x(20, 2);
    for (std::size_t r = 0; r < 20; ++r) x(r, 0) = x(r, 1) = rng.uniform();
    std::vector<double> y(20, 1.0);
    for (std::size_t r = 0; r < 20; ++r) y[r] = x(r, 0);
    CHECK(code_of([&] { fit_linear(make_dataset(x, y)); }) == ErrorCode::SingularDesign);
    CHECK(code_of([&] { fit_linear(make_dataset(random_matrix(rng, 2, 2), {1, 2})); }) == ErrorCode::TooFewRows);
  }

  TEST_CASE("prediction with weights (2, 1) at x = 3 is 7") {
    ModelArtifact m;
    m.kind = ModelKind::Linear;
    m.parameters = LinearParams{{2.0, 1.0}};
    m.spec = make_dataset(Matrix(1, 1), {0.0}).spec;
    const double x[] = {3.0};
    CHECK(predict_one(m, x) == 7.0);
    const double wrong[] = {3.0, 4.0};
    CHECK(code_of([&] { predict_one(m, wrong); }) == ErrorCode::DimensionMismatch);
  }
}

TEST_SUITE("polynomial regression") {
  TEST_CASE("monomial counts follow C(d + k, k)") {
    CHECK(monomial_count(1, 2) == 3);
    CHECK(monomial_count(10, 5) == 3003);
    for (std::size_t d = 1; d <= 5; ++d) {
      for (int k = 0; k <= 4; ++k) CHECK(enumerate_monomials(d, k).size() == monomial_count(d, k));
    }
  }

  TEST_CASE("y = x^2 is fit exactly") {
    Rng rng(12);
    Matrix x = random_matrix(rng, 30, 1, -2, 2);
    std::vector<double> y(30);
    for (std::size_t r = 0; r < 30; ++r) y[r] = x(r, 0) * x(r, 0);
    auto ds = make_dataset(x, y);
    auto [train, test] = ingest::train_test_split(ds, 0.8, 7);
    auto m = fit_polynomial(train, 2);
    CHECK(metrics(predict(m, test.features), test.targets).rmse < 1e-8);
  }

  TEST_CASE("degree 1 reproduces linear regression") {
    Rng rng(13);
    Matrix x = random_matrix(rng, 40, 3);
    std::vector<double> y(40);
    for (auto& v : y) v = rng.uniform(-1, 1);
    auto ds = make_dataset(x, y);
    auto a = predict(fit_polynomial(ds, 1), x);
    auto b = predict(fit_linear(ds), x);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-10);
  }

  TEST_CASE("10 features at degree 5 on 50 rows is ExpansionTooLarge") {
    Rng rng(14);
    auto ds = make_dataset(random_matrix(rng, 50, 10), std::vector<double>(50, 1.0));
    CHECK(code_of([&] { fit_polynomial(ds, 5); }) == ErrorCode::ExpansionTooLarge);
  }
}

TEST_SUITE("random forest") {
  TEST_CASE("constant target predicts the constant everywhere") {
    Rng rng(1);
    auto ds = make_dataset(random_matrix(rng, 30, 3), std::vector<double>(30, 4.25));
    auto m = fit_random_forest(ds, {20, 8, 2, 0}, 7);
    for (double v : predict(m, random_matrix(rng, 10, 3, -5, 5))) CHECK(v == 4.25);
  }

  TEST_CASE("same seed gives bit-identical forests") {
    Rng rng(2);
    Matrix x = random_matrix(rng, 60, 4);
    std::vector<double> y(60);
    for (std::size_t r = 0; r < 60; ++r) y[r] = std::sin(3 * x(r, 0)) + x(r, 1) * x(r, 2);
    auto ds = make_dataset(x, y);
    CHECK(dump_model(fit_random_forest(ds, {30, 6, 2, 0}, 9)) == dump_model(fit_random_forest(ds, {30, 6, 2, 0}, 9)));
    CHECK(dump_model(fit_random_forest(ds, {30, 6, 2, 0}, 9)) != dump_model(fit_random_forest(ds, {30, 6, 2, 0}, 10)));
  }

  TEST_CASE("step target: forest beats linear on training error") {
    Rng rng(5);
    Matrix x = random_matrix(rng, 80, 1);
    std::vector<double> y(80);
    for (std::size_t r = 0; r < 80; ++r) y[r] = x(r, 0) > 0.2 ? 10.0 : 1.0;
    auto ds = make_dataset(x, y);
    const auto forest = metrics(predict(fit_random_forest(ds, {50, 3, 2, 0}, 7), x), y).rmse;
    const auto linear = metrics(predict(fit_linear(ds), x), y).rmse;
    CHECK(forest < linear);
  }

  TEST_CASE("forest of identical trees equals the single tree") {
    RegressionTree tree;
    tree.nodes = {{0, 0.5, 1, 2, 0.0}, {-1, 0, -1, -1, 1.5}, {-1, 0, -1, -1, -2.0}};
    ForestParams p;
    p.trees = {tree, tree, tree, tree, tree};
    ModelArtifact m;
    m.kind = ModelKind::RandomForest;
    m.parameters = p;
    m.spec = make_dataset(Matrix(1, 1), {0.0}).spec;
    for (double v : {-1.0, 0.5, 0.50001, 3.0}) {
      const double x[] = {v};
      CHECK(predict_one(m, x) == tree.predict(x));
    }
  }

  TEST_CASE("too few rows for the leaf size") {
    Rng rng(6);
    auto ds = make_dataset(random_matrix(rng, 3, 1), {1, 2, 3});
    CHECK(code_of([&] { fit_random_forest(ds, {10, 4, 2, 0}, 1); }) == ErrorCode::TooFewRows);
  }
}

TEST_SUITE("neural network") {
  TEST_CASE("learns y = 2x + 1") {
    auto ds = line_dataset(100, 2.0, 1.0, 31);
    auto [train, test] = ingest::train_test_split(ds, 0.8, 7);
    auto m = fit_neural_net(train, quick_net(), 7);
    CHECK(metrics(predict(m, test.features), test.targets).rmse <= 0.05);
    REQUIRE(m.training_log.size() == 2001);
    CHECK(m.training_log.back() <= m.training_log.front());
    const auto& p = std::get<NeuralNetParams>(m.parameters);
    CHECK(p.layer_sizes == std::vector<std::size_t>{1, 10, 10, 1});
  }

  TEST_CASE("same seed gives identical weights") {
    auto ds = line_dataset(40, -1.0, 0.5, 3);
    CHECK(dump_model(fit_neural_net(ds, quick_net(200), 5)) == dump_model(fit_neural_net(ds, quick_net(200), 5)));
  }

  TEST_CASE("absurd step size diverges") {
    Rng rng(8);
    Matrix x = random_matrix(rng, 40, 3);
    std::vector<double> y(40);
    for (std::size_t r = 0; r < 40; ++r) y[r] = x(r, 0) * x(r, 1) - x(r, 2);
    auto config = quick_net(200);
    config.step = 1e6;
    CHECK(code_of([&] { fit_neural_net(make_dataset(x, y), config, 7); }) == ErrorCode::DivergedLoss);
  }

  TEST_CASE("zero weights with an output bias predict the bias") {
    auto m = network({3, 10, 10, 1}, 0.0, 0.0);
    std::get<NeuralNetParams>(m.parameters).biases.back()[0] = 2.5;
    Rng rng(1);
    for (double v : predict(m, random_matrix(rng, 5, 3, -10, 10))) CHECK(v == 2.5);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("hand-computed values") {
    std::vector<double> a{100, 300}, p{200, 200};
    auto m = metrics(p, a);
    CHECK(m.rmse == 100.0);
    CHECK(m.relative_rmse == 0.5);
    CHECK(m.n_test == 2);
    auto perfect = metrics(a, a);
    CHECK(perfect.rmse == 0.0);
    CHECK(perfect.relative_rmse == 0.0);
    std::vector<double> shifted{101, 301};
    CHECK(metrics(shifted, a).rmse == 1.0);
  }

  TEST_CASE("zero-mean actuals and mismatched lengths are rejected") {
    std::vector<double> a{-1, 1}, p{0, 0}, short_p{0};
    CHECK(code_of([&] { metrics(p, a); }) == ErrorCode::ZeroMeanActual);
    CHECK(code_of([&] { metrics(short_p, a); }) == ErrorCode::DimensionMismatch);
  }
}

TEST_SUITE("gradients") {
  TEST_CASE("single linear layer has gradient equal to its weights") {
    auto m = network({3, 1}, 0.0, 0.0);
    auto& w = std::get<NeuralNetParams>(m.parameters).weights[0];
    w(0, 0) = 1.5;
    w(0, 1) = -2.0;
    w(0, 2) = 0.25;
    Rng rng(4);
    for (int i = 0; i < 10; ++i) {
      auto x = random_matrix(rng, 1, 3, -5, 5);
      CHECK(input_gradient(m, x.row(0)) == std::vector<double>{1.5, -2.0, 0.25});
    }
  }

  TEST_CASE("dead ReLU region has zero gradient") {
    auto m = network({2, 3, 1}, 0.0, -1.0);
    const double x[] = {0.3, -0.7};
    CHECK(input_gradient(m, x) == std::vector<double>{0.0, 0.0});
  }

  TEST_CASE("gradients are unsupported for forests") {
    Rng rng(1);
    auto ds = make_dataset(random_matrix(rng, 20, 2), std::vector<double>(20, 1.0));
    auto m = fit_random_forest(ds, {5, 3, 2, 0}, 1);
    const double x[] = {0.0, 0.0};
    CHECK(code_of([&] { input_gradient(m, x); }) == ErrorCode::KindUnsupported);
  }

  TEST_CASE("trained network agrees with central differences away from kinks") {
    Rng rng(99);
    Matrix x = random_matrix(rng, 80, 4, -2, 2);
    std::vector<double> y(80);
    for (std::size_t r = 0; r < 80; ++r) y[r] = std::sin(x(r, 0)) + x(r, 1) * x(r, 2) - std::abs(x(r, 3));
    auto m = fit_neural_net(make_dataset(x, y), quick_net(500), 3);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
      auto p = random_matrix(rng, 1, 4, -2, 2);
      if (near_kink(m, p.row(0), 1e-4)) continue;
      ++checked;
      auto g = input_gradient(m, p.row(0));
      auto fd = finite_difference_gradient(m, p.row(0), 1e-4);
      for (std::size_t c = 0; c < g.size(); ++c)
        CHECK(std::abs(g[c] - fd[c]) <= 1e-4 * std::max(std::abs(g[c]), std::abs(fd[c])) + 1e-10);
    }
    CHECK(checked >= 90);
  }

  TEST_CASE("finite differences of closed-form functions") {
    const double x3[] = {3.0};
    auto lin = finite_difference_gradient([](std::span<const double> v) { return 2.0 * v[0] + 1.0; }, x3);
    CHECK(std::abs(lin[0] - 2.0) <= 1e-10);
    auto sq = finite_difference_gradient([](std::span<const double> v) { return v[0] * v[0]; }, x3, 1e-4);
    CHECK(std::abs(sq[0] - 6.0) <= 1e-6);
    const double x2[] = {1.0, -4.0};
    auto flat = finite_difference_gradient([](std::span<const double>) { return 7.0; }, x2);
    CHECK(flat == std::vector<double>{0.0, 0.0});
  }
}

TEST_SUITE("persistence") {
  TEST_CASE("every kind survives save and load with identical predictions") {
    testsupport::TempDir dir;
    Rng rng(10);
    Matrix x = random_matrix(rng, 60, 3);
    std::vector<double> y(60);
    for (std::size_t r = 0; r < 60; ++r) y[r] = x(r, 0) * x(r, 0) + 0.5 * x(r, 1) - x(r, 2);
    auto ds = make_dataset(x, y);
    TrainingConfig config;
    config.forest.trees = 15;
    config.neural_net.epochs = 100;
    for (auto kind : kAllKinds) {
      auto m = fit(kind, ds, config, 7);
      const auto path = dir / (std::string(to_string(kind)) + ".json");
      save_model(path, m);
      auto loaded = load_model(path);
      CHECK(loaded.kind == kind);
      CHECK(loaded.spec == m.spec);
      CHECK(predict(loaded, x) == predict(m, x));
      CHECK(dump_model(loaded) == dump_model(m));
    }
  }

  TEST_CASE("wrong format version and missing files are reported") {
    auto m = network({2, 1}, 1.0, 0.0);
    auto text = dump_model(m);
    const auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 19, "\"format_version\": 9");
    CHECK_THROWS_AS(parse_model(text), Error);
    CHECK(code_of([] { load_model("/nonexistent/model.json"); }) == ErrorCode::MissingArtifact);
  }
}
