#include "transitgap/ml.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "transitgap/csv.hpp"
#include "transitgap/random.hpp"

namespace transitgap::ml {
namespace {

constexpr double kJitter = 1e-10;
// A Cholesky pivot below this fraction of its original diagonal entry marks
// the column as linearly dependent on the previous ones.
constexpr double kPivotTolerance = 1e-9;

bool cholesky_solve(std::vector<double> gram, std::size_t p, std::vector<double>& rhs) {
  std::vector<double> diag(p);
  for (std::size_t i = 0; i < p; ++i) diag[i] = gram[i * p + i];
  for (std::size_t j = 0; j < p; ++j) {
    double d = gram[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= gram[j * p + k] * gram[j * p + k];
    if (!(d > kPivotTolerance * std::max(diag[j], 1e-300))) return false;
    const double l = std::sqrt(d);
    gram[j * p + j] = l;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = gram[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= gram[i * p + k] * gram[j * p + k];
      gram[i * p + j] = s / l;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= gram[i * p + k] * rhs[k];
    rhs[i] = s / gram[i * p + i];
  }
  for (std::size_t i = p; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < p; ++k) s -= gram[k * p + i] * rhs[k];
    rhs[i] = s / gram[i * p + i];
  }
  return true;
}

Matrix with_intercept(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r);
    auto dst = out.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[x.cols()] = 1.0;
  }
  return out;
}

double monomial_value(const std::vector<int>& exponents, std::span<const double> x) {
  double v = 1.0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    for (int e = 0; e < exponents[i]; ++e) v *= x[i];
  }
  return v;
}

void enumerate(std::size_t columns, int remaining, std::size_t start, std::vector<int>& current,
               std::vector<std::vector<int>>& out) {
  out.push_back(current);
  if (remaining == 0) return;
  for (std::size_t i = start; i < columns; ++i) {
    ++current[i];
    enumerate(columns, remaining - 1, i, current, out);
    --current[i];
  }
}

// --- random forest -------------------------------------------------------

struct TreeBuilder {
  const Matrix& x;
  std::span<const double> y;
  const ForestParams& params;
  Rng& rng;
  RegressionTree tree;

  int grow(std::vector<std::size_t>& idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    double sum = 0.0;
    for (auto i : idx) sum += y[i];
    const double n = static_cast<double>(idx.size());
    bool constant = std::all_of(idx.begin(), idx.end(), [&](auto i) { return y[i] == y[idx.front()]; });
    tree.nodes[node_id].value = constant ? y[idx.front()] : sum / n;
    if (constant || depth >= params.max_depth || idx.size() < 2 * static_cast<std::size_t>(params.min_leaf))
      return node_id;

    const std::size_t d = x.cols();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), std::size_t{0});
    const auto m = static_cast<std::size_t>(params.max_features);
    for (std::size_t i = 0; i < m; ++i) {
      auto j = i + static_cast<std::size_t>(rng.below(d - i));
      std::swap(features[i], features[j]);
    }

    const double parent_sse_term = sum * sum / n;
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = idx;
    for (std::size_t fi = 0; fi < m; ++fi) {
      const std::size_t f = features[fi];
      std::sort(sorted.begin(), sorted.end(), [&](auto a, auto b) {
        return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
      });
      double left = 0.0;
      const std::size_t min_leaf = static_cast<std::size_t>(params.min_leaf);
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        left += y[sorted[k]];
        const std::size_t nl = k + 1;
        const std::size_t nr = sorted.size() - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double lo = x(sorted[k], f);
        const double hi = x(sorted[k + 1], f);
        if (lo == hi) continue;
        const double right = sum - left;
        // SSE reduction = left^2/nl + right^2/nr - sum^2/n
        const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) -
                            parent_sse_term;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
          if (!(best_threshold < hi)) best_threshold = lo;  // adjacent doubles
        }
      }
    }
    if (best_feature < 0 || !(best_gain > 0.0)) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (auto i : idx) (x(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_idx : right_idx).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(left_idx, depth + 1);
    const int r = grow(right_idx, depth + 1);
    auto& node = tree.nodes[node_id];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }
};

// --- neural network ------------------------------------------------------

struct Workspace {
  std::vector<std::vector<double>> pre;   // pre-activations per layer
  std::vector<std::vector<double>> post;  // activations; post[0] is the input
};

double forward(const NeuralNetParams& p, std::span<const double> x, Workspace& ws) {
  const std::size_t layers = p.weights.size();
  ws.pre.resize(layers);
  ws.post.resize(layers + 1);
  ws.post[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = p.weights[l];
    auto& z = ws.pre[l];
    z.assign(w.rows(), 0.0);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double s = p.biases[l][o];
      auto wr = w.row(o);
      for (std::size_t i = 0; i < w.cols(); ++i) s += wr[i] * ws.post[l][i];
      z[o] = s;
    }
    auto& a = ws.post[l + 1];
    a = z;
    if (l + 1 < layers) {
      for (auto& v : a) v = v > 0.0 ? v : 0.0;
    }
  }
  return ws.post[layers][0];
}

// Gradient of the (scaled) network output w.r.t. the pre-activations of
// each layer, given a forward pass. Output seed `seed` multiplies all.
void backward(const NeuralNetParams& p, const Workspace& ws, double seed, std::vector<std::vector<double>>& delta) {
  const std::size_t layers = p.weights.size();
  delta.resize(layers);
  delta[layers - 1].assign(1, seed);
  for (std::size_t l = layers - 1; l-- > 0;) {
    const auto& w = p.weights[l + 1];
    auto& d = delta[l];
    d.assign(w.cols(), 0.0);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const double g = delta[l + 1][o];
      if (g == 0.0) continue;
      auto wr = w.row(o);
      for (std::size_t i = 0; i < w.cols(); ++i) d[i] += wr[i] * g;
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(ws.pre[l][i] > 0.0)) d[i] = 0.0;
    }
  }
}

const NeuralNetParams& network(const ModelArtifact& model) {
  if (model.kind != ModelKind::NeuralNet)
    throw Error(ErrorCode::KindUnsupported,
                "exact input gradients need a neural_net model, got " + std::string(to_string(model.kind)));
  return std::get<NeuralNetParams>(model.parameters);
}

void require_rows(const Dataset& train, std::size_t minimum, std::string_view what) {
  if (train.rows() < minimum)
    throw Error(ErrorCode::TooFewRows, std::string(what) + " needs at least " + std::to_string(minimum) +
                                           " rows, got " + std::to_string(train.rows()));
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Polynomial: return "polynomial";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::NeuralNet: return "neural_net";
  }
  return "linear";
}

ModelKind kind_from_string(std::string_view s) {
  for (auto k : kAllKinds) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::ConfigError, "unknown model kind '" + std::string(s) + "'");
}

double RegressionTree::predict(std::span<const double> x) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

std::vector<double> least_squares(const Matrix& design, std::span<const double> y) {
  const std::size_t n = design.rows();
  const std::size_t p = design.cols();
  if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "least squares: target length differs from rows");
  if (n < p) throw Error(ErrorCode::TooFewRows, "least squares needs at least as many rows as columns");
  std::vector<double> gram(p * p, 0.0);
  std::vector<double> rhs(p, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = design.row(r);
    for (std::size_t i = 0; i < p; ++i) {
      rhs[i] += row[i] * y[r];
      for (std::size_t j = 0; j <= i; ++j) gram[i * p + j] += row[i] * row[j];
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < i; ++j) gram[j * p + i] = gram[i * p + j];
  }
  auto solution = rhs;
  if (cholesky_solve(gram, p, solution)) return solution;

  double trace = 0.0;
  for (std::size_t i = 0; i < p; ++i) trace += gram[i * p + i];
  const double jitter = kJitter * std::max(trace / static_cast<double>(p), 1.0);
  for (std::size_t i = 0; i < p; ++i) gram[i * p + i] += jitter;
  solution = rhs;
  if (cholesky_solve(gram, p, solution)) return solution;
  throw Error(ErrorCode::SingularDesign, "design matrix is rank deficient");
}

ModelArtifact fit_linear(const Dataset& train) {
  require_rows(train, train.features.cols() + 1, "linear regression");
  ModelArtifact m;
  m.kind = ModelKind::Linear;
  m.spec = train.spec;
  auto w = least_squares(with_intercept(train.features), train.targets);
  m.parameters = LinearParams{std::move(w)};
  return m;
}

std::uint64_t monomial_count(std::size_t columns, int degree) {
  // C(columns + degree, degree), saturating
  std::uint64_t c = 1;
  for (int k = 1; k <= degree; ++k) {
    const std::uint64_t num = columns + static_cast<std::uint64_t>(k);
    if (c > UINT64_MAX / num) return UINT64_MAX;
    c = c * num / static_cast<std::uint64_t>(k);
  }
  return c;
}

std::vector<std::vector<int>> enumerate_monomials(std::size_t columns, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> current(columns, 0);
  enumerate(columns, degree, 0, current, out);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::accumulate(a.begin(), a.end(), 0) < std::accumulate(b.begin(), b.end(), 0);
  });
  return out;
}

ModelArtifact fit_polynomial(const Dataset& train, int degree) {
  if (degree < 1) throw Error(ErrorCode::ConfigError, "polynomial degree must be at least 1");
  const std::size_t d = train.features.cols();
  if (monomial_count(d, degree) > 200'000)
    throw Error(ErrorCode::ExpansionTooLarge, "polynomial expansion exceeds 200000 terms");
  PolynomialParams p;
  p.degree = degree;
  p.monomials = enumerate_monomials(d, degree);
  // sin^2 + cos^2 = 1 makes every monomial with cos^2 a combination of
  // lower-order terms, so those are left out.
  for (std::size_t c = 0; c < train.spec.columns.size(); ++c) {
    const auto& col = train.spec.columns[c];
    if (col.encoding != ingest::Encoding::CyclicMonth || c == 0) continue;
    const auto& prev = train.spec.columns[c - 1];
    if (prev.encoding != ingest::Encoding::CyclicMonth || prev.source != col.source) continue;
    std::erase_if(p.monomials, [c](const std::vector<int>& e) { return e[c] >= 2; });
  }
  const auto count = p.monomials.size();
  if (count >= train.rows())
    throw Error(ErrorCode::ExpansionTooLarge, "degree-" + std::to_string(degree) + " expansion of " +
                                                  std::to_string(d) + " columns has " + std::to_string(count) +
                                                  " terms for " + std::to_string(train.rows()) + " rows");
  Matrix expanded(train.rows(), p.monomials.size());
  for (std::size_t r = 0; r < train.rows(); ++r) {
    for (std::size_t k = 0; k < p.monomials.size(); ++k)
      expanded(r, k) = monomial_value(p.monomials[k], train.features.row(r));
  }
  p.coefficients = least_squares(expanded, train.targets);
  ModelArtifact m;
  m.kind = ModelKind::Polynomial;
  m.spec = train.spec;
  m.parameters = std::move(p);
  return m;
}

ModelArtifact fit_random_forest(const Dataset& train, const ForestConfig& config, std::uint64_t seed) {
  if (config.trees < 1 || config.max_depth < 0 || config.min_leaf < 1)
    throw Error(ErrorCode::ConfigError, "forest needs trees >= 1, max_depth >= 0, min_leaf >= 1");
  require_rows(train, 2 * static_cast<std::size_t>(config.min_leaf), "random forest");
  const std::size_t d = train.features.cols();
  ForestParams params;
  params.max_depth = config.max_depth;
  params.min_leaf = config.min_leaf;
  params.max_features = config.max_features > 0 ? std::min(config.max_features, static_cast<int>(d))
                                                 : std::max(1, static_cast<int>(d) / 3);
  Rng rng(seed);
  const std::size_t n = train.rows();
  for (int t = 0; t < config.trees; ++t) {
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
    TreeBuilder builder{train.features, train.targets, params, rng, {}};
    builder.grow(sample, 0);
    params.trees.push_back(std::move(builder.tree));
  }
  ModelArtifact m;
  m.kind = ModelKind::RandomForest;
  m.spec = train.spec;
  m.seed = seed;
  m.parameters = std::move(params);
  return m;
}

ModelArtifact fit_neural_net(const Dataset& train, const NeuralNetConfig& config, std::uint64_t seed) {
  require_rows(train, 5, "neural network");
  if (config.epochs < 1 || !(config.step > 0.0))
    throw Error(ErrorCode::ConfigError, "neural network needs epochs >= 1 and step > 0");
  const std::size_t n = train.rows();
  const std::size_t d = train.features.cols();

  NeuralNetParams p;
  p.layer_sizes.push_back(d);
  for (auto h : config.hidden) p.layer_sizes.push_back(h);
  p.layer_sizes.push_back(1);

  double mean = std::accumulate(train.targets.begin(), train.targets.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double t : train.targets) ss += (t - mean) * (t - mean);
  double scale = std::sqrt(ss / static_cast<double>(n));
  if (!(scale > 0.0)) scale = 1.0;
  p.target_mean = mean;
  p.target_scale = scale;

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const std::size_t fan_in = p.layer_sizes[l];
    const std::size_t fan_out = p.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (std::size_t o = 0; o < fan_out; ++o) {
      for (std::size_t i = 0; i < fan_in; ++i) w(o, i) = rng.uniform(-limit, limit);
    }
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(fan_out, 0.0);
  }

  std::vector<double> scaled(n);
  for (std::size_t r = 0; r < n; ++r) scaled[r] = (train.targets[r] - mean) / scale;

  // Adam moment buffers mirror the parameter layout.
  const std::size_t layers = p.weights.size();
  std::vector<Matrix> mw, vw, gw;
  std::vector<std::vector<double>> mb, vb, gb;
  for (std::size_t l = 0; l < layers; ++l) {
    mw.emplace_back(p.weights[l].rows(), p.weights[l].cols());
    vw.emplace_back(p.weights[l].rows(), p.weights[l].cols());
    gw.emplace_back(p.weights[l].rows(), p.weights[l].cols());
    mb.emplace_back(p.biases[l].size(), 0.0);
    vb.emplace_back(p.biases[l].size(), 0.0);
    gb.emplace_back(p.biases[l].size(), 0.0);
  }

  Workspace ws;
  std::vector<std::vector<double>> delta;
  auto full_loss = [&] {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double e = forward(p, train.features.row(r), ws) - scaled[r];
      s += e * e;
    }
    return s / static_cast<double>(n) * scale * scale;
  };

  ModelArtifact m;
  m.kind = ModelKind::NeuralNet;
  m.spec = train.spec;
  m.seed = seed;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = config.batch == 0 || config.batch > n ? n : config.batch;
  const double initial = full_loss();
  m.training_log.push_back(initial);
  if (!std::isfinite(initial)) throw Error(ErrorCode::DivergedLoss, "initial loss is not finite");

  long step_count = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      for (std::size_t l = 0; l < layers; ++l) {
        gw[l] = Matrix(gw[l].rows(), gw[l].cols());
        std::fill(gb[l].begin(), gb[l].end(), 0.0);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t r = order[k];
        const double out = forward(p, train.features.row(r), ws);
        backward(p, ws, 2.0 * (out - scaled[r]) * inv, delta);
        for (std::size_t l = 0; l < layers; ++l) {
          for (std::size_t o = 0; o < gw[l].rows(); ++o) {
            const double g = delta[l][o];
            if (g == 0.0) continue;
            gb[l][o] += g;
            auto grow = gw[l].row(o);
            for (std::size_t i = 0; i < grow.size(); ++i) grow[i] += g * ws.post[l][i];
          }
        }
      }
      ++step_count;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_count));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_count));
      auto adam = [&](double& param, double& m1, double& m2, double g) {
        m1 = config.beta1 * m1 + (1.0 - config.beta1) * g;
        m2 = config.beta2 * m2 + (1.0 - config.beta2) * g * g;
        param -= config.step * (m1 / c1) / (std::sqrt(m2 / c2) + config.epsilon);
      };
      for (std::size_t l = 0; l < layers; ++l) {
        auto& w = p.weights[l];
        for (std::size_t o = 0; o < w.rows(); ++o) {
          for (std::size_t i = 0; i < w.cols(); ++i) adam(w(o, i), mw[l](o, i), vw[l](o, i), gw[l](o, i));
          adam(p.biases[l][o], mb[l][o], vb[l][o], gb[l][o]);
        }
      }
    }
    const double loss = full_loss();
    if (!std::isfinite(loss))
      throw Error(ErrorCode::DivergedLoss, "loss became non-finite at epoch " + std::to_string(epoch + 1));
    m.training_log.push_back(loss);
  }
  if (m.training_log.back() > initial)
    throw Error(ErrorCode::DivergedLoss, "final loss " + csv::format_number(m.training_log.back()) +
                                             " exceeds initial loss " + csv::format_number(initial));
  m.parameters = std::move(p);
  return m;
}

ModelArtifact fit(ModelKind kind, const Dataset& train, const TrainingConfig& config, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::Linear: return fit_linear(train);
    case ModelKind::Polynomial: return fit_polynomial(train, config.polynomial_degree);
    case ModelKind::RandomForest: return fit_random_forest(train, config.forest, seed);
    case ModelKind::NeuralNet: return fit_neural_net(train, config.neural_net, seed);
  }
  throw Error(ErrorCode::ConfigError, "unknown model kind");
}

double predict_one(const ModelArtifact& model, std::span<const double> x) {
  if (x.size() != model.spec.column_count())
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.spec.column_count()) +
                                                  " columns, got " + std::to_string(x.size()));
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearParams>) {
          double s = p.weights[x.size()];
          for (std::size_t i = 0; i < x.size(); ++i) s += p.weights[i] * x[i];
          return s;
        } else if constexpr (std::is_same_v<P, PolynomialParams>) {
          double s = 0.0;
          for (std::size_t k = 0; k < p.monomials.size(); ++k) s += p.coefficients[k] * monomial_value(p.monomials[k], x);
          return s;
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          double s = 0.0;
          for (const auto& t : p.trees) s += t.predict(x);
          return s / static_cast<double>(p.trees.size());
        } else {
          Workspace ws;
          return p.target_mean + p.target_scale * forward(p, x, ws);
        }
      },
      model.parameters);
}

std::vector<double> predict(const ModelArtifact& model, const Matrix& features) {
  if (features.cols() != model.spec.column_count() && features.rows() > 0)
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.spec.column_count()) +
                                                  " columns, got " + std::to_string(features.cols()));
  std::vector<double> out(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    out[r] = predict_one(model, features.row(r));
    if (!std::isfinite(out[r])) throw Error(ErrorCode::DivergedLoss, "non-finite prediction");
  }
  return out;
}

MetricReport metrics(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size() || actual.empty())
    throw Error(ErrorCode::DimensionMismatch, "metrics need equal, non-empty prediction and actual vectors");
  double se = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    se += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
    sum += actual[i];
  }
  const double n = static_cast<double>(actual.size());
  const double mean = sum / n;
  if (mean == 0.0) throw Error(ErrorCode::ZeroMeanActual, "relative RMSE undefined for zero-mean actuals");
  MetricReport m;
  m.rmse = std::sqrt(se / n);
  m.relative_rmse = m.rmse / mean;
  m.n_test = actual.size();
  return m;
}

std::vector<double> input_gradient(const ModelArtifact& model, std::span<const double> x) {
  const auto& p = network(model);
  if (x.size() != p.layer_sizes.front())
    throw Error(ErrorCode::DimensionMismatch, "gradient input has wrong length");
  Workspace ws;
  forward(p, x, ws);
  std::vector<std::vector<double>> delta;
  backward(p, ws, p.target_scale, delta);
  const auto& w0 = p.weights.front();
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t o = 0; o < w0.rows(); ++o) {
    auto wr = w0.row(o);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] += wr[i] * delta[0][o];
  }
  return g;
}

std::vector<bool> activation_pattern(const ModelArtifact& model, std::span<const double> x) {
  const auto& p = network(model);
  Workspace ws;
  forward(p, x, ws);
  std::vector<bool> pattern;
  for (std::size_t l = 0; l + 1 < ws.pre.size(); ++l) {
    for (double z : ws.pre[l]) pattern.push_back(z > 0.0);
  }
  return pattern;
}

bool near_kink(const ModelArtifact& model, std::span<const double> x, double h) {
  const auto base = activation_pattern(model, x);
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (double s : {-h, h}) {
      probe[i] = x[i] + s;
      if (activation_pattern(model, probe) != base) return true;
    }
    probe[i] = x[i];
  }
  return false;
}

std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                               std::span<const double> x, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::ConfigError, "finite difference step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<double> finite_difference_gradient(const ModelArtifact& model, std::span<const double> x, double h) {
  return finite_difference_gradient([&](std::span<const double> v) { return predict_one(model, v); }, x, h);
}

}  // namespace transitgap::ml
