// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "pipeline_fixture.hpp"
#include "transitgap/analysis.hpp"
#include "transitgap/census_geo.hpp"
#include "transitgap/ml.hpp"
#include "transitgap/pipeline.hpp"

using namespace transitgap;
using testsupport::TempDir;
using testsupport::rel_diff;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      pass = false;
      detail << what;
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome out;
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << "exception: " << e.what();
  }
  if (!out.pass) ++failures;
  std::printf("%s %2d %s%s%s\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), out.detail.str().empty() ? "" : " | ",
              out.detail.str().c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> pinv_solution(const Matrix& x, const std::vector<double>& y) {
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

void run_all(const pipeline::PipelineConfig& c) {
  pipeline::cmd_ingest(c);
  pipeline::cmd_train(c);
  pipeline::cmd_evaluate(c);
  pipeline::cmd_significance(c);
  pipeline::cmd_gaps(c);
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel == "manifest.json") {
      auto j = read_json(e.path());
      j.erase("timestamps");
      files[rel] = j.dump();
    } else {
      files[rel] = testsupport::slurp(e.path());
    }
  }
  return files;
}

double relative_rmse(const Json& evaluation, const std::string& target, const std::string& kind) {
  for (const auto& t : evaluation.at("tables")) {
    if (t.at("target") != target) continue;
    for (const auto& m : t.at("models")) {
      if (m.at("kind") == kind && m.at("status") == "ok") return m.at("relative_rmse").get<double>();
    }
  }
  throw Error(ErrorCode::MissingArtifact, "no successful " + kind + " result for " + target);
}

}  // namespace

int main() {
  const auto city = testsupport::data_dir() / "fixture_city";

  criterion(1, "apportionment conservation", [&](Outcome& out) {
    const auto start = Clock::now();
    auto index = census::load_census(city / "blocks.csv", city / "block_groups.csv", city / "tracts.csv");
    auto a = census::apportion_to_blocks(index);
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& g : index.groups()) {
      for (auto n : kCountTvvNames) {
        double sum = 0.0;
        for (const auto& b : a.blocks) {
          if (b.group_id == g.group_id) sum += b.tvv.at(std::string(n));
        }
        worst = std::max(worst, rel_diff(sum, g.tvv.at(std::string(n))));
        ++checked;
      }
    }
    const double elapsed = seconds_since(start);
    out.detail << checked << " group sums, worst rel " << worst << ", " << fmt("%.3f", elapsed) << " s";
    out.require(checked > 0, "nothing checked");
    out.require(worst <= 1e-9, "sum differs beyond 1e-9");
    out.require(elapsed < 1.0, "slower than 1 s");
  });

  criterion(2, "haversine", [&](Outcome& out) {
    Rng rng(5);
    bool identity = true;
    bool symmetric = true;
    for (int i = 0; i < 1000; ++i) {
      const LatLon a{rng.uniform(-89, 89), rng.uniform(-179, 179)};
      const LatLon b{rng.uniform(-89, 89), rng.uniform(-179, 179)};
      identity = identity && census::haversine_miles(a, a) == 0.0;
      symmetric = symmetric && census::haversine_miles(a, b) == census::haversine_miles(b, a);
    }
    const double degree = census::haversine_miles({38.0, -78.87}, {39.0, -78.87});
    out.detail << "one degree of latitude = " << fmt("%.4f", degree) << " mi";
    out.require(identity, "identity not zero");
    out.require(symmetric, "asymmetric");
    out.require(std::abs(degree - 69.09) <= 0.005 * 69.09, "degree distance outside 0.5%");
  });

  criterion(3, "linear regression vs pseudo-inverse oracle", [&](Outcome& out) {
    Rng rng(2025);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Matrix x = testsupport::random_matrix(rng, 50, 3, -3.0, 3.0);
      std::vector<double> y(50);
      for (std::size_t r = 0; r < 50; ++r) y[r] = 1.5 * x(r, 0) - x(r, 2) + rng.uniform(-4, 4);
      auto w = std::get<ml::LinearParams>(ml::fit_linear(testsupport::make_dataset(x, y)).parameters).weights;
      auto oracle = pinv_solution(x, y);
      for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(w[i] - oracle[i]));
    }
    out.detail << "20 problems 50x3, worst abs diff " << worst;
    out.require(worst <= 1e-8, "exceeds 1e-8");
  });

  criterion(4, "network gradient vs central differences", [&](Outcome& out) {
    Rng rng(404);
    Matrix x = testsupport::random_matrix(rng, 120, 3, -2, 2);
    std::vector<double> y(120);
    for (std::size_t r = 0; r < 120; ++r) y[r] = std::sin(2 * x(r, 0)) + x(r, 1) * x(r, 2) - std::abs(x(r, 1));
    ml::NeuralNetConfig config;
    config.hidden = {10, 10};
    config.epochs = 1000;
    auto m = ml::fit_neural_net(testsupport::make_dataset(x, y), config, 11);
    int checked = 0;
    int skipped = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      auto p = testsupport::random_matrix(rng, 1, 3, -2, 2);
      if (ml::near_kink(m, p.row(0), 1e-4)) {
        ++skipped;
        continue;
      }
      ++checked;
      auto g = ml::input_gradient(m, p.row(0));
      auto fd = ml::finite_difference_gradient(m, p.row(0), 1e-4);
      for (std::size_t c = 0; c < g.size(); ++c) {
        const double scale = std::max(std::abs(g[c]), std::abs(fd[c]));
        if (scale > 0.0) worst = std::max(worst, std::abs(g[c] - fd[c]) / scale);
      }
    }
    out.detail << checked << " points checked, " << skipped << " kink-adjacent skipped, worst rel " << worst;
    out.require(checked > 0, "no points checked");
    out.require(worst <= 1e-4, "exceeds 1e-4 relative");
  });

  criterion(5, "significance recovery", [&](Outcome& out) {
    Rng rng(55);
    std::vector<ingest::NamedRow> raw(300);
    for (std::size_t r = 0; r < raw.size(); ++r) {
      raw[r].row_id = "r" + std::to_string(r);
      raw[r].values = {{"x1", rng.uniform(0, 10)}, {"x2", rng.uniform(-50, 50)}, {"x3", rng.uniform(100, 101)}, {"y", 0.0}};
    }
    // the generator acts on standardized inputs
    const auto probe = ingest::build_design_matrix(raw, {{"x1", "x2", "x3"}, "y"});
    for (std::size_t r = 0; r < raw.size(); ++r)
      raw[r].values["y"] = 3.0 * probe.features(r, 0) - 2.0 * probe.features(r, 1);
    const auto ds = ingest::build_design_matrix(raw, {{"x1", "x2", "x3"}, "y"});
    auto m = ml::fit_neural_net(ds, ml::NeuralNetConfig{}, 9);
    auto report = analysis::significance(m, ds);
    const auto& f = report.features;
    out.detail << "significance (" << fmt("%.4f", f[0].mean_abs_gradient) << ", " << fmt("%.4f", f[1].mean_abs_gradient)
               << ", " << fmt("%.4f", f[2].mean_abs_gradient) << "), signed (" << fmt("%.4f", f[0].mean_signed_gradient)
               << ", " << fmt("%.4f", f[1].mean_signed_gradient) << ")";
    out.require(analysis::ranking(report) == std::vector<std::size_t>{0, 1, 2}, "ranking not x1 > x2 > x3");
    out.require(std::abs(f[0].mean_abs_gradient - 3.0) <= 0.15 * 3.0, "x1 outside 15% of 3");
    out.require(std::abs(f[1].mean_abs_gradient - 2.0) <= 0.15 * 2.0, "x2 outside 15% of 2");
    out.require(f[2].mean_abs_gradient <= 0.15 * 2.0, "x3 above the 15% noise floor");
    out.require(f[0].mean_signed_gradient > 0.0 && f[1].mean_signed_gradient < 0.0, "signs not (+, -)");
  });

  criterion(6, "network beats linear on the nonlinear fixture", [&](Outcome& out) {
    TempDir dir;
    auto j = read_json(testsupport::data_dir() / "nonlinear" / "config.json");
    j["paths"]["output_dir"] = dir.path().string();
    const auto c = pipeline::config_from_json(j, testsupport::data_dir() / "nonlinear");
    pipeline::cmd_ingest(c);
    const auto start = Clock::now();
    pipeline::cmd_train(c);
    const double elapsed = seconds_since(start);
    const auto evaluation = pipeline::cmd_evaluate(c);
    for (const std::string target : {"temporal_supply_miles", "temporal_demand"}) {
      const double nn = relative_rmse(evaluation, target, "neural_net");
      const double lin = relative_rmse(evaluation, target, "linear");
      out.detail << target << " nn " << fmt("%.4f", nn) << " linear " << fmt("%.4f", lin) << "; ";
      out.require(nn < lin, target + ": network not below linear");
    }
    out.detail << "training " << fmt("%.2f", elapsed) << " s";
    out.require(elapsed < 120.0, "training slower than 120 s");
  });

  criterion(7, "linear link arithmetic", [&](Outcome& out) {
    const analysis::LinearLink hours{-184070.48, 76.75, "revenue_hours", 0.0, {}};
    const double at3000 = analysis::predict_trips(hours, 3000);
    out.detail << "hours=3000 -> " << fmt("%.2f", at3000);
    out.require(std::abs(at3000 - 46179.52) <= 0.01, "published coefficients do not give 46179.52");
    for (const auto& [predictor, a, b] : {std::tuple{std::string("revenue_hours"), -184070.48, 76.75},
                                          std::tuple{std::string("revenue_miles"), -229380.05, 10.54}}) {
      std::vector<MonthlyRecord> recs;
      for (int i = 0; i < 60; ++i) {
        MonthlyRecord m;
        m.year = 2017 + i / 12;
        m.month = i % 12 + 1;
        const double x = predictor == "revenue_hours" ? 2400.0 + 31.0 * i + 53.0 * (i % 7) : 24000.0 + 350.0 * i + 700.0 * (i % 5);
        (predictor == "revenue_hours" ? m.revenue_hours : m.revenue_miles) = x;
        m.passenger_trips = a + b * x;
        recs.push_back(m);
      }
      auto fit = analysis::fit_linear_link(recs, predictor);
      const double err = std::max(rel_diff(fit.intercept, a), rel_diff(fit.slope, b));
      out.detail << ", " << predictor << " recovered within " << err;
      out.require(err <= 1e-6, predictor + " coefficients not recovered within 1e-6");
    }
  });

  criterion(8, "split contract", [&](Outcome& out) {
    std::vector<ingest::NamedRow> rows(60);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      rows[r].row_id = "m" + std::to_string(r);
      rows[r].values = {{"a", static_cast<double>(r % 7)}, {"y", static_cast<double>(r)}};
    }
    const auto ds = ingest::build_design_matrix(rows, {{"a"}, "y"});
    auto [train, test] = ingest::train_test_split(ds, 0.8, 7);
    auto [train2, test2] = ingest::train_test_split(ds, 0.8, 7);
    std::set<std::string> all(train.row_ids.begin(), train.row_ids.end());
    std::size_t overlap = 0;
    for (const auto& id : test.row_ids) overlap += all.count(id);
    all.insert(test.row_ids.begin(), test.row_ids.end());
    out.detail << train.rows() << "/" << test.rows();
    out.require(train.rows() == 48 && test.rows() == 12, "sizes are not 48/12");
    out.require(overlap == 0, "train and test overlap");
    out.require(all.size() == 60, "partition does not cover all rows");
    out.require(train.row_ids == train2.row_ids && test.row_ids == test2.row_ids, "not deterministic under seed");
  });

  criterion(9, "gap pipeline on the fixture town", [&](Outcome& out) {
    TempDir dir;
    const auto c = testsupport::fixture_config(dir.path());
    pipeline::cmd_ingest(c);
    pipeline::cmd_train(c);
    const auto report = pipeline::cmd_gaps(c);
    const auto& top = report.stops.front();
    out.detail << "first " << top.stop_id << " (" << analysis::to_string(top.classification) << "), unserviced [";
    for (const auto& b : report.unserviced_block_ids) out.detail << b << (b == report.unserviced_block_ids.back() ? "" : " ");
    out.detail << "]";
    out.require(top.stop_id == "S031", "engineered stop not ranked first");
    out.require(top.classification == analysis::Classification::Shortage, "engineered stop not a shortage");
    const auto& ids = report.unserviced_block_ids;
    out.require(std::find(ids.begin(), ids.end(), "B040") != ids.end(), "remote block not unserviced");
  });

  criterion(10, "end-to-end determinism", [&](Outcome& out) {
    TempDir dir;
    const auto c = testsupport::fixture_config(dir.path());
    auto start = Clock::now();
    run_all(c);
    const double first_time = seconds_since(start);
    const auto first = snapshot(c.paths.output_dir);
    fs::remove_all(c.paths.output_dir);
    start = Clock::now();
    run_all(c);
    const double second_time = seconds_since(start);
    const auto second = snapshot(c.paths.output_dir);
    std::size_t differing = 0;
    for (const auto& [rel, bytes] : first) {
      auto it = second.find(rel);
      if (it == second.end() || it->second != bytes) {
        ++differing;
        out.detail << "differs: " << rel << "; ";
      }
    }
    out.detail << first.size() << " files compared, runs " << fmt("%.2f", first_time) << " s and "
               << fmt("%.2f", second_time) << " s";
    out.require(first.size() == second.size(), "file sets differ");
    out.require(differing == 0, "artifacts differ");
    out.require(first_time < 60.0 && second_time < 60.0, "full run slower than 60 s");
  });

  criterion(11, "adjusted population", [&](Outcome& out) {
    const double v = ingest::adjusted_population(53000, 20000, 2000, false);
    out.detail << fmt("%.1f", v);
    out.require(v == 36800.0, "not 36800");
  });

  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
