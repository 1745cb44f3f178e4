#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "transitgap/ingest.hpp"
#include "transitgap/matrix.hpp"
#include "transitgap/random.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(TRANSITGAP_DATA_DIR); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("transitgap_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

  fs::path write(const std::string& name, const std::string& text) const {
    auto p = path_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Dataset whose columns are already in model space: identity standardization.
inline transitgap::ingest::Dataset make_dataset(const transitgap::Matrix& x, std::vector<double> y) {
  transitgap::ingest::Dataset ds;
  ds.features = x;
  ds.targets = std::move(y);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto name = "x" + std::to_string(c + 1);
    ds.spec.feature_names.push_back(name);
    ds.spec.encodings.push_back(transitgap::ingest::Encoding::Numeric);
    ds.spec.columns.push_back({name, name, transitgap::ingest::Encoding::Numeric, 0.0, 1.0});
  }
  ds.spec.target = "y";
  for (std::size_t r = 0; r < x.rows(); ++r) ds.row_ids.push_back("r" + std::to_string(r));
  return ds;
}

inline transitgap::Matrix random_matrix(transitgap::Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                                        double hi = 1.0) {
  transitgap::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  }
  return m;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace testsupport
