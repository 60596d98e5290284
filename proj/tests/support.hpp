#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "medrep/lstm.hpp"
#include "medrep/rng.hpp"
#include "medrep/tensor.hpp"

namespace medrep::test {

// Hand-case weights shared with tests/oracles/model_oracle.py:
// w(i, j, salt) = 0.5 * sin(1.3 i + 0.7 j + salt).
inline Tensor formula(std::size_t rows, std::size_t cols, int salt) {
  std::vector<double> v(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      v[i * cols + j] = 0.5 * std::sin(1.3 * static_cast<double>(i) +
                                       0.7 * static_cast<double>(j) + salt);
    }
  }
  return Tensor::matrix(rows, cols, std::move(v));
}

inline Tensor formula_vector(std::size_t n, int salt) {
  const Tensor m = formula(n, 1, salt);
  return Tensor::vector({m.values().begin(), m.values().end()});
}

inline Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                            double scale = 1.0) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return Tensor::matrix(rows, cols, std::move(v));
}

inline std::vector<double> values(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("medrep_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

}  // namespace medrep::test
