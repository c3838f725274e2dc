#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oodgate/feature_table.hpp"

namespace oodgate::testing {

/// Random labeled table; features ~ N(class offset, 1), logits ~ N(0, 2).
inline FeatureTable random_table(std::size_t n, std::size_t d, std::size_t c,
                                 std::uint64_t seed, bool with_logits = true) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> normal(0.0F, 1.0F);
  RowMatrixF f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  RowMatrixF l(static_cast<Eigen::Index>(n), with_logits ? static_cast<Eigen::Index>(c) : 0);
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<Label>(i % c);
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      f(static_cast<Eigen::Index>(i), j) = normal(gen) + 3.0F * static_cast<float>(y[i] == j);
    }
    for (Eigen::Index j = 0; j < l.cols(); ++j) {
      l(static_cast<Eigen::Index>(i), j) = 2.0F * normal(gen);
    }
  }
  return FeatureTable::create(std::move(f), std::move(l), std::move(y));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("oodgate_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
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
  std::filesystem::path path_;
};

}  // namespace oodgate::testing
