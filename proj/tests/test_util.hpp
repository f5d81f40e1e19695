#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "dfdrnn/dataset.hpp"
#include "dfdrnn/rng.hpp"
#include "dfdrnn/tensor.hpp"

namespace dfdrnn::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double lo = -2.0,
                            double hi = 2.0) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = lo + (hi - lo) * uniform01(rng);
  return t;
}

// Random sorted neighbor lists; every node gets at least `min_degree` entries.
inline std::vector<std::vector<std::size_t>> random_neighbors(std::size_t nodes, double p, Rng& rng,
                                                              bool self_loops = true,
                                                              std::size_t min_degree = 0) {
  std::vector<std::vector<std::size_t>> out(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = 0; j < nodes; ++j) {
      if ((i == j && self_loops) || uniform01(rng) < p) out[i].push_back(j);
    }
    while (out[i].size() < std::min(min_degree, nodes)) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(nodes));
      if (std::find(out[i].begin(), out[i].end(), j) == out[i].end()) out[i].push_back(j);
    }
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

inline Tensor random_similarity(std::size_t n, Rng& rng) {
  Tensor s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) s(i, j) = s(j, i) = uniform01(rng);
  }
  return s;
}

inline Dataset random_dataset(std::size_t n, std::size_t m, double density, Rng& rng) {
  Dataset d;
  d.name = "random";
  for (std::size_t i = 0; i < n; ++i) d.ids.drug_ids.push_back("dr" + std::to_string(i));
  for (std::size_t j = 0; j < m; ++j) d.ids.disease_ids.push_back("di" + std::to_string(j));
  d.drug_sim = {random_similarity(n, rng), d.ids.drug_ids};
  d.disease_sim = {random_similarity(m, rng), d.ids.disease_ids};
  Tensor a(n, m);
  for (double& v : a.values()) v = uniform01(rng) < density ? 1.0 : 0.0;
  a(0, 0) = 1.0;
  d.assoc = {a, d.ids};
  return d;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dfdrnn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

 private:
  std::filesystem::path path_;
};

}  // namespace dfdrnn::testing
