#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>

#include "mpssl/common.hpp"

namespace mpssl {

// Deterministic splitmix64 stream with explicit uniform/normal/gumbel draws.
// Avoids std::normal_distribution so sequences are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0,1); never returns 0 so log(u) is finite.
  double uniform() {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; second value of each pair is cached.
  double normal();

  double gumbel() { return -std::log(-std::log(uniform())); }

  // Uniform integer in [0, n).
  int below(int n) {
    require(n >= 1, "Rng::below: n must be >= 1");
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  Eigen::MatrixXd normal_matrix(int rows, int cols);
  Eigen::MatrixXd uniform_matrix(int rows, int cols, double lo, double hi);
  Eigen::MatrixXd gumbel_matrix(int rows, int cols);

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[static_cast<std::size_t>(below(i + 1))]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives a child seed for a named stream of a run. Distinct stream names
// give statistically independent sequences for the same run seed, so adding
// a consumer of one stream never perturbs another.
std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view stream,
                          std::uint64_t index = 0);

}  // namespace mpssl
