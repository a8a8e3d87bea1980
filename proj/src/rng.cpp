#include "mpssl/rng.hpp"

#include <cmath>

namespace mpssl {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Eigen::MatrixXd Rng::normal_matrix(int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal();
  return m;
}

Eigen::MatrixXd Rng::uniform_matrix(int rows, int cols, double lo, double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
  return m;
}

Eigen::MatrixXd Rng::gumbel_matrix(int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = gumbel();
  return m;
}

std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view stream,
                          std::uint64_t index) {
  std::uint64_t h = fnv1a64(stream);
  h = fnv1a64_bytes(&run_seed, sizeof(run_seed), h);
  h = fnv1a64_bytes(&index, sizeof(index), h);
  // One splitmix scramble so nearby (seed, index) pairs decorrelate.
  Rng r(h);
  return r.next_u64();
}

}  // namespace mpssl
