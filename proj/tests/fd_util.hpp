#pragma once

// Central finite-difference oracles shared by the unit and acceptance tests.
// These recompute the scalar under parameter perturbation through the public
// forward paths only, independent of the backward implementation they check.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "mpssl/autodiff.hpp"

namespace fd {

// d(scalar_fn)/d(leaf) by central differences; leaf values are restored.
inline Eigen::MatrixXd numeric_grad(const std::function<double()>& scalar_fn,
                                    const mpssl::ad::Var& leaf,
                                    double h = 1e-6) {
  Eigen::MatrixXd g(leaf->rows(), leaf->cols());
  for (int i = 0; i < leaf->rows(); ++i) {
    for (int j = 0; j < leaf->cols(); ++j) {
      const double orig = leaf->value(i, j);
      const double step = h * std::max(1.0, std::abs(orig));
      leaf->value(i, j) = orig + step;
      const double fp = scalar_fn();
      leaf->value(i, j) = orig - step;
      const double fm = scalar_fn();
      leaf->value(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * step);
    }
  }
  return g;
}

// Largest relative deviation between two gradients.
inline double max_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          double floor = 1e-5) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      const double denom =
          std::max({floor, std::abs(a(i, j)), std::abs(b(i, j))});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  }
  return worst;
}

}  // namespace fd
