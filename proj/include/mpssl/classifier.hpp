#pragma once

#include <cstdint>
#include <vector>

#include "mpssl/autodiff.hpp"
#include "mpssl/foundation.hpp"

namespace mpssl {

// f_theta = h_omega . g_psi: two hidden leaky-ReLU layers as the extractor
// (feature width = hidden2), linear head.
struct ClassifierConfig {
  int input_dim = 8;
  int hidden1 = 64;
  int hidden2 = 32;
  int num_classes = 4;
  double leak = 0.01;
  std::uint64_t seed = 1;
};

struct ClassifierParams {
  ClassifierConfig cfg;
  ad::Var w1, b1, w2, b2;  // psi
  ad::Var wh, bh;          // omega

  std::vector<ad::Var> all() const { return {w1, b1, w2, b2, wh, bh}; }
  std::vector<ad::Var> extractor() const { return {w1, b1, w2, b2}; }
  std::vector<ad::Var> head() const { return {wh, bh}; }

  // Same architecture bound to a different parameter list (e.g. theta').
  ClassifierParams with(const std::vector<ad::Var>& theta) const;

  std::vector<ad::Matrix> values() const;
  void set_values(const std::vector<ad::Matrix>& v);
  std::uint64_t checksum() const;
};

ClassifierParams make_classifier(const ClassifierConfig& cfg);

ad::Var features(const ClassifierParams& p, const ad::Var& x);  // g_psi
ad::Var logits(const ClassifierParams& p, const ad::Var& x);    // h . g

// Value-only paths (no graph) for evaluation.
Eigen::MatrixXd logits_value(const ClassifierParams& p, const Eigen::MatrixXd& x);
Eigen::MatrixXd proba_value(const ClassifierParams& p, const Eigen::MatrixXd& x);

struct EvalResult {
  double accuracy;
  double mean_loss;
};

EvalResult evaluate(const ClassifierParams& p, const Dataset& data);

}  // namespace mpssl
