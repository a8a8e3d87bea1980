#pragma once

#include <vector>

#include "mpssl/autodiff.hpp"

namespace mpssl {

// Adam over a fixed list of leaf Vars. Values are updated in place.
class Adam {
 public:
  Adam(std::vector<ad::Var> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step(const std::vector<ad::Matrix>& grads);
  const std::vector<ad::Var>& params() const { return params_; }
  double lr() const { return lr_; }

  // Flattened state for checkpointing: [m..., v...] plus step count.
  std::vector<ad::Matrix> state() const;
  long step_count() const { return t_; }
  void restore(const std::vector<ad::Matrix>& state, long step_count);

 private:
  std::vector<ad::Var> params_;
  std::vector<ad::Matrix> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Nesterov momentum SGD with an externally controlled learning rate
// (the trainer applies the step-decay schedule).
class SgdMomentum {
 public:
  SgdMomentum(std::vector<ad::Var> params, double momentum = 0.9);

  void step(const std::vector<ad::Matrix>& grads, double lr);
  const std::vector<ad::Var>& params() const { return params_; }

  std::vector<ad::Matrix> state() const { return velocity_; }
  void restore(const std::vector<ad::Matrix>& state);

 private:
  std::vector<ad::Var> params_;
  std::vector<ad::Matrix> velocity_;
  double momentum_;
};

}  // namespace mpssl
