#include "mpssl/optim.hpp"

#include <cmath>

#include "mpssl/common.hpp"

namespace mpssl {

Adam::Adam(std::vector<ad::Var> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.push_back(ad::Matrix::Zero(p->rows(), p->cols()));
    v_.push_back(ad::Matrix::Zero(p->rows(), p->cols()));
  }
}

void Adam::step(const std::vector<ad::Matrix>& grads) {
  require(grads.size() == params_.size(), "Adam::step: gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i].array() + (1.0 - beta2_) * grads[i].array().square();
    ad::Matrix mhat = m_[i] / bc1;
    ad::Matrix vhat = v_[i] / bc2;
    params_[i]->value.array() -=
        lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

std::vector<ad::Matrix> Adam::state() const {
  std::vector<ad::Matrix> s = m_;
  s.insert(s.end(), v_.begin(), v_.end());
  return s;
}

void Adam::restore(const std::vector<ad::Matrix>& state, long step_count) {
  require(state.size() == 2 * params_.size(), "Adam::restore: bad state size");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i] = state[i];
    v_[i] = state[params_.size() + i];
  }
  t_ = step_count;
}

SgdMomentum::SgdMomentum(std::vector<ad::Var> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
  for (const auto& p : params_) {
    velocity_.push_back(ad::Matrix::Zero(p->rows(), p->cols()));
  }
}

void SgdMomentum::step(const std::vector<ad::Matrix>& grads, double lr) {
  require(grads.size() == params_.size(),
          "SgdMomentum::step: gradient count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    velocity_[i] = momentum_ * velocity_[i] + grads[i];
    params_[i]->value -= lr * (grads[i] + momentum_ * velocity_[i]);
  }
}

void SgdMomentum::restore(const std::vector<ad::Matrix>& state) {
  require(state.size() == params_.size(), "SgdMomentum::restore: bad state size");
  velocity_ = state;
}

}  // namespace mpssl
