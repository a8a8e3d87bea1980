#include "mpssl/classifier.hpp"

#include <cmath>

#include "mpssl/common.hpp"
#include "mpssl/rng.hpp"

namespace mpssl {

ClassifierParams ClassifierParams::with(const std::vector<ad::Var>& theta) const {
  require(theta.size() == 6, "ClassifierParams::with: expected 6 tensors");
  ClassifierParams p;
  p.cfg = cfg;
  p.w1 = theta[0];
  p.b1 = theta[1];
  p.w2 = theta[2];
  p.b2 = theta[3];
  p.wh = theta[4];
  p.bh = theta[5];
  return p;
}

std::vector<ad::Matrix> ClassifierParams::values() const {
  std::vector<ad::Matrix> v;
  for (const auto& p : all()) v.push_back(p->value);
  return v;
}

void ClassifierParams::set_values(const std::vector<ad::Matrix>& v) {
  auto ps = all();
  require(v.size() == ps.size(), "ClassifierParams::set_values: size mismatch");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    require(ps[i]->rows() == v[i].rows() && ps[i]->cols() == v[i].cols(),
            "ClassifierParams::set_values: shape mismatch");
    ps[i]->value = v[i];
  }
}

std::uint64_t ClassifierParams::checksum() const {
  std::uint64_t h = fnv1a64("classifier");
  for (const auto& p : all())
    h = fnv1a64_bytes(p->value.data(),
                sizeof(double) * static_cast<std::size_t>(p->value.size()), h);
  return h;
}

ClassifierParams make_classifier(const ClassifierConfig& cfg) {
  require_cfg(cfg.input_dim >= 1, "classifier: input_dim must be >= 1");
  require_cfg(cfg.hidden1 >= 2 && cfg.hidden2 >= 2,
              "classifier: feature widths must be >= 2");
  require_cfg(cfg.num_classes >= 2, "classifier: num_classes must be >= 2");

  Rng rng(stream_seed(cfg.seed, "classifier_init"));
  auto he = [&](int in, int out) {
    return ad::leaf(rng.normal_matrix(in, out) * std::sqrt(2.0 / in));
  };
  ClassifierParams p;
  p.cfg = cfg;
  p.w1 = he(cfg.input_dim, cfg.hidden1);
  p.b1 = ad::leaf(Eigen::MatrixXd::Zero(1, cfg.hidden1));
  p.w2 = he(cfg.hidden1, cfg.hidden2);
  p.b2 = ad::leaf(Eigen::MatrixXd::Zero(1, cfg.hidden2));
  p.wh = he(cfg.hidden2, cfg.num_classes);
  p.bh = ad::leaf(Eigen::MatrixXd::Zero(1, cfg.num_classes));
  return p;
}

ad::Var features(const ClassifierParams& p, const ad::Var& x) {
  using namespace ad;
  require(x->cols() == p.cfg.input_dim, "features: input dimension mismatch");
  const int b = x->rows();
  auto h1 = leaky_relu(add(matmul(x, p.w1), broadcast_rows(p.b1, b)), p.cfg.leak);
  return leaky_relu(add(matmul(h1, p.w2), broadcast_rows(p.b2, b)), p.cfg.leak);
}

ad::Var logits(const ClassifierParams& p, const ad::Var& x) {
  using namespace ad;
  auto f = features(p, x);
  return add(matmul(f, p.wh), broadcast_rows(p.bh, x->rows()));
}

Eigen::MatrixXd logits_value(const ClassifierParams& p, const Eigen::MatrixXd& x) {
  return logits(p, ad::constant(x))->value;
}

Eigen::MatrixXd proba_value(const ClassifierParams& p, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd lg = logits_value(p, x);
  Eigen::MatrixXd out(lg.rows(), lg.cols());
  for (int i = 0; i < lg.rows(); ++i) {
    const double mx = lg.row(i).maxCoeff();
    Eigen::ArrayXd e = (lg.row(i).array() - mx).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

EvalResult evaluate(const ClassifierParams& p, const Dataset& data) {
  require(data.size() > 0, "evaluate: empty dataset");
  Eigen::MatrixXd lg = logits_value(p, data.x);
  int correct = 0;
  double loss = 0.0;
  for (int i = 0; i < lg.rows(); ++i) {
    const double mx = lg.row(i).maxCoeff();
    const double lse = mx + std::log((lg.row(i).array() - mx).exp().sum());
    loss += lse - lg(i, data.y[static_cast<std::size_t>(i)]);
    int arg = 0;
    double best = lg(i, 0);
    for (int j = 1; j < lg.cols(); ++j) {
      if (lg(i, j) > best) {
        best = lg(i, j);
        arg = j;
      }
    }
    if (arg == data.y[static_cast<std::size_t>(i)]) ++correct;
  }
  return {static_cast<double>(correct) / lg.rows(), loss / lg.rows()};
}

}  // namespace mpssl
