#include "mpssl/losses.hpp"

#include <cmath>

#include "mpssl/common.hpp"
#include "mpssl/rng.hpp"

namespace mpssl {

AugmentationPolicy default_weak_policy() {
  return {AugKind::weak, 0.1, 0.0, 0.0};
}

AugmentationPolicy default_strong_policy() {
  return {AugKind::strong, 0.3, 0.15, 0.2};
}

ad::Var augment(const ad::Var& x, const AugmentationPolicy& policy,
                std::uint64_t seed) {
  using namespace ad;
  require(policy.noise_sigma >= 0.0 && policy.jitter >= 0.0,
          "augment: negative perturbation scale");
  require(policy.mask_prob >= 0.0 && policy.mask_prob <= 1.0,
          "augment: mask_prob must be in [0,1]");
  const bool linear = policy.mask_prob > 0.0 || policy.jitter > 0.0;
  if (!linear && policy.noise_sigma == 0.0) return x;  // identity policy

  Rng rng(stream_seed(seed, "augment"));
  const int r = x->rows(), c = x->cols();
  Var out = x;
  if (linear) {
    Eigen::MatrixXd lin(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) {
        const double keep = rng.uniform() < policy.mask_prob ? 0.0 : 1.0;
        const double jit =
            policy.jitter > 0.0 ? rng.uniform(1.0 - policy.jitter, 1.0 + policy.jitter)
                                : 1.0;
        lin(i, j) = keep * jit;
      }
    }
    out = mul(out, constant(std::move(lin)));
  }
  if (policy.noise_sigma > 0.0) {
    out = add(out, constant(policy.noise_sigma * rng.normal_matrix(r, c)));
  }
  return out;
}

ad::Var supervised_loss(const ClassifierParams& theta, const ad::Var& x,
                        const std::vector<int>& y) {
  require(x->rows() > 0, "supervised_loss: empty batch");
  return ad::cross_entropy_mean(logits(theta, x), y);
}

namespace {

ad::Var row_norms(const ad::Var& f) {
  return ad::vsqrt(ad::rowsum(ad::mul(f, f)));
}

ad::Var elementwise_distance_mean(const ad::Var& diff, DistanceKind kind,
                                  double delta) {
  using namespace ad;
  switch (kind) {
    case DistanceKind::l1:
      return mean(vabs(diff));
    case DistanceKind::l2:
      return mean(mul(diff, diff));
    case DistanceKind::smooth_l1: {
      require(delta > 0.0, "scr_loss: smooth L1 delta must be positive");
      Eigen::MatrixXd inside =
          (diff->value.array().abs() <= delta).cast<double>();
      auto m = constant(inside);
      auto m_out = constant(Eigen::MatrixXd(
          (1.0 - inside.array()).matrix()));
      auto quad = scale(mul(diff, diff), 0.5 / delta);
      auto lin = add_scalar(vabs(diff), -0.5 * delta);
      return mean(add(mul(m, quad), mul(m_out, lin)));
    }
    default:
      require(false, "elementwise_distance_mean: cosine handled separately");
      return diff;
  }
}

}  // namespace

ad::Var feature_consistency(const ad::Var& fw, const ad::Var& fs,
                            DistanceKind distance, double smooth_l1_delta,
                            double cosine_eps) {
  using namespace ad;
  require(fw->rows() == fs->rows() && fw->cols() == fs->cols(),
          "feature_consistency: feature batch shape mismatch");
  if (distance == DistanceKind::cosine) {
    auto num = rowsum(mul(fw, fs));
    auto den = max_scalar(mul(row_norms(fw), row_norms(fs)), cosine_eps);
    auto cos = div(num, den);
    return mean(sub(constant(Eigen::MatrixXd::Ones(cos->rows(), 1)), cos));
  }
  return elementwise_distance_mean(sub(fw, fs), distance, smooth_l1_delta);
}

ad::Var scr_loss(const ClassifierParams& theta, const ad::Var& synthetic,
                 const ScrConfig& cfg, std::uint64_t seed) {
  using namespace ad;
  require(synthetic->rows() > 0, "scr_loss: empty batch");
  auto xw = augment(synthetic, cfg.weak, stream_seed(seed, "scr_weak"));
  auto xs = augment(synthetic, cfg.strong, stream_seed(seed, "scr_strong"));
  return feature_consistency(features(theta, xw), features(theta, xs),
                             cfg.distance, cfg.smooth_l1_delta, cfg.cosine_eps);
}

namespace {

double median_pairwise_distance(const Eigen::MatrixXd& f) {
  std::vector<double> d;
  for (int i = 0; i < f.rows(); ++i)
    for (int j = i + 1; j < f.rows(); ++j)
      d.push_back((f.row(i) - f.row(j)).norm());
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  double med = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  return med > 1e-12 ? med : 1.0;
}

// Pairwise squared distances as a graph op composition:
// D_ij = |a_i|^2 + |b_j|^2 - 2 a_i . b_j
ad::Var pairwise_sq_dists(const ad::Var& a, const ad::Var& b) {
  using namespace ad;
  auto ra = rowsum(mul(a, a));                          // m x 1
  auto rb = rowsum(mul(b, b));                          // n x 1
  auto cross = matmul_nt(a, b);                         // m x n
  auto d = sub(add(broadcast_cols(ra, b->rows()),
                   broadcast_rows(transpose(rb), a->rows())),
               scale(cross, 2.0));
  // Clamp tiny negatives from cancellation so the kernel stays <= 1.
  return max_scalar(d, 0.0);
}

ad::Var gaussian_kernel(const ad::Var& sq_dists, double bandwidth) {
  return ad::vexp(ad::scale(sq_dists, -1.0 / (2.0 * bandwidth * bandwidth)));
}

double offdiag_weight(int n) { return 1.0 / (static_cast<double>(n) * (n - 1)); }

}  // namespace

ad::Var gap_loss(const ClassifierParams& theta, const ad::Var& real_batch,
                 const ad::Var& synthetic_batch, const GapConfig& cfg) {
  require(real_batch->rows() > 0 && synthetic_batch->rows() > 0,
          "gap_loss: empty batch");
  return gap_on_features(features(theta, real_batch),
                         features(theta, synthetic_batch), cfg);
}

ad::Var gap_on_features(const ad::Var& fr, const ad::Var& fs,
                        const GapConfig& cfg) {
  using namespace ad;
  if (cfg.kind == GapKind::mse) {
    require(fr->rows() == fs->rows(),
            "gap_loss(mse): batches must be index-aligned (got " +
                std::to_string(fr->rows()) + " vs " + std::to_string(fs->rows()) +
                " rows)");
    auto d = sub(fr, fs);
    return scale(sum(mul(d, d)), 1.0 / fr->rows());
  }

  // MMD^2 with a Gaussian kernel on features. Unbiased: self-pairs are
  // excluded everywhere; for equal batch sizes the cross term is the paired
  // U-statistic, which is exactly zero for identical batches.
  const int m = fr->rows();
  const int n = fs->rows();
  require(m >= 2 && n >= 2, "gap_loss(mmd): needs at least 2 samples per side");
  double h = cfg.mmd_bandwidth;
  if (h <= 0.0) h = median_pairwise_distance(fr->value);

  auto kxx = gaussian_kernel(pairwise_sq_dists(fr, fr), h);
  auto kyy = gaussian_kernel(pairwise_sq_dists(fs, fs), h);
  auto kxy = gaussian_kernel(pairwise_sq_dists(fr, fs), h);

  Eigen::MatrixXd offm = Eigen::MatrixXd::Ones(m, m) -
                         Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd offn = Eigen::MatrixXd::Ones(n, n) -
                         Eigen::MatrixXd::Identity(n, n);

  auto term_x = scale(sum(mul(kxx, constant(offm))), offdiag_weight(m));
  auto term_y = scale(sum(mul(kyy, constant(offn))), offdiag_weight(n));
  Var term_xy;
  if (m == n) {
    term_xy = scale(sum(mul(kxy, constant(offm))), 2.0 * offdiag_weight(m));
  } else {
    term_xy = scale(sum(kxy), 2.0 / (static_cast<double>(m) * n));
  }
  return sub(add(term_x, term_y), term_xy);
}

FixmatchResult fixmatch_like_loss(const ClassifierParams& theta,
                                  const ad::Var& unlabeled, double threshold,
                                  const AugmentationPolicy& weak,
                                  const AugmentationPolicy& strong,
                                  std::uint64_t seed) {
  using namespace ad;
  // A zero threshold means every sample passes the gate.
  require(threshold >= 0.0 && threshold <= 1.0,
          "fixmatch_like_loss: threshold must be in [0,1]");
  require(unlabeled->rows() > 0, "fixmatch_like_loss: empty batch");

  auto xw = augment(unlabeled, weak, stream_seed(seed, "fm_weak"));
  auto xs = augment(unlabeled, strong, stream_seed(seed, "fm_strong"));

  // Pseudo-labels from the weak view, no gradient.
  Eigen::MatrixXd weak_logits = logits(theta, detach(xw))->value;
  const int b = static_cast<int>(weak_logits.rows());
  std::vector<int> pseudo(static_cast<std::size_t>(b));
  Eigen::VectorXd pass = Eigen::VectorXd::Zero(b);
  double conf_sum = 0.0;
  int n_pass = 0;
  for (int i = 0; i < b; ++i) {
    const double mx = weak_logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (weak_logits.row(i).array() - mx).exp();
    Eigen::ArrayXd p = e / e.sum();
    int arg = 0;
    double best = p(0);
    for (int j = 1; j < p.size(); ++j) {
      if (p(j) > best) {
        best = p(j);
        arg = j;
      }
    }
    pseudo[static_cast<std::size_t>(i)] = arg;
    conf_sum += best;
    if (best >= threshold) {
      pass(i) = 1.0;
      ++n_pass;
    }
  }

  FixmatchResult res;
  res.acceptance_rate = static_cast<double>(n_pass) / b;
  res.mean_max_confidence = conf_sum / b;
  if (n_pass == 0) {
    res.loss = scalar(0.0);
    return res;
  }
  auto per_sample = neg(gather_cols(log_softmax_rows(logits(theta, xs)), pseudo));
  res.loss = scale(sum(mul(per_sample, constant(pass))), 1.0 / n_pass);
  return res;
}

ThresholdState adaptive_threshold_update(const ThresholdState& state,
                                         double batch_mean_confidence,
                                         double momentum) {
  require(momentum >= 0.0 && momentum < 1.0,
          "adaptive_threshold_update: momentum must be in [0,1)");
  return {momentum * state.average + (1.0 - momentum) * batch_mean_confidence};
}

}  // namespace mpssl
