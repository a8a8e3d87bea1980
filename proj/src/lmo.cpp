#include "mpssl/lmo.hpp"

#include <cmath>

#include "mpssl/common.hpp"
#include "mpssl/rng.hpp"

namespace mpssl {

ClassifierParams inner_step(const ClassifierParams& theta, const ad::Var& x,
                            const std::vector<int>& y, const ad::Var& synthetic,
                            const InnerStepConfig& cfg, const ScrConfig& scr,
                            std::uint64_t noise_seed, bool build_graph,
                            ad::Var* inner_loss_out) {
  using namespace ad;
  require(cfg.eta >= 0.0, "inner_step: eta must be non-negative");
  require(x->rows() > 0, "inner_step: empty labeled batch");

  Var loss = supervised_loss(theta, x, y);
  if (cfg.lambda != 0.0) {
    require(synthetic->rows() > 0, "inner_step: empty synthetic batch");
    Var unsup;
    if (cfg.use_fixmatch_unsup) {
      unsup = fixmatch_like_loss(theta, synthetic, cfg.fixmatch_threshold,
                                 scr.weak, scr.strong, noise_seed)
                  .loss;
    } else {
      unsup = scr_loss(theta, synthetic, scr, noise_seed);
    }
    loss = add(loss, scale(unsup, cfg.lambda));
  }
  if (inner_loss_out) *inner_loss_out = loss;

  auto params = theta.all();
  auto grads = gradient_vars(loss, params);
  std::vector<Var> updated;
  updated.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!all_finite(grads[i]->value)) {
      throw RunError("inner_step: non-finite gradient in theta tensor " +
                     std::to_string(i));
    }
    Var g = build_graph ? grads[i] : detach(grads[i]);
    updated.push_back(sub(params[i], scale(g, cfg.eta)));
  }
  return theta.with(updated);
}

namespace {

ad::Var batch_mean_output_gap(const ClassifierParams& theta, const ad::Var& real_x,
                              const ad::Var& synthetic) {
  using namespace ad;
  auto p_real = softmax_rows(logits(theta, real_x));
  auto p_syn = softmax_rows(logits(theta, synthetic));
  auto d = sub(scale(colsum(p_real), 1.0 / real_x->rows()),
               scale(colsum(p_syn), 1.0 / synthetic->rows()));
  return sum(mul(d, d));
}

double frob_norm_sq(const std::vector<ad::Matrix>& ms, std::size_t lo,
                    std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += ms[i].squaredNorm();
  return s;
}

}  // namespace

ad::Var outer_loss(const ClassifierParams& theta_prime,
                   const Eigen::MatrixXd& val_x, const std::vector<int>& val_y,
                   const ClassifierParams& theta_snapshot, const ad::Var& real_x,
                   const ad::Var& synthetic, const OuterStepConfig& cfg,
                   ad::Var* gap_out) {
  using namespace ad;
  require(val_x.rows() > 0, "outer_loss: empty validation batch");
  require(cfg.lambda_gap >= 0.0, "outer_loss: lambda_gap must be non-negative");

  Var total = scalar(0.0);
  if (cfg.val_weight != 0.0) {
    auto val = supervised_loss(theta_prime, constant(val_x), val_y);
    total = add(total, scale(val, cfg.val_weight));
  }
  Var gap;
  if (cfg.gap_variant == GapVariant::feature_pairwise) {
    gap = gap_loss(theta_snapshot, real_x, synthetic, cfg.gap);
  } else {
    gap = batch_mean_output_gap(theta_snapshot, real_x, synthetic);
  }
  if (gap_out) *gap_out = gap;
  if (cfg.lambda_gap != 0.0) {
    total = add(total, scale(gap, cfg.lambda_gap));
  }
  return total;
}

namespace {

// Shared forward pipeline for the step and the FD oracle.
ad::Var build_outer(const MapperParams& phi, const ConverterParams& xi,
                    const ClassifierParams& theta, const FoundationGenerator& gen,
                    const LmoBatch& batch, const InnerStepConfig& inner_cfg,
                    const OuterStepConfig& outer_cfg, const ScrConfig& scr_cfg,
                    ad::Var* inner_loss_out, ad::Var* gap_out) {
  using namespace ad;
  auto z = constant(batch.z);
  auto synthetic =
      synthesize_unlabeled(phi, xi, gen, z, batch.labeled_y, batch.noise_seed);
  auto theta_prime =
      inner_step(theta, constant(batch.labeled_x), batch.labeled_y, synthetic,
                 inner_cfg, scr_cfg, batch.noise_seed,
                 outer_cfg.meta_mode == MetaMode::second_order, inner_loss_out);
  return outer_loss(theta_prime, batch.val_x, batch.val_y, theta,
                    constant(batch.labeled_x), synthetic, outer_cfg, gap_out);
}

}  // namespace

MetaGradientReport lmo_step(MapperParams& phi, ConverterParams& xi, Adam& opt,
                            const ClassifierParams& theta,
                            const FoundationGenerator& gen, const LmoBatch& batch,
                            const InnerStepConfig& inner_cfg,
                            const OuterStepConfig& outer_cfg,
                            const ScrConfig& scr_cfg) {
  using namespace ad;
  ad::Var inner_v, gap_v;
  auto outer = build_outer(phi, xi, theta, gen, batch, inner_cfg, outer_cfg,
                           scr_cfg, &inner_v, &gap_v);

  auto phi_params = phi.params();
  auto xi_params = xi.params();
  std::vector<Var> all = phi_params;
  all.insert(all.end(), xi_params.begin(), xi_params.end());
  require(opt.params().size() == all.size(),
          "lmo_step: optimizer bound to a different parameter set");

  auto grads = gradients(outer, all);

  MetaGradientReport report;
  report.outer_loss = outer->scalar_value();
  report.inner_loss = inner_v ? inner_v->scalar_value() : 0.0;
  report.gap_loss_value = gap_v ? gap_v->scalar_value() : 0.0;
  report.grad_norm_phi = std::sqrt(frob_norm_sq(grads, 0, phi_params.size()));
  report.grad_norm_xi =
      std::sqrt(frob_norm_sq(grads, phi_params.size(), all.size()));
  if (!std::isfinite(report.grad_norm_phi) ||
      !std::isfinite(report.grad_norm_xi)) {
    throw RunError("lmo_step: non-finite meta-gradient (|phi| = " +
                   std::to_string(report.grad_norm_phi) + ", |xi| = " +
                   std::to_string(report.grad_norm_xi) + ")");
  }
  if (outer_cfg.grad_clip > 0.0) {
    const double total = std::sqrt(report.grad_norm_phi * report.grad_norm_phi +
                                   report.grad_norm_xi * report.grad_norm_xi);
    if (total > outer_cfg.grad_clip) {
      const double s = outer_cfg.grad_clip / total;
      for (auto& g : grads) g *= s;
    }
  }
  opt.step(grads);
  return report;
}

double lmo_outer_loss_value(const MapperParams& phi, const ConverterParams& xi,
                            const ClassifierParams& theta,
                            const FoundationGenerator& gen, const LmoBatch& batch,
                            const InnerStepConfig& inner_cfg,
                            const OuterStepConfig& outer_cfg,
                            const ScrConfig& scr_cfg) {
  auto outer = build_outer(phi, xi, theta, gen, batch, inner_cfg, outer_cfg,
                           scr_cfg, nullptr, nullptr);
  return outer->scalar_value();
}

}  // namespace mpssl
