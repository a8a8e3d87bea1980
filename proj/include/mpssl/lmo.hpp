#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mpssl/classifier.hpp"
#include "mpssl/latent_search.hpp"
#include "mpssl/losses.hpp"
#include "mpssl/optim.hpp"

namespace mpssl {

struct InnerStepConfig {
  double eta = 0.01;   // inner gradient step size
  double lambda = 0.5; // unsupervised weight inside the inner objective
  // Ablation variant: replace SCR with the pseudo-label loss that updates the
  // whole model (the "FreeMatch-style" row of the distance ablation).
  bool use_fixmatch_unsup = false;
  double fixmatch_threshold = 0.95;
};

enum class MetaMode { second_order, first_order };
enum class GapVariant { feature_pairwise, output_batch_mean };

struct OuterStepConfig {
  double outer_lr = 1e-4;  // Adam step size for (phi, xi)
  double lambda_gap = 10.0;
  double val_weight = 1.0;  // 0 disables the validation term (ablation)
  MetaMode meta_mode = MetaMode::second_order;
  GapVariant gap_variant = GapVariant::feature_pairwise;
  GapConfig gap;
  // Global-norm clip on the meta-gradient. One-step meta-objectives can
  // reward unbounded synthetic magnitudes; the clip keeps long runs stable.
  // <= 0 disables.
  double grad_clip = 0.0;
};

struct MetaGradientReport {
  double outer_loss = 0.0;
  double inner_loss = 0.0;
  double gap_loss_value = 0.0;
  double grad_norm_phi = 0.0;
  double grad_norm_xi = 0.0;
  std::optional<double> fd_discrepancy;  // filled by diagnostics only
};

// All stochastic inputs of one LMO iteration, materialized up front so the
// step is a deterministic function of (phi, xi, theta, batch).
struct LmoBatch {
  Eigen::MatrixXd labeled_x;
  std::vector<int> labeled_y;
  Eigen::MatrixXd val_x;
  std::vector<int> val_y;
  Eigen::MatrixXd z;  // B x d_z
  std::uint64_t noise_seed = 0;  // converter Gumbel noise + SCR augmentations
};

// theta' = theta - eta * grad_theta(supervised + lambda * SCR). The returned
// parameters are graph expressions; in second-order mode they keep the
// computation history through (phi, xi), in first-order mode the gradient is
// detached. `synthetic` must retain its dependence on (phi, xi).
ClassifierParams inner_step(const ClassifierParams& theta, const ad::Var& x,
                            const std::vector<int>& y, const ad::Var& synthetic,
                            const InnerStepConfig& cfg, const ScrConfig& scr,
                            std::uint64_t noise_seed, bool build_graph,
                            ad::Var* inner_loss_out = nullptr);

// L_val(theta') * val_weight + lambda_gap * L_gap(phi, xi). The gap term uses
// the current theta (snapshot), not theta'.
ad::Var outer_loss(const ClassifierParams& theta_prime,
                   const Eigen::MatrixXd& val_x, const std::vector<int>& val_y,
                   const ClassifierParams& theta_snapshot, const ad::Var& real_x,
                   const ad::Var& synthetic, const OuterStepConfig& cfg,
                   ad::Var* gap_out = nullptr);

// One LMO iteration (Algorithm lines: synthesize, inner step, outer update).
// Updates (phi, xi) through `opt` and never mutates theta or the generator.
MetaGradientReport lmo_step(MapperParams& phi, ConverterParams& xi, Adam& opt,
                            const ClassifierParams& theta,
                            const FoundationGenerator& gen, const LmoBatch& batch,
                            const InnerStepConfig& inner_cfg,
                            const OuterStepConfig& outer_cfg,
                            const ScrConfig& scr_cfg);

// Same pipeline without the parameter update: outer loss as a pure function
// of current (phi, xi). Used by finite-difference oracles.
double lmo_outer_loss_value(const MapperParams& phi, const ConverterParams& xi,
                            const ClassifierParams& theta,
                            const FoundationGenerator& gen, const LmoBatch& batch,
                            const InnerStepConfig& inner_cfg,
                            const OuterStepConfig& outer_cfg,
                            const ScrConfig& scr_cfg);

}  // namespace mpssl
