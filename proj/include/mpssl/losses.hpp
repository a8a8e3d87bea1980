#pragma once

#include <cstdint>
#include <vector>

#include "mpssl/autodiff.hpp"
#include "mpssl/classifier.hpp"

namespace mpssl {

// ---------------------------------------------------------------------------
// Augmentations for vector data: additive noise (weak); noise + coordinate
// masking + multiplicative jitter (strong). Affine in x, hence differentiable.
// ---------------------------------------------------------------------------

enum class AugKind { weak, strong };

struct AugmentationPolicy {
  AugKind kind = AugKind::weak;
  double noise_sigma = 0.1;
  double mask_prob = 0.0;
  double jitter = 0.0;  // coordinates scaled by U(1 - jitter, 1 + jitter)
};

AugmentationPolicy default_weak_policy();
AugmentationPolicy default_strong_policy();

ad::Var augment(const ad::Var& x, const AugmentationPolicy& policy,
                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class DistanceKind { cosine, l1, l2, smooth_l1 };
enum class GapKind { mse, mmd };

struct LossWeights {
  double lambda_u = 0.5;    // unsupervised weight (grid-searched in the paper)
  double lambda_gap = 10.0; // gap weight
};

// Mean cross-entropy of f_theta on a labeled batch.
ad::Var supervised_loss(const ClassifierParams& theta, const ad::Var& x,
                        const std::vector<int>& y);

struct ScrConfig {
  AugmentationPolicy weak = default_weak_policy();
  AugmentationPolicy strong = default_strong_policy();
  DistanceKind distance = DistanceKind::cosine;
  double smooth_l1_delta = 1.0;
  double cosine_eps = 1e-12;
};

// Consistency between extractor features of two augmented views of the
// synthetic batch. Touches psi only; the head never appears in the graph.
ad::Var scr_loss(const ClassifierParams& theta, const ad::Var& synthetic,
                 const ScrConfig& cfg, std::uint64_t seed);

// The distance reduction of scr_loss on two feature batches (one row per
// sample): cosine is mean(1 - cos), the others mean elementwise distances.
ad::Var feature_consistency(const ad::Var& fw, const ad::Var& fs,
                            DistanceKind distance, double smooth_l1_delta = 1.0,
                            double cosine_eps = 1e-12);

struct GapConfig {
  GapKind kind = GapKind::mse;
  double mmd_bandwidth = 0.0;  // <= 0: median pairwise distance heuristic
};

// mse: index-aligned mean squared feature distance (batches must pair up).
// mmd: squared MMD of the two feature clouds, Gaussian kernel.
ad::Var gap_loss(const ClassifierParams& theta, const ad::Var& real_batch,
                 const ad::Var& synthetic_batch, const GapConfig& cfg);

// Same reductions on pre-computed feature batches.
ad::Var gap_on_features(const ad::Var& fr, const ad::Var& fs,
                        const GapConfig& cfg);

struct FixmatchResult {
  ad::Var loss;
  double acceptance_rate = 0.0;       // fraction of samples past the gate
  double mean_max_confidence = 0.0;   // weak-view confidence (EMA input)
};

// Pseudo-label + confidence threshold + strong-view cross-entropy.
FixmatchResult fixmatch_like_loss(const ClassifierParams& theta,
                                  const ad::Var& unlabeled, double threshold,
                                  const AugmentationPolicy& weak,
                                  const AugmentationPolicy& strong,
                                  std::uint64_t seed);

struct ThresholdState {
  double average;  // EMA of batch mean max-confidence; also the threshold
};

ThresholdState adaptive_threshold_update(const ThresholdState& state,
                                         double batch_mean_confidence,
                                         double momentum);

}  // namespace mpssl
