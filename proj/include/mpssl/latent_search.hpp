#pragma once

#include <cstdint>
#include <vector>

#include "mpssl/autodiff.hpp"
#include "mpssl/foundation.hpp"

namespace mpssl {

// ---------------------------------------------------------------------------
// Conditional mapper M_phi: (z, y) -> z_hat through a three-layer perceptron
// over Concat(z, EMB(y)). Initialized to the exact identity on the z input
// (leaky-ReLU pairs cancel), so an untrained mapper reproduces naive sampling.
// ---------------------------------------------------------------------------

struct MapperConfig {
  int latent_dim = 4;
  int num_classes = 4;
  int embed_dim = 8;
  int hidden = 0;  // 0 -> max(2 * latent_dim, 16); must be >= 2 * latent_dim
  bool conditional = true;
  double leak = 0.01;
  double init_noise = 0.01;
  std::uint64_t seed = 1;
};

struct MapperParams {
  MapperConfig cfg;
  ad::Var emb;  // |Y| x d_Y, zero-initialized
  ad::Var w1, b1, w2, b2, w3, b3;

  std::vector<ad::Var> params() const;
  std::uint64_t checksum() const;
};

MapperParams make_mapper(const MapperConfig& cfg);

// z: B x d_z, one label per row. Unconditional mappers ignore y.
ad::Var map_latent(const MapperParams& m, const ad::Var& z,
                   const std::vector<int>& y);

// ---------------------------------------------------------------------------
// Label converter I_xi: target label -> distribution over foundation classes
// via Gumbel-softmax on a per-class logit row.
// ---------------------------------------------------------------------------

enum class ConverterMode { soft_embedding, soft_gumbel, hard_gumbel };

struct ConverterConfig {
  int num_classes = 4;
  int num_foundation_classes = 10;
  double tau = 1e-5;
  ConverterMode mode = ConverterMode::hard_gumbel;
};

struct ConverterParams {
  ConverterConfig cfg;
  ad::Var logits;  // |Y| x |Y_F|, zero-initialized (uniform distribution)

  std::vector<ad::Var> params() const { return {logits}; }
  std::uint64_t checksum() const;
};

ConverterParams make_converter(const ConverterConfig& cfg);

// Rows on the simplex; Gumbel noise is drawn per row from noise_seed.
// soft_embedding mode is the pure softmax of the logit row (no noise, tau=1).
ad::Var convert_label_soft(const ConverterParams& c, const std::vector<int>& y,
                           std::uint64_t noise_seed);

// One-hot forward at the argmax of the soft vector (ties -> lowest index);
// straight-through backward equal to the soft vector's gradient.
ad::Var convert_label_hard(const ConverterParams& c, const std::vector<int>& y,
                           std::uint64_t noise_seed);

// Dispatch on c.cfg.mode.
ad::Var convert_label(const ConverterParams& c, const std::vector<int>& y,
                      std::uint64_t noise_seed);

// x_hat_u = G_F(M_phi(z, y), I_xi(y)); differentiable w.r.t. phi and xi.
ad::Var synthesize_unlabeled(const MapperParams& m, const ConverterParams& c,
                             const FoundationGenerator& g, const ad::Var& z,
                             const std::vector<int>& y, std::uint64_t noise_seed);

}  // namespace mpssl
