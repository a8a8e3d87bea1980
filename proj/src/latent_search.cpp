#include "mpssl/latent_search.hpp"

#include <cmath>

#include "mpssl/common.hpp"
#include "mpssl/rng.hpp"

namespace mpssl {

namespace {

std::uint64_t hash_var(const ad::Var& v, std::uint64_t h) {
  return fnv1a64_bytes(v->value.data(),
                 sizeof(double) * static_cast<std::size_t>(v->value.size()), h);
}

}  // namespace

std::vector<ad::Var> MapperParams::params() const {
  if (cfg.conditional) return {emb, w1, b1, w2, b2, w3, b3};
  return {w1, b1, w2, b2, w3, b3};
}

std::uint64_t MapperParams::checksum() const {
  std::uint64_t h = fnv1a64("mapper");
  for (const auto& p : params()) h = hash_var(p, h);
  return h;
}

MapperParams make_mapper(const MapperConfig& cfg) {
  require_cfg(cfg.latent_dim >= 1, "mapper: latent_dim must be >= 1");
  require_cfg(cfg.num_classes >= 1, "mapper: num_classes must be >= 1");
  require_cfg(cfg.embed_dim >= 1, "mapper: embed_dim must be >= 1");
  const int dz = cfg.latent_dim;
  int hidden = cfg.hidden > 0 ? cfg.hidden : std::max(2 * dz, 16);
  require_cfg(hidden >= 2 * dz,
              "mapper: hidden width must be >= 2 * latent_dim for the identity "
              "initialization");

  MapperConfig c = cfg;
  c.hidden = hidden;
  const int in_w = c.conditional ? dz + c.embed_dim : dz;

  Rng rng(stream_seed(cfg.seed, "mapper_init"));
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(in_w, hidden);
  // Identity pair trick: h = [lrelu(z), lrelu(-z), ...] and the output layer
  // recombines (lrelu^2(z) - lrelu^2(-z)) / (1 + leak^2) = z.
  w1.block(0, 0, dz, dz) = Eigen::MatrixXd::Identity(dz, dz);
  w1.block(0, dz, dz, dz) = -Eigen::MatrixXd::Identity(dz, dz);
  // Spare hidden units and the label path start as small noise so they are
  // trainable without perturbing the identity (EMB starts at zero).
  if (hidden > 2 * dz)
    w1.block(0, 2 * dz, dz, hidden - 2 * dz) =
        cfg.init_noise * rng.normal_matrix(dz, hidden - 2 * dz);
  if (c.conditional)
    w1.block(dz, 0, c.embed_dim, hidden) =
        cfg.init_noise * rng.normal_matrix(c.embed_dim, hidden);

  Eigen::MatrixXd w3 = Eigen::MatrixXd::Zero(hidden, dz);
  const double gain = 1.0 / (1.0 + c.leak * c.leak);
  w3.block(0, 0, dz, dz) = gain * Eigen::MatrixXd::Identity(dz, dz);
  w3.block(dz, 0, dz, dz) = -gain * Eigen::MatrixXd::Identity(dz, dz);

  MapperParams m;
  m.cfg = c;
  m.emb = ad::leaf(Eigen::MatrixXd::Zero(c.num_classes, c.embed_dim));
  m.w1 = ad::leaf(std::move(w1));
  m.b1 = ad::leaf(Eigen::MatrixXd::Zero(1, hidden));
  m.w2 = ad::leaf(Eigen::MatrixXd::Identity(hidden, hidden));
  m.b2 = ad::leaf(Eigen::MatrixXd::Zero(1, hidden));
  m.w3 = ad::leaf(std::move(w3));
  m.b3 = ad::leaf(Eigen::MatrixXd::Zero(1, dz));
  return m;
}

ad::Var map_latent(const MapperParams& m, const ad::Var& z,
                   const std::vector<int>& y) {
  using namespace ad;
  require(z->cols() == m.cfg.latent_dim, "map_latent: latent dimension mismatch");
  const int b = z->rows();

  Var in = z;
  if (m.cfg.conditional) {
    require(static_cast<int>(y.size()) == b,
            "map_latent: one label per latent row required");
    for (int yi : y)
      require(yi >= 0 && yi < m.cfg.num_classes, "map_latent: label out of range");
    in = concat_cols(z, take_rows(m.emb, y));
  }
  auto h1 = leaky_relu(add(matmul(in, m.w1), broadcast_rows(m.b1, b)), m.cfg.leak);
  auto h2 = leaky_relu(add(matmul(h1, m.w2), broadcast_rows(m.b2, b)), m.cfg.leak);
  return add(matmul(h2, m.w3), broadcast_rows(m.b3, b));
}

std::uint64_t ConverterParams::checksum() const {
  return hash_var(logits, fnv1a64("converter"));
}

ConverterParams make_converter(const ConverterConfig& cfg) {
  require_cfg(cfg.num_classes >= 1, "converter: num_classes must be >= 1");
  require_cfg(cfg.num_foundation_classes >= 2,
              "converter: num_foundation_classes must be >= 2");
  require_cfg(cfg.tau > 0.0, "converter: tau must be positive");
  ConverterParams c;
  c.cfg = cfg;
  c.logits = ad::leaf(
      Eigen::MatrixXd::Zero(cfg.num_classes, cfg.num_foundation_classes));
  return c;
}

ad::Var convert_label_soft(const ConverterParams& c, const std::vector<int>& y,
                           std::uint64_t noise_seed) {
  using namespace ad;
  require(c.cfg.tau > 0.0, "convert_label: tau must be positive");
  for (int yi : y)
    require(yi >= 0 && yi < c.cfg.num_classes, "convert_label: label out of range");

  auto rows = take_rows(c.logits, y);
  if (c.cfg.mode == ConverterMode::soft_embedding) {
    return softmax_rows(rows);  // g = 0, tau = 1
  }
  const int b = static_cast<int>(y.size());
  const int yf = c.cfg.num_foundation_classes;
  Eigen::MatrixXd g(b, yf);
  for (int i = 0; i < b; ++i) {
    Rng row_rng(stream_seed(noise_seed, "gumbel_row", static_cast<std::uint64_t>(i)));
    for (int j = 0; j < yf; ++j) g(i, j) = row_rng.gumbel();
  }
  auto perturbed = scale(add(rows, constant(std::move(g))), 1.0 / c.cfg.tau);
  return softmax_rows(perturbed);
}

ad::Var convert_label_hard(const ConverterParams& c, const std::vector<int>& y,
                           std::uint64_t noise_seed) {
  using namespace ad;
  auto soft = convert_label_soft(c, y, noise_seed);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(soft->rows(), soft->cols());
  for (int i = 0; i < soft->rows(); ++i) {
    int arg = 0;
    double best = soft->value(i, 0);
    for (int j = 1; j < soft->cols(); ++j) {
      if (soft->value(i, j) > best) {  // strict: ties break to lowest index
        best = soft->value(i, j);
        arg = j;
      }
    }
    onehot(i, arg) = 1.0;
  }
  // Straight-through: forward value is the one-hot, backward is the soft path.
  return add(constant(onehot - soft->value), soft);
}

ad::Var convert_label(const ConverterParams& c, const std::vector<int>& y,
                      std::uint64_t noise_seed) {
  if (c.cfg.mode == ConverterMode::hard_gumbel)
    return convert_label_hard(c, y, noise_seed);
  return convert_label_soft(c, y, noise_seed);
}

ad::Var synthesize_unlabeled(const MapperParams& m, const ConverterParams& c,
                             const FoundationGenerator& g, const ad::Var& z,
                             const std::vector<int>& y, std::uint64_t noise_seed) {
  auto zhat = map_latent(m, z, y);
  auto label = convert_label(c, y, noise_seed);
  return generate_batch_soft(g, zhat, label);
}

}  // namespace mpssl
