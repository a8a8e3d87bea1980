#include "mpssl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "mpssl/checkpoint.hpp"
#include "mpssl/common.hpp"
#include "mpssl/rng.hpp"

namespace mpssl {

std::string method_name(Method m) {
  switch (m) {
    case Method::base: return "base";
    case Method::mpssl: return "mpssl";
    case Method::naive_gssl: return "naive_gssl";
    case Method::pssl: return "pssl";
    case Method::fixmatch_oracle: return "fixmatch_oracle";
    case Method::adaptive_oracle: return "adaptive_oracle";
    case Method::transfer_ssl: return "transfer_ssl";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::base, Method::mpssl, Method::naive_gssl, Method::pssl,
                   Method::fixmatch_oracle, Method::adaptive_oracle,
                   Method::transfer_ssl}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method tag: '" + name + "'");
}

bool method_uses_generator(Method m) {
  return m == Method::mpssl || m == Method::naive_gssl || m == Method::pssl;
}

bool method_uses_real_unlabeled(Method m) {
  return m == Method::fixmatch_oracle || m == Method::adaptive_oracle;
}

double learning_rate_at(double lr0, const std::vector<int>& milestones,
                        int epoch) {
  int k = 0;
  for (int ms : milestones)
    if (epoch >= ms) ++k;
  return lr0 * std::pow(0.1, k);
}

Eigen::VectorXd pssl_label(const FoundationClassifier& fclf,
                           const Eigen::VectorXd& x) {
  return fclf.predict_proba(x);
}

ClassifierParams classifier_from_run(const TrainedRun& run, bool best) {
  auto p = make_classifier(run.model_cfg);
  p.set_values(best ? run.best_theta : run.final_theta);
  return p;
}

namespace {

// Deterministic epoch-shuffled batch iterator over a dataset.
class Batcher {
 public:
  Batcher(int n, int batch, std::uint64_t seed, const char* stream)
      : n_(n), batch_(std::min(batch, n)), seed_(seed), stream_(stream) {
    require(n >= 1, "Batcher: empty dataset");
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
  }

  std::vector<int> next() {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(batch_));
    for (int i = 0; i < batch_; ++i) {
      if (pos_ == n_) reshuffle();
      idx.push_back(order_[static_cast<std::size_t>(pos_++)]);
    }
    return idx;
  }

  int batches_per_epoch() const { return (n_ + batch_ - 1) / batch_; }

 private:
  void reshuffle() {
    Rng rng(stream_seed(seed_, stream_, epoch_++));
    rng.shuffle(order_);
    pos_ = 0;
  }
  int n_, batch_;
  std::uint64_t seed_;
  const char* stream_;
  std::vector<int> order_;
  int pos_ = 0;
  std::uint64_t epoch_ = 0;
};

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<int>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<int>(i)) = x.row(idx[i]);
  return out;
}

std::vector<int> labels_of(const std::vector<int>& y, const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[i] = y[static_cast<std::size_t>(idx[i])];
  return out;
}

struct IterationStats {
  double loss = 0.0;
  double scr = 0.0;
  double gap = 0.0;
  double mg_phi = 0.0;
  double mg_xi = 0.0;
  double acceptance = 0.0;
};

}  // namespace

TrainedRun train_run(const TargetTask& task, const FoundationGenerator& gen,
                     const FoundationClassifier* fclf, const TrainerConfig& cfg) {
  using namespace ad;
  const auto t0 = std::chrono::steady_clock::now();
  const Method method = cfg.loop.method;
  const std::uint64_t seed = cfg.loop.seed;

  require(cfg.loop.epochs >= 1, "train_run: epochs must be >= 1");
  require(cfg.loop.batch >= 1, "train_run: batch must be >= 1");
  if (method == Method::pssl)
    require(fclf != nullptr, "train_run: P-SSL needs a pretrained foundation "
                             "classifier (method/data-source mismatch)");
  if (method_uses_real_unlabeled(method))
    require(task.unlabeled_size() > 0,
            "train_run: oracle method without an unlabeled split "
            "(method/data-source mismatch)");

  const std::uint64_t gen_checksum_before = gen.checksum();
  const Dataset& dtrain = task.train();
  const Dataset& dval = task.val();

  ClassifierConfig model_cfg = cfg.model;
  model_cfg.input_dim = static_cast<int>(dtrain.x.cols());
  model_cfg.num_classes = task.num_classes();
  model_cfg.seed = seed;
  ClassifierParams theta = make_classifier(model_cfg);
  SgdMomentum sgd(theta.all(), cfg.loop.momentum);

  // Latent search state (MP-SSL only).
  MapperConfig mcfg = cfg.mapper;
  mcfg.latent_dim = gen.domain.latent_dim();
  mcfg.num_classes = task.num_classes();
  mcfg.seed = seed;
  ConverterConfig ccfg = cfg.converter;
  ccfg.num_classes = task.num_classes();
  ccfg.num_foundation_classes = gen.domain.num_classes();
  MapperParams phi = make_mapper(mcfg);
  ConverterParams xi = make_converter(ccfg);
  std::vector<Var> phixi = phi.params();
  {
    auto xs = xi.params();
    phixi.insert(phixi.end(), xs.begin(), xs.end());
  }
  Adam outer_opt(phixi, cfg.outer.outer_lr);

  Batcher batcher(dtrain.size(), cfg.loop.batch, seed, "batch_order");
  const int iters_per_epoch = batcher.batches_per_epoch();

  // Oracle / transfer unlabeled streams.
  std::unique_ptr<Batcher> u_batcher;
  Dataset transfer_pool;
  if (method_uses_real_unlabeled(method)) {
    u_batcher = std::make_unique<Batcher>(task.unlabeled_size(), cfg.loop.batch,
                                          seed, "unlabeled_order");
  } else if (method == Method::transfer_ssl) {
    // Raw foundation-domain samples stand in for a source dataset.
    const int n = std::max(cfg.loop.batch, cfg.transfer_samples);
    Rng rng(stream_seed(seed, "transfer_source"));
    Eigen::MatrixXd z = rng.normal_matrix(n, gen.domain.latent_dim());
    std::vector<int> yf(static_cast<std::size_t>(n));
    for (auto& c : yf) c = rng.below(gen.domain.num_classes());
    transfer_pool.x = generate_batch_value(gen, z, yf);
    transfer_pool.y.assign(static_cast<std::size_t>(n), 0);
    u_batcher = std::make_unique<Batcher>(n, cfg.loop.batch, seed,
                                          "transfer_order");
  }

  ThresholdState adaptive_state{1.0 / task.num_classes()};
  TrainedRun run;
  run.model_cfg = model_cfg;
  run.best_val_accuracy = -1.0;

  std::uint64_t global_iter = 0;
  for (int epoch = 0; epoch < cfg.loop.epochs; ++epoch) {
    const double lr = learning_rate_at(cfg.loop.lr, cfg.loop.milestones, epoch);
    IterationStats acc;

    for (int it = 0; it < iters_per_epoch; ++it, ++global_iter) {
      const auto idx = batcher.next();
      Eigen::MatrixXd bx = rows_of(dtrain.x, idx);
      std::vector<int> by = labels_of(dtrain.y, idx);
      const int b = static_cast<int>(by.size());
      auto xb = constant(bx);

      const std::uint64_t noise_seed = stream_seed(seed, "noise", global_iter);
      Var loss;
      IterationStats stat;

      switch (method) {
        case Method::base: {
          loss = supervised_loss(theta, xb, by);
          break;
        }
        case Method::mpssl: {
          Eigen::MatrixXd z(b, gen.domain.latent_dim());
          {
            Rng zr(stream_seed(seed, "latents", global_iter));
            z = zr.normal_matrix(b, gen.domain.latent_dim());
          }
          InnerStepConfig inner = cfg.inner;
          if (inner.eta <= 0.0) inner.eta = lr;
          inner.lambda = cfg.loop.lambda;

          if (cfg.lmo_enabled) {
            // Validation minibatch for the outer objective.
            std::vector<int> vidx;
            if (dval.size() <= cfg.loop.val_batch) {
              vidx.resize(static_cast<std::size_t>(dval.size()));
              std::iota(vidx.begin(), vidx.end(), 0);
            } else {
              Rng vr(stream_seed(seed, "val_batch", global_iter));
              std::vector<int> all(static_cast<std::size_t>(dval.size()));
              std::iota(all.begin(), all.end(), 0);
              vr.shuffle(all);
              vidx.assign(all.begin(), all.begin() + cfg.loop.val_batch);
            }
            LmoBatch lb;
            lb.labeled_x = bx;
            lb.labeled_y = by;
            lb.val_x = rows_of(dval.x, vidx);
            lb.val_y = labels_of(dval.y, vidx);
            lb.z = z;
            lb.noise_seed = noise_seed;
            auto report = lmo_step(phi, xi, outer_opt, theta, gen, lb, inner,
                                   cfg.outer, cfg.scr);
            stat.gap = report.gap_loss_value;
            stat.mg_phi = report.grad_norm_phi;
            stat.mg_xi = report.grad_norm_xi;
          }

          // Theta update: supervised + lambda * SCR on the regenerated batch.
          loss = supervised_loss(theta, xb, by);
          if (cfg.loop.lambda != 0.0) {
            const std::uint64_t noise2 = stream_seed(seed, "noise2", global_iter);
            auto synth =
                detach(synthesize_unlabeled(phi, xi, gen, constant(z), by, noise2));
            Var unsup;
            if (cfg.inner.use_fixmatch_unsup) {
              auto fm = fixmatch_like_loss(theta, synth,
                                           cfg.loop.fixmatch_threshold,
                                           cfg.scr.weak, cfg.scr.strong, noise2);
              stat.acceptance = fm.acceptance_rate;
              unsup = fm.loss;
            } else {
              unsup = scr_loss(theta, synth, cfg.scr, noise2);
              stat.scr = unsup->scalar_value();
            }
            loss = add(loss, scale(unsup, cfg.loop.lambda));
          }
          break;
        }
        case Method::naive_gssl:
        case Method::pssl: {
          Rng zr(stream_seed(seed, "latents", global_iter));
          Eigen::MatrixXd z = zr.normal_matrix(b, gen.domain.latent_dim());
          Eigen::MatrixXd synth;
          if (method == Method::naive_gssl) {
            Rng yr(stream_seed(seed, "naive_yf", global_iter));
            std::vector<int> yf(static_cast<std::size_t>(b));
            for (auto& c : yf) c = yr.below(gen.domain.num_classes());
            synth = generate_batch_value(gen, z, yf);
          } else {
            Eigen::MatrixXd soft = fclf->predict_proba_batch(bx);
            synth = generate_batch_soft(gen, constant(z), constant(soft))->value;
          }
          loss = supervised_loss(theta, xb, by);
          if (cfg.loop.lambda != 0.0) {
            auto fm = fixmatch_like_loss(theta, constant(synth),
                                         cfg.loop.fixmatch_threshold, cfg.scr.weak,
                                         cfg.scr.strong, noise_seed);
            stat.acceptance = fm.acceptance_rate;
            loss = add(loss, scale(fm.loss, cfg.loop.lambda));
          }
          break;
        }
        case Method::fixmatch_oracle:
        case Method::adaptive_oracle:
        case Method::transfer_ssl: {
          const Dataset& pool = method == Method::transfer_ssl
                                    ? transfer_pool
                                    : task.unlabeled();
          Eigen::MatrixXd ub = rows_of(pool.x, u_batcher->next());
          double threshold = cfg.loop.fixmatch_threshold;
          if (method == Method::adaptive_oracle)
            threshold = std::min(1.0, std::max(adaptive_state.average, 1e-6));
          loss = supervised_loss(theta, xb, by);
          if (cfg.loop.lambda != 0.0) {
            auto fm = fixmatch_like_loss(theta, constant(ub), threshold,
                                         cfg.scr.weak, cfg.scr.strong, noise_seed);
            stat.acceptance = fm.acceptance_rate;
            if (method == Method::adaptive_oracle)
              adaptive_state = adaptive_threshold_update(
                  adaptive_state, fm.mean_max_confidence,
                  cfg.loop.adaptive_momentum);
            loss = add(loss, scale(fm.loss, cfg.loop.lambda));
          }
          break;
        }
      }

      stat.loss = loss->scalar_value();
      if (!std::isfinite(stat.loss)) {
        throw RunError("train_run: non-finite loss at epoch " +
                       std::to_string(epoch) + " iteration " + std::to_string(it) +
                       (cfg.checkpoint_path.empty()
                            ? std::string(" (no checkpoint configured)")
                            : " (last-good checkpoint: " + cfg.checkpoint_path +
                                  ")"));
      }
      auto grads = gradients(loss, theta.all());
      double gnorm_sq = 0.0;
      for (const auto& g : grads) {
        if (!all_finite(g))
          throw RunError("train_run: non-finite classifier gradient at epoch " +
                         std::to_string(epoch));
        gnorm_sq += g.squaredNorm();
      }
      if (cfg.loop.grad_clip > 0.0 && gnorm_sq > cfg.loop.grad_clip * cfg.loop.grad_clip) {
        const double s = cfg.loop.grad_clip / std::sqrt(gnorm_sq);
        for (auto& g : grads) g *= s;
      }
      sgd.step(grads, lr);

      acc.loss += stat.loss;
      acc.scr += stat.scr;
      acc.gap += stat.gap;
      acc.mg_phi += stat.mg_phi;
      acc.mg_xi += stat.mg_xi;
      acc.acceptance += stat.acceptance;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = acc.loss / iters_per_epoch;
    em.scr_loss = acc.scr / iters_per_epoch;
    em.gap_loss = acc.gap / iters_per_epoch;
    em.meta_grad_norm_phi = acc.mg_phi / iters_per_epoch;
    em.meta_grad_norm_xi = acc.mg_xi / iters_per_epoch;
    em.pseudo_acceptance_rate = acc.acceptance / iters_per_epoch;
    auto val_eval = evaluate(theta, dval);
    em.val_loss = val_eval.mean_loss;
    em.val_accuracy = val_eval.accuracy;
    em.test_accuracy = evaluate(theta, task.test()).accuracy;
    em.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    run.history.push_back(em);

    if (em.val_accuracy > run.best_val_accuracy) {
      run.best_val_accuracy = em.val_accuracy;
      run.best_epoch = epoch;
      run.best_theta = theta.values();
      run.best_test_accuracy = em.test_accuracy;
    }

    if (!cfg.checkpoint_path.empty()) {
      save_run_checkpoint(cfg.checkpoint_path, theta, phi, xi, sgd, outer_opt,
                          epoch, seed, cfg.config_hash);
    }
  }

  run.final_theta = theta.values();
  run.final_test_accuracy = evaluate(theta, task.test()).accuracy;
  if (method == Method::mpssl) {
    for (const auto& p : phi.params()) run.final_phi.push_back(p->value);
    for (const auto& p : xi.params()) run.final_xi.push_back(p->value);
  }
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  require(gen.checksum() == gen_checksum_before,
          "train_run: generator parameters changed during training");
  return run;
}

}  // namespace mpssl
