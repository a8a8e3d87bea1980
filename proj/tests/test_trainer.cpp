#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "mpssl/checkpoint.hpp"
#include "mpssl/trainer.hpp"

using namespace mpssl;

namespace {

struct Bench {
  FoundationDomain domain;
  FoundationGenerator gen;
  TaskSpec ts;

  Bench() {
    DomainSpec ds;
    ds.num_classes = 6;
    ds.data_dim = 6;
    ds.latent_dim = 3;
    ds.seed = 2;
    domain = make_foundation_domain(ds);
    gen = make_analytic_generator(domain);
    ts.num_classes = 3;
    ts.seed = 4;
    ts.labels_per_class = 4;
    ts.val_per_class = 3;
    ts.unlabeled_per_class = 10;
    ts.test_per_class = 30;
    ts.shift.translation = 0.3;
    ts.shift.noise_sigma = 0.05;
  }

  TargetTask task() const { return make_target_task(domain, ts); }

  TrainerConfig cfg(Method m, std::uint64_t seed, int epochs = 5) const {
    TrainerConfig tc;
    tc.loop.method = m;
    tc.loop.seed = seed;
    tc.loop.epochs = epochs;
    tc.loop.batch = 8;
    tc.loop.milestones = {3, 4};
    tc.loop.lambda = 0.5;
    tc.model.hidden1 = 8;
    tc.model.hidden2 = 6;
    tc.mapper.embed_dim = 4;
    tc.mapper.hidden = 8;
    tc.converter.tau = 1.0;
    return tc;
  }
};

std::uint64_t history_checksum(const TrainedRun& run) {
  std::uint64_t h = fnv1a64("history");
  for (const auto& em : run.history) {
    for (double v : {em.train_loss, em.val_loss, em.val_accuracy,
                     em.test_accuracy, em.scr_loss, em.gap_loss}) {
      h = fnv1a64_bytes(&v, sizeof(v), h);
    }
  }
  return h;
}

}  // namespace

TEST_CASE("learning rate schedule is exactly lr0 * 0.1^k") {
  const std::vector<int> ms{20, 40, 52};
  CHECK(learning_rate_at(0.01, ms, 0) == 0.01);
  CHECK(learning_rate_at(0.01, ms, 19) == 0.01);
  CHECK(learning_rate_at(0.01, ms, 20) == 0.01 * std::pow(0.1, 1));
  CHECK(learning_rate_at(0.01, ms, 45) == 0.01 * std::pow(0.1, 2));
  CHECK(learning_rate_at(0.01, ms, 59) == 0.01 * std::pow(0.1, 3));
}

TEST_CASE("same seed, same config: bitwise identical runs") {
  Bench b;
  for (Method m : {Method::base, Method::mpssl, Method::fixmatch_oracle}) {
    auto t1 = b.task();
    auto t2 = b.task();
    auto r1 = train_run(t1, b.gen, nullptr, b.cfg(m, 11));
    auto r2 = train_run(t2, b.gen, nullptr, b.cfg(m, 11));
    CHECK(history_checksum(r1) == history_checksum(r2));
    for (std::size_t i = 0; i < r1.final_theta.size(); ++i)
      CHECK(r1.final_theta[i] == r2.final_theta[i]);
  }
}

TEST_CASE("mpssl with lambda = 0 and lambda_gap = 0 reproduces the base run bitwise") {
  Bench b;
  auto base_cfg = b.cfg(Method::base, 21);
  auto mp_cfg = b.cfg(Method::mpssl, 21);
  mp_cfg.loop.lambda = 0.0;
  mp_cfg.inner.lambda = 0.0;
  mp_cfg.outer.lambda_gap = 0.0;

  auto tb = b.task();
  auto tm = b.task();
  auto rb = train_run(tb, b.gen, nullptr, base_cfg);
  auto rm = train_run(tm, b.gen, nullptr, mp_cfg);
  REQUIRE(rb.history.size() == rm.history.size());
  for (std::size_t i = 0; i < rb.history.size(); ++i) {
    CHECK(rb.history[i].train_loss == rm.history[i].train_loss);
    CHECK(rb.history[i].test_accuracy == rm.history[i].test_accuracy);
  }
  for (std::size_t i = 0; i < rb.final_theta.size(); ++i)
    CHECK(rb.final_theta[i] == rm.final_theta[i]);
}

TEST_CASE("gSSL methods never read the unlabeled split; oracles do") {
  Bench b;
  for (Method m : {Method::mpssl, Method::naive_gssl}) {
    auto t = b.task();
    (void)train_run(t, b.gen, nullptr, b.cfg(m, 31, 3));
    CHECK(t.unlabeled_read_count() == 0);
  }
  {
    auto t = b.task();
    (void)train_run(t, b.gen, nullptr, b.cfg(Method::fixmatch_oracle, 31, 3));
    CHECK(t.unlabeled_read_count() > 0);
  }
  {
    auto t = b.task();
    (void)train_run(t, b.gen, nullptr, b.cfg(Method::adaptive_oracle, 31, 3));
    CHECK(t.unlabeled_read_count() > 0);
  }
  {
    // transfer SSL pulls from the foundation stream, not D_u.
    auto t = b.task();
    (void)train_run(t, b.gen, nullptr, b.cfg(Method::transfer_ssl, 31, 3));
    CHECK(t.unlabeled_read_count() == 0);
  }
}

TEST_CASE("method/data-source mismatches are rejected") {
  Bench b;
  auto t = b.task();
  CHECK_THROWS_AS((void)train_run(t, b.gen, nullptr, b.cfg(Method::pssl, 1, 2)),
                  std::invalid_argument);

  TaskSpec no_du = b.ts;
  no_du.unlabeled_per_class = 0;
  auto t2 = make_target_task(b.domain, no_du);
  CHECK_THROWS_AS(
      (void)train_run(t2, b.gen, nullptr, b.cfg(Method::fixmatch_oracle, 1, 2)),
      std::invalid_argument);
}

TEST_CASE("pssl conditioning uses the foundation classifier") {
  Bench b;
  ClassifierBudget budget;
  budget.samples_per_class = 120;
  budget.epochs = 15;
  budget.hidden = 32;
  budget.accuracy_floor = 0.9;
  auto fclf = pretrain_foundation_classifier(b.domain, budget);

  // pssl_label: normalized, deterministic, argmax on class means.
  for (int c = 0; c < b.domain.num_classes(); ++c) {
    auto p = pssl_label(fclf, b.domain.means[static_cast<std::size_t>(c)]);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-6);
    int arg = 0;
    p.maxCoeff(&arg);
    CHECK(arg == c);
    CHECK((pssl_label(fclf, b.domain.means[static_cast<std::size_t>(c)]) - p)
              .norm() == 0.0);
  }

  auto t = b.task();
  auto run = train_run(t, b.gen, &fclf, b.cfg(Method::pssl, 5, 3));
  CHECK(run.history.size() == 3);
  CHECK(t.unlabeled_read_count() == 0);
}

TEST_CASE("evaluate: closed forms and purity") {
  Bench b;
  auto t = b.task();
  ClassifierConfig cc;
  cc.input_dim = 6;
  cc.hidden1 = 8;
  cc.hidden2 = 6;
  cc.num_classes = 3;
  cc.seed = 77;
  auto theta = make_classifier(cc);

  auto e1 = evaluate(theta, t.test());
  auto e2 = evaluate(theta, t.test());
  CHECK(e1.accuracy == e2.accuracy);
  CHECK(e1.mean_loss == e2.mean_loss);

  // Constant predictor on a balanced set: accuracy = 1/K.
  theta.w1->value.setZero();
  theta.w2->value.setZero();
  theta.wh->value.setZero();
  theta.bh->value.setZero();
  theta.bh->value(0, 1) = 5.0;  // always predicts class 1
  auto ec = evaluate(theta, t.test());
  CHECK(ec.accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Dataset empty;
  empty.x.resize(0, 6);
  CHECK_THROWS_AS((void)evaluate(theta, empty), std::invalid_argument);
}

TEST_CASE("best-validation model selection") {
  Bench b;
  auto t = b.task();
  auto run = train_run(t, b.gen, nullptr, b.cfg(Method::base, 9, 6));
  double best = -1.0;
  int best_epoch = 0;
  for (const auto& em : run.history) {
    if (em.val_accuracy > best) {
      best = em.val_accuracy;
      best_epoch = em.epoch;
    }
  }
  CHECK(run.best_val_accuracy == best);
  CHECK(run.best_epoch == best_epoch);
}

TEST_CASE("run checkpoints restore evaluation bitwise") {
  Bench b;
  auto t = b.task();
  auto cfg = b.cfg(Method::mpssl, 41, 3);
  cfg.checkpoint_path = "test_trainer_ckpt.txt";
  auto run = train_run(t, b.gen, nullptr, cfg);

  auto final_params = classifier_from_run(run);
  auto before = evaluate(final_params, t.test());

  auto ck = load_checkpoint(cfg.checkpoint_path);
  CHECK(ck.kind == "run");
  CHECK(ck.epoch == 2);
  CHECK(ck.seed == 41);
  auto restored = load_run_classifier(ck);
  auto after = evaluate(restored, t.test());
  CHECK(before.accuracy == after.accuracy);
  CHECK(before.mean_loss == after.mean_loss);
  std::remove(cfg.checkpoint_path.c_str());
}

TEST_CASE("irrelevant generator gives naive gSSL no edge over base") {
  // Shift the task far away from every foundation class: synthetic samples
  // are unrelated, so naive gSSL should land within noise of the base model.
  Bench b;
  TaskSpec far = b.ts;
  far.shift.translation = 60.0;
  far.seed = 19;

  std::vector<double> diffs;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    auto t1 = make_target_task(b.domain, far);
    auto t2 = make_target_task(b.domain, far);
    auto rb = train_run(t1, b.gen, nullptr, b.cfg(Method::base, seed, 8));
    auto rn = train_run(t2, b.gen, nullptr, b.cfg(Method::naive_gssl, seed, 8));
    diffs.push_back(rn.final_test_accuracy - rb.final_test_accuracy);
  }
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(diffs.size());
  double sd = 0.0;
  for (double d : diffs) sd += (d - mean) * (d - mean);
  sd = std::sqrt(sd / static_cast<double>(diffs.size() - 1));
  // Within noise: |mean| bounded by a few standard errors (plus an absolute
  // floor for the degenerate zero-variance case).
  const double se = sd / std::sqrt(static_cast<double>(diffs.size()));
  CHECK(std::abs(mean) <= std::max(0.05, 3.0 * se));
}

TEST_CASE("fixmatch oracle logs a usable acceptance-rate stream") {
  Bench b;
  TaskSpec ts = b.ts;
  ts.unlabeled_per_class = 30;
  auto t = make_target_task(b.domain, ts);
  auto cfg = b.cfg(Method::fixmatch_oracle, 3, 10);
  cfg.loop.fixmatch_threshold = 0.7;
  auto run = train_run(t, b.gen, nullptr, cfg);
  // Smoothed trend over training: late-half mean acceptance >= early-half.
  double early = 0.0, late = 0.0;
  const std::size_t half = run.history.size() / 2;
  for (std::size_t i = 0; i < run.history.size(); ++i) {
    (i < half ? early : late) += run.history[i].pseudo_acceptance_rate;
  }
  early /= static_cast<double>(half);
  late /= static_cast<double>(run.history.size() - half);
  CHECK(late >= early - 0.05);
}
