#include <cmath>

#include "doctest.h"
#include "fd_util.hpp"
#include "mpssl/checkpoint.hpp"
#include "mpssl/foundation.hpp"

using namespace mpssl;

namespace {

DomainSpec small_spec() {
  DomainSpec s;
  s.num_classes = 10;
  s.data_dim = 8;
  s.latent_dim = 4;
  s.seed = 1;
  return s;
}

}  // namespace

TEST_CASE("domain construction is deterministic and validated") {
  auto a = make_foundation_domain(small_spec());
  auto b = make_foundation_domain(small_spec());
  CHECK(a.checksum() == b.checksum());
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j)
      CHECK((a.means[i] - a.means[j]).norm() >= a.spec.separation);

  DomainSpec bad = small_spec();
  bad.num_classes = 1;
  CHECK_THROWS_AS((void)make_foundation_domain(bad), ConfigError);
  bad = small_spec();
  bad.latent_dim = 9;  // > data_dim
  CHECK_THROWS_AS((void)make_foundation_domain(bad), ConfigError);
}

TEST_CASE("scale matrices are well conditioned and full rank") {
  auto dom = make_foundation_domain(small_spec());
  for (const auto& a : dom.scales) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    CHECK(sv(sv.size() - 1) > 0.0);
    CHECK(sv(0) / sv(sv.size() - 1) <= 100.0);
  }
}

TEST_CASE("wide domain: analytic generator matches class means over 1e5 draws") {
  DomainSpec s;
  s.num_classes = 1000;
  s.data_dim = 16;
  s.latent_dim = 8;
  s.seed = 7;
  auto dom = make_foundation_domain(s);
  auto gen = make_analytic_generator(dom);

  const int n = 100000;
  Eigen::MatrixXd z = sample_latent(8, n, 101);
  for (int cls : {0, 499, 999}) {
    std::vector<int> y(n, cls);
    Eigen::MatrixXd x = generate_batch_value(gen, z, y);
    Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd& a = dom.scales[static_cast<std::size_t>(cls)];
    Eigen::MatrixXd cov = a * a.transpose();
    for (int j = 0; j < 16; ++j) {
      const double se = std::sqrt(cov(j, j) / n);
      CHECK(std::abs(mean(j) - dom.means[static_cast<std::size_t>(cls)](j)) <=
            3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("per-class empirical mean within 4 sigma_max / sqrt(n)") {
  auto dom = make_foundation_domain(small_spec());
  auto gen = make_analytic_generator(dom);
  const int n = 100000;
  Eigen::MatrixXd z = sample_latent(4, n, 31);
  for (int cls = 0; cls < dom.num_classes(); ++cls) {
    std::vector<int> y(n, cls);
    Eigen::MatrixXd x = generate_batch_value(gen, z, y);
    Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dom.scales[static_cast<std::size_t>(cls)]);
    const double bound = 4.0 * svd.singularValues()(0) / std::sqrt(n);
    for (int j = 0; j < dom.data_dim(); ++j)
      CHECK(std::abs(mean(j) - dom.means[static_cast<std::size_t>(cls)](j)) < bound);
  }
}

TEST_CASE("generate: zero latent, one-hot degeneracy, mixtures") {
  auto dom = make_foundation_domain(small_spec());
  auto gen = make_analytic_generator(dom);
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(4);

  CHECK((generate(gen, z0, 3) - dom.means[3]).norm() == 0.0);

  Eigen::VectorXd onehot = Eigen::VectorXd::Zero(10);
  onehot(3) = 1.0;
  Eigen::VectorXd z = sample_latent(4, 1, 5).row(0).transpose();
  CHECK((generate(gen, z, onehot) - generate(gen, z, 3)).norm() == 0.0);

  Eigen::VectorXd half = Eigen::VectorXd::Zero(10);
  half(1) = 0.5;
  half(4) = 0.5;
  Eigen::VectorXd expect = 0.5 * (dom.means[1] + dom.means[4]);
  CHECK((generate(gen, z0, half) - expect).norm() < 1e-12);

  // Soft-label linearity at a generic z and p.
  Eigen::VectorXd p(10);
  p.setConstant(0.1);
  Eigen::VectorXd mix = generate(gen, z, p);
  Eigen::VectorXd parts = Eigen::VectorXd::Zero(8);
  for (int c = 0; c < 10; ++c) parts += p(c) * generate(gen, z, c);
  CHECK((mix - parts).cwiseAbs().maxCoeff() < 1e-12);

  // Errors: latent dimension mismatch, unnormalized soft label.
  Eigen::VectorXd zbad = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS((void)generate(gen, zbad, 0), std::invalid_argument);
  Eigen::VectorXd pbad = Eigen::VectorXd::Constant(10, 0.2);
  CHECK_THROWS_AS((void)generate(gen, z0, pbad), std::invalid_argument);
}

TEST_CASE("generator jacobian w.r.t. z equals sum_c p_c A_c") {
  auto dom = make_foundation_domain(small_spec());
  auto gen = make_analytic_generator(dom);
  Rng rng(17);
  auto zv = ad::leaf(rng.normal_matrix(1, 4));
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, 10, 0.1);
  auto pv = ad::constant(p);

  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(8, 4);
  for (int c = 0; c < 10; ++c) expected += 0.1 * dom.scales[static_cast<std::size_t>(c)];

  for (int out = 0; out < 8; ++out) {
    auto fn = [&] { return ad::sum(ad::col(generate_batch_soft(gen, zv, pv), out)); };
    auto g = ad::gradients(fn(), {zv})[0];
    CHECK((g - expected.row(out)).cwiseAbs().maxCoeff() < 1e-12);
    auto fg = fd::numeric_grad([&] { return fn()->scalar_value(); }, zv);
    CHECK(fd::max_rel_err(g, fg) < 1e-4);
  }
}

TEST_CASE("sample_latent: law of large numbers, determinism, prefix stability") {
  Eigen::MatrixXd z = sample_latent(4, 100000, 3);
  for (int j = 0; j < 4; ++j) {
    const double mean = z.col(j).mean();
    const double var = (z.col(j).array() - mean).square().sum() / (z.rows() - 1);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
  }
  CHECK(sample_latent(4, 4, 9) == sample_latent(4, 4, 9));
  // Row i depends on (seed, i) only.
  CHECK(sample_latent(4, 10, 9).topRows(4) == sample_latent(4, 4, 9));
  CHECK_THROWS_AS((void)sample_latent(4, 0, 1), std::invalid_argument);
}

TEST_CASE("foundation classifier pretraining reaches the accuracy floor") {
  auto dom = make_foundation_domain(small_spec());
  ClassifierBudget budget;
  budget.samples_per_class = 300;
  budget.epochs = 25;
  budget.hidden = 48;
  auto fc = pretrain_foundation_classifier(dom, budget);
  CHECK(fc.holdout_accuracy >= 0.95);

  // Class means are classified to their own class.
  for (int c = 0; c < dom.num_classes(); ++c) {
    Eigen::VectorXd p = fc.predict_proba(dom.means[static_cast<std::size_t>(c)]);
    int arg = 0;
    p.maxCoeff(&arg);
    CHECK(arg == c);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-6);
  }

  // Unreachable floor is reported, not silent.
  ClassifierBudget impossible = budget;
  impossible.epochs = 1;
  impossible.accuracy_floor = 1.01;
  CHECK_THROWS_AS(
      (void)pretrain_foundation_classifier(dom, impossible), RunError);
}

TEST_CASE("learned generator matches the analytic oracle") {
  DomainSpec s;
  s.num_classes = 4;
  s.data_dim = 5;
  s.latent_dim = 2;
  s.seed = 3;
  auto dom = make_foundation_domain(s);
  GeneratorBudget budget;
  budget.samples = 4096;
  budget.epochs = 120;
  budget.hidden = 48;
  budget.embed_dim = 8;
  auto gen = pretrain_learned_generator(dom, budget);
  CHECK(gen.backend == GenBackend::learned);

  // Held-out relative MSE enforced inside pretraining; sanity: z = 0 lands
  // near the class mean.
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(2);
  for (int c = 0; c < 4; ++c) {
    CHECK((generate(gen, z0, c) - dom.means[static_cast<std::size_t>(c)]).norm() <
          0.8);
  }
  // Frozen determinism.
  Eigen::VectorXd z = sample_latent(2, 1, 8).row(0).transpose();
  CHECK((generate(gen, z, 1) - generate(gen, z, 1)).norm() == 0.0);

  GeneratorBudget starve = budget;
  starve.epochs = 1;
  starve.rel_mse_threshold = 1e-9;
  CHECK_THROWS_AS((void)pretrain_learned_generator(dom, starve), RunError);
}

TEST_CASE("target task: reproducible splits, counter, shift") {
  auto dom = make_foundation_domain(small_spec());
  TaskSpec ts;
  ts.num_classes = 4;
  ts.seed = 11;
  ts.shift.translation = 2.0;
  ts.shift.scale = 0.8;
  ts.shift.rotate = true;
  auto t1 = make_target_task(dom, ts);
  auto t2 = make_target_task(dom, ts);
  CHECK(t1.data_checksum() == t2.data_checksum());
  CHECK(t1.train().size() == 16);
  CHECK(t1.val().size() == 8);
  CHECK(t1.test().size() == 400);
  CHECK(t1.unlabeled_read_count() == 0);
  (void)t1.unlabeled();
  CHECK(t1.unlabeled_read_count() == 1);

  // Distinct task seeds give distinct data.
  TaskSpec ts2 = ts;
  ts2.seed = 12;
  CHECK(make_target_task(dom, ts2).data_checksum() != t1.data_checksum());
}

TEST_CASE("foundation checkpoint round trip") {
  auto dom = make_foundation_domain(small_spec());
  auto gen = make_analytic_generator(dom);
  ClassifierBudget budget;
  budget.samples_per_class = 60;
  budget.epochs = 8;
  budget.accuracy_floor = 0.5;
  auto fc = pretrain_foundation_classifier(dom, budget);

  const std::string path = "test_foundation_roundtrip.ckpt";
  save_foundation_checkpoint(path, gen, &fc);
  auto bundle = load_foundation_checkpoint(path);
  CHECK(bundle.generator.checksum() == gen.checksum());
  REQUIRE(bundle.classifier.has_value());
  CHECK(bundle.classifier->checksum() == fc.checksum());
  std::remove(path.c_str());
}
