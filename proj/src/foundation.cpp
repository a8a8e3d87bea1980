#include "mpssl/foundation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpssl/common.hpp"
#include "mpssl/optim.hpp"

namespace mpssl {

namespace {

std::uint64_t hash_matrix(const Eigen::MatrixXd& m, std::uint64_t h) {
  return fnv1a64_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
}

// Thin orthonormal d x k factor from a seeded Gaussian draw.
Eigen::MatrixXd random_orthonormal(int d, int k, Rng& rng) {
  Eigen::MatrixXd g = rng.normal_matrix(d, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  return q;
}

}  // namespace

std::uint64_t FoundationDomain::checksum() const {
  std::uint64_t h = fnv1a64("domain");
  for (const auto& m : means) h = hash_matrix(m, h);
  for (const auto& a : scales) h = hash_matrix(a, h);
  return h;
}

FoundationDomain make_foundation_domain(const DomainSpec& spec) {
  require_cfg(spec.num_classes >= 2,
              "foundation: num_classes must be >= 2, got " +
                  std::to_string(spec.num_classes));
  require_cfg(spec.data_dim >= 2, "foundation: data_dim must be >= 2");
  require_cfg(spec.latent_dim >= 1, "foundation: latent_dim must be >= 1");
  require_cfg(spec.latent_dim <= spec.data_dim,
              "foundation: latent_dim must not exceed data_dim");
  require_cfg(spec.sv_min > 0.0 && spec.sv_max >= spec.sv_min,
              "foundation: invalid singular value range");
  require_cfg(spec.sv_max / spec.sv_min <= 100.0,
              "foundation: scale condition number must be <= 100");
  require_cfg(spec.separation > 0.0, "foundation: separation must be positive");

  FoundationDomain dom;
  dom.spec = spec;

  Rng mean_rng(stream_seed(spec.seed, "domain_means"));
  const double radius =
      spec.separation *
      std::max(1.0, std::pow(static_cast<double>(spec.num_classes),
                             1.0 / spec.data_dim));
  for (int c = 0; c < spec.num_classes; ++c) {
    Eigen::VectorXd mu;
    bool ok = false;
    for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
      mu = radius * mean_rng.normal_matrix(spec.data_dim, 1);
      ok = true;
      for (const auto& prev : dom.means) {
        if ((mu - prev).norm() < spec.separation) {
          ok = false;
          break;
        }
      }
    }
    require(ok, "make_foundation_domain: could not place class means at the "
                "requested separation; lower separation or num_classes");
    dom.means.push_back(mu);
  }

  Rng scale_rng(stream_seed(spec.seed, "domain_scales"));
  for (int c = 0; c < spec.num_classes; ++c) {
    Eigen::MatrixXd u = random_orthonormal(spec.data_dim, spec.latent_dim, scale_rng);
    Eigen::MatrixXd v =
        random_orthonormal(spec.latent_dim, spec.latent_dim, scale_rng);
    Eigen::VectorXd sv(spec.latent_dim);
    for (int i = 0; i < spec.latent_dim; ++i)
      sv(i) = scale_rng.uniform(spec.sv_min, spec.sv_max);
    dom.scales.push_back(u * sv.asDiagonal() * v.transpose());
  }
  return dom;
}

Eigen::MatrixXd sample_latent(int latent_dim, int count, std::uint64_t seed) {
  require(count >= 1, "sample_latent: count must be >= 1");
  require(latent_dim >= 1, "sample_latent: latent_dim must be >= 1");
  Eigen::MatrixXd z(count, latent_dim);
  for (int i = 0; i < count; ++i) {
    Rng row_rng(stream_seed(seed, "latent_row", static_cast<std::uint64_t>(i)));
    for (int j = 0; j < latent_dim; ++j) z(i, j) = row_rng.normal();
  }
  return z;
}

std::uint64_t FoundationGenerator::checksum() const {
  std::uint64_t h = domain.checksum();
  h = fnv1a64(backend == GenBackend::analytic ? "analytic" : "learned", h);
  if (learned) {
    h = hash_matrix(learned->emb, h);
    h = hash_matrix(learned->w_z, h);
    h = hash_matrix(learned->w_g, h);
    h = hash_matrix(learned->b_g, h);
    h = hash_matrix(learned->w_o, h);
    h = hash_matrix(learned->w_m, h);
    h = hash_matrix(learned->b_m, h);
  }
  return h;
}

FoundationGenerator make_analytic_generator(FoundationDomain domain) {
  FoundationGenerator g;
  g.backend = GenBackend::analytic;
  g.domain = std::move(domain);
  return g;
}

namespace {

void check_latent_batch(const FoundationGenerator& g, int rows, int cols, int n) {
  require(cols == g.domain.latent_dim(),
          "generate: latent dimension mismatch (got " + std::to_string(cols) +
              ", want " + std::to_string(g.domain.latent_dim()) + ")");
  require(rows == n, "generate: latent/label batch size mismatch");
}

void check_soft_rows(const Eigen::MatrixXd& p, int num_classes) {
  require(static_cast<int>(p.cols()) == num_classes,
          "generate: soft label width mismatch");
  for (int i = 0; i < p.rows(); ++i) {
    require(p.row(i).minCoeff() >= -1e-12,
            "generate: soft label has negative entries");
    require(std::abs(p.row(i).sum() - 1.0) <= 1e-6,
            "generate: soft label row does not sum to 1");
  }
}

ad::Var learned_forward(const LearnedGenParams& lp, const ad::Var& z,
                        const ad::Var& e) {
  using namespace ad;
  auto u = matmul(z, constant(lp.w_z));
  auto gates = add(matmul(e, constant(lp.w_g)),
                   broadcast_rows(constant(lp.b_g), z->rows()));
  auto x = matmul(mul(u, gates), constant(lp.w_o));
  auto m = add(matmul(e, constant(lp.w_m)),
               broadcast_rows(constant(lp.b_m), z->rows()));
  return add(x, m);
}

}  // namespace

ad::Var generate_batch(const FoundationGenerator& g, const ad::Var& z,
                       const std::vector<int>& labels) {
  using namespace ad;
  check_latent_batch(g, z->rows(), z->cols(), static_cast<int>(labels.size()));
  for (int y : labels)
    require(y >= 0 && y < g.domain.num_classes(), "generate: label out of range");

  if (g.backend == GenBackend::learned) {
    require(g.learned.has_value(), "generate: learned backend not pretrained");
    auto e = take_rows(constant(g.learned->emb), labels);
    return learned_forward(*g.learned, z, e);
  }

  // Analytic: sum per-class affine pieces over the classes present.
  std::vector<int> uniq = labels;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  const int b = z->rows();
  const int d = g.domain.data_dim();
  Eigen::MatrixXd mu(b, d);
  for (int i = 0; i < b; ++i)
    mu.row(i) = g.domain.means[static_cast<std::size_t>(labels[i])].transpose();

  Var out = constant(std::move(mu));
  for (int c : uniq) {
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(b);
    for (int i = 0; i < b; ++i)
      if (labels[static_cast<std::size_t>(i)] == c) mask(i) = 1.0;
    auto piece = matmul_nt(z, constant(g.domain.scales[static_cast<std::size_t>(c)]));
    out = add(out, mul(piece, broadcast_cols(constant(mask), d)));
  }
  return out;
}

ad::Var generate_batch_soft(const FoundationGenerator& g, const ad::Var& z,
                            const ad::Var& p) {
  using namespace ad;
  check_latent_batch(g, z->rows(), z->cols(), p->rows());
  check_soft_rows(p->value, g.domain.num_classes());

  if (g.backend == GenBackend::learned) {
    require(g.learned.has_value(), "generate: learned backend not pretrained");
    auto e = matmul(p, constant(g.learned->emb));
    return learned_forward(*g.learned, z, e);
  }

  const int d = g.domain.data_dim();
  const int yf = g.domain.num_classes();
  Eigen::MatrixXd mu_table(yf, d);
  for (int c = 0; c < yf; ++c)
    mu_table.row(c) = g.domain.means[static_cast<std::size_t>(c)].transpose();

  Var out = matmul(p, constant(mu_table));
  for (int c = 0; c < yf; ++c) {
    auto piece = matmul_nt(z, constant(g.domain.scales[static_cast<std::size_t>(c)]));
    out = add(out, mul(piece, broadcast_cols(col(p, c), d)));
  }
  return out;
}

Eigen::VectorXd generate(const FoundationGenerator& g, const Eigen::VectorXd& z,
                         int label) {
  auto zv = ad::constant(z.transpose());
  return generate_batch(g, zv, {label})->value.row(0).transpose();
}

Eigen::VectorXd generate(const FoundationGenerator& g, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& soft_label) {
  auto zv = ad::constant(z.transpose());
  auto pv = ad::constant(soft_label.transpose());
  return generate_batch_soft(g, zv, pv)->value.row(0).transpose();
}

Eigen::MatrixXd generate_batch_value(const FoundationGenerator& g,
                                     const Eigen::MatrixXd& z,
                                     const std::vector<int>& labels) {
  if (g.backend == GenBackend::learned) {
    return generate_batch(g, ad::constant(z), labels)->value;
  }
  check_latent_batch(g, static_cast<int>(z.rows()), static_cast<int>(z.cols()),
                     static_cast<int>(labels.size()));
  Eigen::MatrixXd out(z.rows(), g.domain.data_dim());
  for (int i = 0; i < z.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    require(c >= 0 && c < g.domain.num_classes(), "generate: label out of range");
    out.row(i) = (g.domain.means[static_cast<std::size_t>(c)] +
                  g.domain.scales[static_cast<std::size_t>(c)] * z.row(i).transpose())
                     .transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Target task
// ---------------------------------------------------------------------------

std::uint64_t Dataset::checksum() const {
  std::uint64_t h = hash_matrix(x, fnv1a64("dataset"));
  if (!y.empty())
    h = fnv1a64_bytes(y.data(), y.size() * sizeof(int), h);
  return h;
}

std::uint64_t TargetTask::data_checksum() const {
  std::uint64_t h = fnv1a64("task");
  h = fnv1a64_bytes(&train_.x, 0, h);  // keep field order stable
  for (const Dataset* d : {&train_, &val_, &du_, &test_}) {
    std::uint64_t dh = d->checksum();
    h = fnv1a64_bytes(&dh, sizeof(dh), h);
  }
  return h;
}

std::vector<int> pick_task_classes(const FoundationDomain& domain,
                                   const TaskSpec& spec) {
  require_cfg(spec.num_classes >= 2, "task: num_classes must be >= 2");
  require_cfg(spec.num_classes <= domain.num_classes(),
              "task: num_classes exceeds foundation classes");
  if (!spec.class_pick.empty()) {
    require_cfg(static_cast<int>(spec.class_pick.size()) == spec.num_classes,
                "task: class_pick size must equal num_classes");
    for (int c : spec.class_pick)
      require_cfg(c >= 0 && c < domain.num_classes(),
                  "task: class_pick entry out of range");
    return spec.class_pick;
  }
  std::vector<int> all(static_cast<std::size_t>(domain.num_classes()));
  std::iota(all.begin(), all.end(), 0);
  Rng rng(stream_seed(spec.seed, "task_classes"));
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(spec.num_classes));
  std::sort(all.begin(), all.end());
  return all;
}

namespace {

struct ShiftTransform {
  Eigen::MatrixXd rot;  // scale * rotation
  Eigen::VectorXd offset;
};

ShiftTransform make_shift(const FoundationDomain& domain, const TaskSpec& spec) {
  ShiftTransform t;
  const int d = domain.data_dim();
  Rng rng(stream_seed(spec.seed, "task_shift"));
  if (spec.shift.rotate) {
    t.rot = spec.shift.scale * random_orthonormal(d, d, rng);
  } else {
    t.rot = spec.shift.scale * Eigen::MatrixXd::Identity(d, d);
  }
  Eigen::VectorXd dir = rng.normal_matrix(d, 1);
  const double n = dir.norm();
  t.offset = (n > 0 ? spec.shift.translation / n : 0.0) * dir;
  return t;
}

}  // namespace

Dataset sample_task_dataset(const FoundationDomain& domain, const TaskSpec& spec,
                            const std::vector<int>& class_map, int per_class,
                            std::uint64_t stream) {
  const auto t = make_shift(domain, spec);
  const int k = static_cast<int>(class_map.size());
  Dataset ds;
  ds.x.resize(per_class * k, domain.data_dim());
  ds.y.resize(static_cast<std::size_t>(per_class * k));
  Rng rng(stream);
  int row = 0;
  for (int i = 0; i < per_class; ++i) {
    for (int cls = 0; cls < k; ++cls) {
      const int fc = class_map[static_cast<std::size_t>(cls)];
      Eigen::VectorXd z = rng.normal_matrix(domain.latent_dim(), 1);
      Eigen::VectorXd xf = domain.means[static_cast<std::size_t>(fc)] +
                           domain.scales[static_cast<std::size_t>(fc)] * z;
      Eigen::VectorXd x = t.rot * xf + t.offset;
      if (spec.shift.noise_sigma > 0.0)
        x += spec.shift.noise_sigma * rng.normal_matrix(domain.data_dim(), 1);
      ds.x.row(row) = x.transpose();
      ds.y[static_cast<std::size_t>(row)] = cls;
      ++row;
    }
  }
  return ds;
}

TargetTask make_target_task(const FoundationDomain& domain, const TaskSpec& spec) {
  require_cfg(spec.labels_per_class >= 1, "task: labels_per_class must be >= 1");
  require_cfg(spec.val_per_class >= 1, "task: val_per_class must be >= 1");
  require_cfg(spec.test_per_class >= 1, "task: test_per_class must be >= 1");
  auto cmap = pick_task_classes(domain, spec);
  Dataset train = sample_task_dataset(domain, spec, cmap, spec.labels_per_class,
                                      stream_seed(spec.seed, "task_train"));
  Dataset val = sample_task_dataset(domain, spec, cmap, spec.val_per_class,
                                    stream_seed(spec.seed, "task_val"));
  Dataset du;
  if (spec.unlabeled_per_class > 0) {
    du = sample_task_dataset(domain, spec, cmap, spec.unlabeled_per_class,
                             stream_seed(spec.seed, "task_unlabeled"));
  } else {
    du.x.resize(0, domain.data_dim());
  }
  Dataset test = sample_task_dataset(domain, spec, cmap, spec.test_per_class,
                                     stream_seed(spec.seed, "task_test"));
  return TargetTask(std::move(cmap), std::move(train), std::move(val),
                    std::move(du), std::move(test));
}

// ---------------------------------------------------------------------------
// Foundation classifier
// ---------------------------------------------------------------------------

Eigen::MatrixXd FoundationClassifier::predict_proba_batch(
    const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = (x * w1).rowwise() + b1;
  h = (h.array() > 0.0).select(h, leak * h);
  Eigen::MatrixXd logits = (h * w2).rowwise() + b2;
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
    p.row(i) = (e / e.sum()).matrix();
  }
  return p;
}

Eigen::VectorXd FoundationClassifier::predict_proba(const Eigen::VectorXd& x) const {
  return predict_proba_batch(x.transpose()).row(0).transpose();
}

std::uint64_t FoundationClassifier::checksum() const {
  std::uint64_t h = fnv1a64("fclassifier");
  h = hash_matrix(w1, h);
  h = hash_matrix(b1, h);
  h = hash_matrix(w2, h);
  h = hash_matrix(b2, h);
  return h;
}

FoundationClassifier pretrain_foundation_classifier(const FoundationDomain& domain,
                                                    const ClassifierBudget& budget) {
  require(budget.samples_per_class >= 2, "pretrain: samples_per_class too small");
  require(budget.epochs >= 1, "pretrain: epochs must be >= 1");
  using namespace ad;

  const int yf = domain.num_classes();
  const int d = domain.data_dim();
  auto gen = make_analytic_generator(domain);

  // Training and held-out pools of fresh analytic samples.
  auto make_pool = [&](int per_class, std::uint64_t seed) {
    Eigen::MatrixXd x(per_class * yf, d);
    std::vector<int> y(static_cast<std::size_t>(per_class * yf));
    Rng rng(seed);
    int row = 0;
    for (int i = 0; i < per_class; ++i) {
      for (int c = 0; c < yf; ++c) {
        Eigen::VectorXd z = rng.normal_matrix(domain.latent_dim(), 1);
        x.row(row) = (domain.means[static_cast<std::size_t>(c)] +
                      domain.scales[static_cast<std::size_t>(c)] * z)
                         .transpose();
        y[static_cast<std::size_t>(row)] = c;
        ++row;
      }
    }
    return std::make_pair(std::move(x), std::move(y));
  };

  auto [train_x, train_y] = make_pool(budget.samples_per_class,
                                      stream_seed(budget.seed, "fc_train"));
  auto [hold_x, hold_y] = make_pool(std::max(2, budget.samples_per_class / 5),
                                    stream_seed(budget.seed, "fc_holdout"));

  Rng init(stream_seed(budget.seed, "fc_init"));
  const int hidden = budget.hidden;
  auto w1 = leaf(init.normal_matrix(d, hidden) * std::sqrt(2.0 / d));
  auto b1 = leaf(Eigen::MatrixXd::Zero(1, hidden));
  auto w2 = leaf(init.normal_matrix(hidden, yf) * std::sqrt(2.0 / hidden));
  auto b2 = leaf(Eigen::MatrixXd::Zero(1, yf));
  std::vector<Var> params{w1, b1, w2, b2};
  Adam opt(params, budget.lr);

  const int n = static_cast<int>(train_x.rows());
  const int bsz = std::min(budget.batch, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng shuf(stream_seed(budget.seed, "fc_shuffle"));

  for (int epoch = 0; epoch < budget.epochs; ++epoch) {
    shuf.shuffle(order);
    for (int start = 0; start < n; start += bsz) {
      const int m = std::min(bsz, n - start);
      Eigen::MatrixXd xb(m, d);
      std::vector<int> yb(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) {
        xb.row(i) = train_x.row(order[static_cast<std::size_t>(start + i)]);
        yb[static_cast<std::size_t>(i)] =
            train_y[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
      }
      auto h = leaky_relu(add(matmul(constant(xb), w1),
                              broadcast_rows(b1, m)), 0.01);
      auto logits = add(matmul(h, w2), broadcast_rows(b2, m));
      auto loss = cross_entropy_mean(logits, yb);
      opt.step(gradients(loss, params));
    }
  }

  FoundationClassifier fc;
  fc.w1 = w1->value;
  fc.b1 = b1->value.row(0);
  fc.w2 = w2->value;
  fc.b2 = b2->value.row(0);

  Eigen::MatrixXd proba = fc.predict_proba_batch(hold_x);
  int correct = 0;
  for (int i = 0; i < proba.rows(); ++i) {
    int arg = 0;
    proba.row(i).maxCoeff(&arg);
    if (arg == hold_y[static_cast<std::size_t>(i)]) ++correct;
  }
  fc.holdout_accuracy = static_cast<double>(correct) / proba.rows();
  if (fc.holdout_accuracy < budget.accuracy_floor) {
    throw RunError("foundation classifier pretraining failed: held-out accuracy " +
                   std::to_string(fc.holdout_accuracy) + " below floor " +
                   std::to_string(budget.accuracy_floor));
  }
  return fc;
}

FoundationGenerator pretrain_learned_generator(const FoundationDomain& domain,
                                               const GeneratorBudget& budget) {
  using namespace ad;
  const int yf = domain.num_classes();
  const int d = domain.data_dim();
  const int dz = domain.latent_dim();

  // Paired (z, c) -> analytic sample training set; the analytic generator
  // is the regression target.
  auto make_pairs = [&](int count, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd z = rng.normal_matrix(count, dz);
    std::vector<int> c(static_cast<std::size_t>(count));
    for (auto& ci : c) ci = rng.below(yf);
    auto analytic = make_analytic_generator(domain);
    Eigen::MatrixXd x = generate_batch_value(analytic, z, c);
    return std::make_tuple(std::move(z), std::move(c), std::move(x));
  };

  auto [train_z, train_c, train_x] =
      make_pairs(budget.samples, stream_seed(budget.seed, "gen_train"));
  auto [hold_z, hold_c, hold_x] = make_pairs(
      std::max(64, budget.samples / 8), stream_seed(budget.seed, "gen_holdout"));

  Rng init(stream_seed(budget.seed, "gen_init"));
  const int h = budget.hidden, de = budget.embed_dim;
  auto emb = leaf(init.normal_matrix(yf, de) * 0.5);
  auto w_z = leaf(init.normal_matrix(dz, h) * std::sqrt(1.0 / dz));
  auto w_g = leaf(init.normal_matrix(de, h) * std::sqrt(1.0 / de));
  auto b_g = leaf(Eigen::MatrixXd::Ones(1, h));
  auto w_o = leaf(init.normal_matrix(h, d) * std::sqrt(1.0 / h));
  auto w_m = leaf(init.normal_matrix(de, d) * std::sqrt(1.0 / de));
  auto b_m = leaf(Eigen::MatrixXd::Zero(1, d));
  std::vector<Var> params{emb, w_z, w_g, b_g, w_o, w_m, b_m};
  Adam opt(params, budget.lr);

  auto forward = [&](const Eigen::MatrixXd& z, const std::vector<int>& c) {
    const int m = static_cast<int>(z.rows());
    auto e = take_rows(emb, c);
    auto u = matmul(constant(z), w_z);
    auto gates = add(matmul(e, w_g), broadcast_rows(b_g, m));
    auto x = matmul(mul(u, gates), w_o);
    return add(x, add(matmul(e, w_m), broadcast_rows(b_m, m)));
  };

  const int n = static_cast<int>(train_z.rows());
  const int bsz = std::min(budget.batch, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng shuf(stream_seed(budget.seed, "gen_shuffle"));

  for (int epoch = 0; epoch < budget.epochs; ++epoch) {
    shuf.shuffle(order);
    for (int start = 0; start < n; start += bsz) {
      const int m = std::min(bsz, n - start);
      Eigen::MatrixXd zb(m, dz), xb(m, d);
      std::vector<int> cb(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) {
        const int r = order[static_cast<std::size_t>(start + i)];
        zb.row(i) = train_z.row(r);
        xb.row(i) = train_x.row(r);
        cb[static_cast<std::size_t>(i)] = train_c[static_cast<std::size_t>(r)];
      }
      auto pred = forward(zb, cb);
      auto loss = mean(mul(sub(pred, constant(xb)), sub(pred, constant(xb))));
      opt.step(gradients(loss, params));
    }
  }

  // Relative conditional MSE against the analytic oracle on held-out pairs.
  auto pred = forward(hold_z, hold_c)->value;
  double mse = 0.0, ref = 0.0;
  for (int i = 0; i < pred.rows(); ++i) {
    mse += (pred.row(i) - hold_x.row(i)).squaredNorm();
    const auto& a = domain.scales[static_cast<std::size_t>(
        hold_c[static_cast<std::size_t>(i)])];
    ref += (a * hold_z.row(i).transpose()).squaredNorm();
  }
  mse /= pred.rows();
  ref /= pred.rows();
  const double rel = mse / std::max(ref, 1e-12);
  if (rel > budget.rel_mse_threshold) {
    throw RunError(
        "learned generator pretraining did not converge: relative MSE " +
        std::to_string(rel) + " above threshold " +
        std::to_string(budget.rel_mse_threshold));
  }

  FoundationGenerator g;
  g.backend = GenBackend::learned;
  g.domain = domain;
  LearnedGenParams lp;
  lp.emb = emb->value;
  lp.w_z = w_z->value;
  lp.w_g = w_g->value;
  lp.b_g = b_g->value.row(0);
  lp.w_o = w_o->value;
  lp.w_m = w_m->value;
  lp.b_m = b_m->value.row(0);
  g.learned = std::move(lp);
  return g;
}

}  // namespace mpssl
