#include "mpssl/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "mpssl/harness.hpp"
#include "mpssl/lmo.hpp"
#include "mpssl/rng.hpp"

namespace mpssl {

namespace {

using ad::Matrix;
using ad::Var;

Matrix numeric_grad(const std::function<double()>& f, const Var& leaf,
                    double h = 1e-6) {
  Matrix g(leaf->rows(), leaf->cols());
  for (int i = 0; i < leaf->rows(); ++i) {
    for (int j = 0; j < leaf->cols(); ++j) {
      const double orig = leaf->value(i, j);
      const double step = h * std::max(1.0, std::abs(orig));
      leaf->value(i, j) = orig + step;
      const double fp = f();
      leaf->value(i, j) = orig - step;
      const double fm = f();
      leaf->value(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * step);
    }
  }
  return g;
}

double max_rel_err(const Matrix& a, const Matrix& b, double floor = 1e-5) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double d = std::max({floor, std::abs(a(i, j)), std::abs(b(i, j))});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / d);
    }
  return worst;
}

struct Fixture {
  FoundationDomain domain;
  FoundationGenerator gen;
  ClassifierParams theta;
  MapperParams phi;
  ConverterParams xi;
  ScrConfig scr;

  explicit Fixture(std::uint64_t seed) {
    DomainSpec ds;
    ds.num_classes = 4;
    ds.data_dim = 5;
    ds.latent_dim = 2;
    ds.seed = seed;
    domain = make_foundation_domain(ds);
    gen = make_analytic_generator(domain);
    ClassifierConfig cc;
    cc.input_dim = 5;
    cc.hidden1 = 6;
    cc.hidden2 = 4;
    cc.num_classes = 2;
    cc.seed = seed + 1;
    theta = make_classifier(cc);
    MapperConfig mc;
    mc.latent_dim = 2;
    mc.num_classes = 2;
    mc.embed_dim = 3;
    mc.hidden = 6;
    mc.seed = seed + 2;
    phi = make_mapper(mc);
    ConverterConfig xc;
    xc.num_classes = 2;
    xc.num_foundation_classes = 4;
    xc.mode = ConverterMode::soft_gumbel;
    xc.tau = 1.0;
    xi = make_converter(xc);
    scr.weak.noise_sigma = 0.05;
  }

  LmoBatch batch(std::uint64_t seed, int b = 3) const {
    Rng rng(seed);
    LmoBatch lb;
    lb.labeled_x = rng.normal_matrix(b, 5);
    lb.labeled_y.resize(static_cast<std::size_t>(b));
    for (auto& y : lb.labeled_y) y = rng.below(2);
    lb.val_x = rng.normal_matrix(b, 5);
    lb.val_y = lb.labeled_y;
    lb.z = rng.normal_matrix(b, 2);
    lb.noise_seed = seed + 77;
    return lb;
  }
};

CheckResult check(const std::string& name, bool pass, const std::string& detail) {
  return {name, pass, detail};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

CheckResult check_loss_gradients(bool quick) {
  const int trials = quick ? 4 : 12;
  double worst = 0.0;
  std::string where = "-";
  Rng seeds(2024);
  for (int t = 0; t < trials; ++t) {
    Fixture fx(seeds.next_u64());
    Rng rng(seeds.next_u64());
    const int b = 3;
    Matrix x = rng.normal_matrix(b, 5);
    std::vector<int> y(b);
    for (auto& yy : y) yy = rng.below(2);
    const std::uint64_t ns = seeds.next_u64();

    auto track = [&](const char* label, const Var& loss,
                     const std::function<double()>& re_eval) {
      for (const auto& p : fx.theta.all()) {
        auto g = ad::gradients(loss, {p})[0];
        auto fg = numeric_grad(re_eval, p);
        const double e = max_rel_err(g, fg);
        if (e > worst) {
          worst = e;
          where = label;
        }
      }
    };

    track("supervised",
          supervised_loss(fx.theta, ad::constant(x), y),
          [&] { return supervised_loss(fx.theta, ad::constant(x), y)->scalar_value(); });

    for (DistanceKind d : {DistanceKind::cosine, DistanceKind::l1,
                           DistanceKind::l2, DistanceKind::smooth_l1}) {
      ScrConfig sc = fx.scr;
      sc.distance = d;
      track("scr", scr_loss(fx.theta, ad::constant(x), sc, ns),
            [&] { return scr_loss(fx.theta, ad::constant(x), sc, ns)->scalar_value(); });
    }

    Matrix x2 = rng.normal_matrix(b, 5);
    for (GapKind k : {GapKind::mse, GapKind::mmd}) {
      GapConfig gc;
      gc.kind = k;
      gc.mmd_bandwidth = 1.0;
      track("gap", gap_loss(fx.theta, ad::constant(x), ad::constant(x2), gc),
            [&] {
              return gap_loss(fx.theta, ad::constant(x), ad::constant(x2), gc)
                  ->scalar_value();
            });
    }

    track("fixmatch",
          fixmatch_like_loss(fx.theta, ad::constant(x), 0.3, fx.scr.weak,
                             fx.scr.strong, ns)
              .loss,
          [&] {
            return fixmatch_like_loss(fx.theta, ad::constant(x), 0.3, fx.scr.weak,
                                      fx.scr.strong, ns)
                .loss->scalar_value();
          });
  }
  return check("loss_gradients_fd", worst < 1e-4,
               "worst rel err " + fmt(worst) + " at " + where);
}

CheckResult check_meta_gradient(bool quick) {
  const int instances = quick ? 2 : 4;
  double worst = 0.0;
  Rng seeds(99);
  for (int t = 0; t < instances; ++t) {
    Fixture fx(seeds.next_u64());
    auto lb = fx.batch(seeds.next_u64());
    InnerStepConfig inner;
    inner.eta = 0.05;
    inner.lambda = 0.4;
    OuterStepConfig outer;
    outer.lambda_gap = 2.0;

    auto outer_var = [&] {
      return lmo_outer_loss_value(fx.phi, fx.xi, fx.theta, fx.gen, lb, inner,
                                  outer, fx.scr);
    };
    std::vector<Var> wrt = fx.phi.params();
    auto xs = fx.xi.params();
    wrt.insert(wrt.end(), xs.begin(), xs.end());

    // Analytic path: rebuild the graph and differentiate.
    auto synthetic = synthesize_unlabeled(fx.phi, fx.xi, fx.gen,
                                          ad::constant(lb.z), lb.labeled_y,
                                          lb.noise_seed);
    auto theta_p = inner_step(fx.theta, ad::constant(lb.labeled_x), lb.labeled_y,
                              synthetic, inner, fx.scr, lb.noise_seed, true);
    auto o = outer_loss(theta_p, lb.val_x, lb.val_y, fx.theta,
                        ad::constant(lb.labeled_x), synthetic, outer);
    auto grads = ad::gradients(o, wrt);
    for (std::size_t i = 0; i < wrt.size(); ++i) {
      auto fg = numeric_grad(outer_var, wrt[i], 1e-6);
      worst = std::max(worst, max_rel_err(grads[i], fg, 1e-4));
    }
  }
  return check("meta_gradient_fd", worst < 1e-3, "worst rel err " + fmt(worst));
}

CheckResult check_gumbel_frequencies() {
  ConverterConfig cc;
  cc.num_classes = 1;
  cc.num_foundation_classes = 3;
  cc.tau = 1.0;
  cc.mode = ConverterMode::hard_gumbel;
  auto conv = make_converter(cc);
  conv.logits->value << 2.0, 1.0, 0.0;

  const int n = 100000;
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    auto hard = convert_label_hard(conv, {0}, 50000 + static_cast<std::uint64_t>(i));
    int arg = 0;
    hard->value.row(0).maxCoeff(&arg);
    counts(arg) += 1.0;
  }
  Eigen::Vector3d p;
  const double z = std::exp(2.0) + std::exp(1.0) + 1.0;
  p << std::exp(2.0) / z, std::exp(1.0) / z, 1.0 / z;
  double worst_sigma = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double se = std::sqrt(p(c) * (1 - p(c)) / n);
    worst_sigma = std::max(worst_sigma, std::abs(counts(c) / n - p(c)) / se);
  }
  return check("gumbel_max_frequencies", worst_sigma < 3.0,
               "worst deviation " + fmt(worst_sigma) + " standard errors");
}

CheckResult check_straight_through() {
  ConverterConfig cc;
  cc.num_classes = 2;
  cc.num_foundation_classes = 5;
  cc.tau = 0.7;
  cc.mode = ConverterMode::hard_gumbel;
  auto conv = make_converter(cc);
  Rng rng(5);
  conv.logits->value = rng.normal_matrix(2, 5);

  std::vector<int> y{0, 1, 1};
  Matrix w = rng.normal_matrix(3, 5);
  auto down = [&](const Var& out) { return ad::sum(ad::mul(out, ad::constant(w))); };
  auto hard_grad =
      ad::gradients(down(convert_label_hard(conv, y, 123)), {conv.logits})[0];
  auto soft_grad =
      ad::gradients(down(convert_label_soft(conv, y, 123)), {conv.logits})[0];
  const bool equal = hard_grad == soft_grad;  // bitwise
  return check("straight_through_bitwise", equal,
               equal ? "hard backward == soft backward" : "gradients differ");
}

CheckResult check_generator() {
  Fixture fx(31);
  Rng rng(32);
  // Soft-label linearity: generate(z,p) == sum_c p_c generate(z, onehot c).
  Eigen::VectorXd z = rng.normal_matrix(2, 1);
  Eigen::VectorXd p(4);
  p << 0.1, 0.2, 0.3, 0.4;
  Eigen::VectorXd mix = generate(fx.gen, z, p);
  Eigen::VectorXd sum_parts = Eigen::VectorXd::Zero(5);
  for (int c = 0; c < 4; ++c) sum_parts += p(c) * generate(fx.gen, z, c);
  const double lin_err = (mix - sum_parts).cwiseAbs().maxCoeff();

  // Jacobian w.r.t. z equals sum_c p_c A_c.
  auto zv = ad::leaf(Matrix(z.transpose()));
  auto pv = ad::constant(Matrix(p.transpose()));
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(5, 2);
  for (int c = 0; c < 4; ++c)
    expected += p(c) * fx.domain.scales[static_cast<std::size_t>(c)];
  double jac_err = 0.0;
  for (int out = 0; out < 5; ++out) {
    auto comp = ad::col(generate_batch_soft(fx.gen, zv, pv), out);
    auto g = ad::gradients(ad::sum(comp), {zv})[0];
    jac_err = std::max(jac_err, (g - expected.row(out)).cwiseAbs().maxCoeff());
  }
  const bool pass = lin_err < 1e-12 && jac_err < 1e-10;
  return check("generator_linearity_jacobian", pass,
               "linearity err " + fmt(lin_err) + ", jacobian err " + fmt(jac_err));
}

CheckResult check_mapper_identity() {
  Fixture fx(41);
  Rng rng(42);
  Matrix z = rng.normal_matrix(6, 2);
  auto out = map_latent(fx.phi, ad::constant(z), {0, 1, 0, 1, 0, 1});
  const double err = (out->value - z).cwiseAbs().maxCoeff();
  return check("mapper_identity_init", err < 1e-12, "max deviation " + fmt(err));
}

CheckResult check_split_protocol(bool quick) {
  // Spec arithmetic: 1000 samples, fraction 1.0 -> 450/50/500.
  {
    auto a = split_arithmetic(1000, 1.0);
    if (a.train != 450 || a.val != 50 || a.unlabeled != 500)
      return check("split_protocol", false, "1000@1.0 arithmetic mismatch");
    auto b = split_arithmetic(1000, 0.10);
    if (b.train + b.val != 50 || b.unlabeled != 950)
      return check("split_protocol", false, "1000@0.1 arithmetic mismatch");
  }
  const int configs = quick ? 10 : 40;
  Rng rng(71);
  for (int t = 0; t < configs; ++t) {
    const int k = 2 + rng.below(5);
    const int n = k * (20 + rng.below(80));
    const double fracs[] = {0.10, 0.25, 0.50, 1.00};
    const double f = fracs[rng.below(4)];
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& y : labels) y = rng.below(k);
    // At least one member per class.
    for (int c = 0; c < k; ++c) labels[static_cast<std::size_t>(c)] = c;
    SplitIndices s;
    try {
      s = split_dataset_indices(labels, f, rng.next_u64());
    } catch (const std::exception&) {
      continue;  // legitimately rejected (class starved); not a failure
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto* part : {&s.train, &s.val, &s.unlabeled}) {
      for (int i : *part) {
        if (seen[static_cast<std::size_t>(i)])
          return check("split_protocol", false, "splits overlap");
        seen[static_cast<std::size_t>(i)] = 1;
      }
    }
    auto a = split_arithmetic(n, f);
    if (static_cast<int>(s.train.size()) != a.train ||
        static_cast<int>(s.val.size()) != a.val ||
        static_cast<int>(s.unlabeled.size()) != a.unlabeled)
      return check("split_protocol", false, "sizes disagree with arithmetic");
  }
  return check("split_protocol", true,
               std::to_string(configs) + " random configs disjoint and exact");
}

CheckResult check_determinism() {
  DomainSpec ds;
  ds.num_classes = 4;
  ds.data_dim = 5;
  ds.latent_dim = 2;
  ds.seed = 3;
  auto domain = make_foundation_domain(ds);
  auto gen = make_analytic_generator(domain);
  TaskSpec ts;
  ts.num_classes = 2;
  ts.seed = 9;
  ts.labels_per_class = 4;
  ts.val_per_class = 2;
  ts.unlabeled_per_class = 4;
  ts.test_per_class = 8;
  TrainerConfig tc;
  tc.loop.epochs = 3;
  tc.loop.batch = 8;
  tc.loop.method = Method::mpssl;
  tc.loop.seed = 17;
  tc.loop.lambda = 0.5;
  tc.model.hidden1 = 6;
  tc.model.hidden2 = 4;
  tc.mapper.embed_dim = 3;
  tc.mapper.hidden = 6;
  tc.converter.tau = 1.0;

  auto t1 = make_target_task(domain, ts);
  auto t2 = make_target_task(domain, ts);
  auto r1 = train_run(t1, gen, nullptr, tc);
  auto r2 = train_run(t2, gen, nullptr, tc);
  bool same = r1.history.size() == r2.history.size();
  for (std::size_t i = 0; same && i < r1.history.size(); ++i) {
    same = r1.history[i].train_loss == r2.history[i].train_loss &&
           r1.history[i].val_accuracy == r2.history[i].val_accuracy &&
           r1.history[i].test_accuracy == r2.history[i].test_accuracy;
  }
  for (std::size_t i = 0; same && i < r1.final_theta.size(); ++i)
    same = r1.final_theta[i] == r2.final_theta[i];
  return check("determinism_audit", same,
               same ? "two same-seed runs bitwise identical" : "runs diverged");
}

CheckResult check_scr_bounds() {
  Fixture fx(55);
  Rng rng(56);
  Matrix x = rng.normal_matrix(4, 5);
  ScrConfig sc;  // defaults: weak/strong active
  auto loss = scr_loss(fx.theta, ad::constant(x), sc, 909);
  const double v = loss->scalar_value();
  bool pass = v >= 0.0 && v <= 2.0;
  // omega gradient exactly zero
  auto head = fx.theta.head();
  auto grads = ad::gradients(loss, head);
  for (const auto& g : grads) pass = pass && g.isZero(0.0);
  return check("scr_bounds_and_head_grad", pass,
               "cosine value " + fmt(v) + ", head grads zero");
}

}  // namespace

std::vector<CheckResult> run_selfchecks(bool quick) {
  std::vector<CheckResult> out;
  out.push_back(check_loss_gradients(quick));
  out.push_back(check_meta_gradient(quick));
  out.push_back(check_gumbel_frequencies());
  out.push_back(check_straight_through());
  out.push_back(check_generator());
  out.push_back(check_mapper_identity());
  out.push_back(check_split_protocol(quick));
  out.push_back(check_scr_bounds());
  out.push_back(check_determinism());
  return out;
}

}  // namespace mpssl
