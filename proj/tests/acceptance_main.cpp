// Acceptance suite: one check per criterion, one PASS/FAIL line each.
// Finite-difference oracles are implemented locally so they stay independent
// of the gradient code they certify.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpssl/checkpoint.hpp"
#include "mpssl/harness.hpp"
#include "mpssl/metrics.hpp"

#ifndef MPSSL_SOURCE_DIR
#define MPSSL_SOURCE_DIR "."
#endif

using namespace mpssl;
namespace fs = std::filesystem;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

Eigen::MatrixXd fd_grad(const std::function<double()>& f, const ad::Var& leaf,
                        double h = 1e-6) {
  Eigen::MatrixXd g(leaf->rows(), leaf->cols());
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

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
               double floor = 1e-4) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double d = std::max({floor, std::abs(a(i, j)), std::abs(b(i, j))});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / d);
    }
  return worst;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Small random bilevel instance (total parameter count <= 200).
struct Instance {
  FoundationDomain domain;
  FoundationGenerator gen;
  ClassifierParams theta;
  MapperParams phi;
  ConverterParams xi;
  ScrConfig scr;
  LmoBatch batch;

  explicit Instance(std::uint64_t seed) {
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

    Rng rng(seed + 3);
    const int b = 3;
    batch.labeled_x = rng.normal_matrix(b, 5);
    batch.labeled_y.resize(b);
    for (auto& y : batch.labeled_y) y = rng.below(2);
    batch.val_x = rng.normal_matrix(b, 5);
    batch.val_y = batch.labeled_y;
    batch.z = rng.normal_matrix(b, 2);
    batch.noise_seed = seed + 4;
  }

  int total_params() const {
    int n = 0;
    for (const auto& p : theta.all()) n += static_cast<int>(p->value.size());
    for (const auto& p : phi.params()) n += static_cast<int>(p->value.size());
    for (const auto& p : xi.params()) n += static_cast<int>(p->value.size());
    return n;
  }
};

// ---------------------------------------------------------------------------
// 1. Meta-gradient oracle
// ---------------------------------------------------------------------------
Outcome criterion1() {
  InnerStepConfig ic;
  ic.eta = 0.05;
  ic.lambda = 0.4;
  OuterStepConfig oc;
  oc.lambda_gap = 2.0;

  double worst = 0.0;
  Rng seeds(1001);
  for (int t = 0; t < 10; ++t) {
    Instance in(seeds.next_u64());
    if (in.total_params() > 200)
      return {false, "instance exceeds 200 parameters"};

    auto synthetic = synthesize_unlabeled(in.phi, in.xi, in.gen,
                                          ad::constant(in.batch.z),
                                          in.batch.labeled_y, in.batch.noise_seed);
    auto theta_p = inner_step(in.theta, ad::constant(in.batch.labeled_x),
                              in.batch.labeled_y, synthetic, ic, in.scr,
                              in.batch.noise_seed, true);
    auto outer = outer_loss(theta_p, in.batch.val_x, in.batch.val_y, in.theta,
                            ad::constant(in.batch.labeled_x), synthetic, oc);
    std::vector<ad::Var> wrt = in.phi.params();
    auto xs = in.xi.params();
    wrt.insert(wrt.end(), xs.begin(), xs.end());
    auto grads = ad::gradients(outer, wrt);

    auto value = [&] {
      return lmo_outer_loss_value(in.phi, in.xi, in.theta, in.gen, in.batch, ic,
                                  oc, in.scr);
    };
    // h = 1e-6: a wider stencil can straddle a leaky-ReLU kink, where central
    // differences average the two slopes and stop being a valid oracle.
    for (std::size_t i = 0; i < wrt.size(); ++i) {
      worst = std::max(worst, rel_err(grads[i], fd_grad(value, wrt[i], 1e-6)));
    }
  }
  return {worst < 1e-3, "10 instances, worst rel err " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 2. Loss-gradient suite
// ---------------------------------------------------------------------------
Outcome criterion2() {
  double worst = 0.0;
  std::string worst_loss = "-";
  Rng seeds(2002);

  auto sweep = [&](const char* label, const std::function<ad::Var()>& fn,
                   const std::vector<ad::Var>& wrt) {
    for (const auto& p : wrt) {
      auto g = ad::gradients(fn(), {p})[0];
      auto fg = fd_grad([&] { return fn()->scalar_value(); }, p);
      const double e = rel_err(g, fg, 1e-4);
      if (e > worst) {
        worst = e;
        worst_loss = label;
      }
    }
  };

  for (int trial = 0; trial < 20; ++trial) {
    ClassifierConfig cc;
    cc.input_dim = 4;
    cc.hidden1 = 6;
    cc.hidden2 = 4;  // feature width <= 8
    cc.num_classes = 3;
    cc.seed = seeds.next_u64();
    auto theta = make_classifier(cc);
    Rng rng(seeds.next_u64());
    const int b = 1 + rng.below(4);  // batch <= 4
    auto x = ad::constant(rng.normal_matrix(b, 4));
    auto x2 = ad::constant(rng.normal_matrix(b, 4));
    std::vector<int> y(b);
    for (auto& yy : y) yy = rng.below(3);
    const std::uint64_t ns = seeds.next_u64();
    ScrConfig sc;

    sweep("supervised", [&] { return supervised_loss(theta, x, y); }, theta.all());
    for (DistanceKind d : {DistanceKind::cosine, DistanceKind::l1,
                           DistanceKind::l2, DistanceKind::smooth_l1}) {
      ScrConfig v = sc;
      v.distance = d;
      sweep("scr", [&] { return scr_loss(theta, x, v, ns); }, theta.extractor());
    }
    {
      GapConfig g{GapKind::mse, 0.0};
      sweep("gap_mse", [&] { return gap_loss(theta, x, x2, g); }, theta.extractor());
    }
    if (b >= 2) {
      GapConfig g{GapKind::mmd, 0.9};
      sweep("gap_mmd", [&] { return gap_loss(theta, x, x2, g); }, theta.extractor());
    }
    sweep("fixmatch",
          [&] {
            return fixmatch_like_loss(theta, x, 0.3, sc.weak, sc.strong, ns).loss;
          },
          theta.all());
  }
  return {worst < 1e-4,
          "20 instances/loss, worst rel err " + fmt("%.2e", worst) + " (" +
              worst_loss + ")"};
}

// ---------------------------------------------------------------------------
// 3. Gumbel-softmax distributional check + straight-through bitwise equality
// ---------------------------------------------------------------------------
Outcome criterion3() {
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
    auto h = convert_label_hard(conv, {0}, 37 + static_cast<std::uint64_t>(i));
    int arg = 0;
    h->value.row(0).maxCoeff(&arg);
    counts(arg) += 1;
  }
  const double z = std::exp(2.0) + std::exp(1.0) + 1.0;
  const Eigen::Vector3d p(std::exp(2.0) / z, std::exp(1.0) / z, 1.0 / z);
  double worst_se = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double se = std::sqrt(p(c) * (1.0 - p(c)) / n);
    worst_se = std::max(worst_se, std::abs(counts(c) / n - p(c)) / se);
  }

  // Straight-through: identical downstream weights, bitwise-equal gradients.
  ConverterConfig c2 = cc;
  c2.num_classes = 2;
  c2.num_foundation_classes = 5;
  c2.tau = 0.7;
  auto conv2 = make_converter(c2);
  Rng rng(33);
  conv2.logits->value = rng.normal_matrix(2, 5);
  Eigen::MatrixXd w = rng.normal_matrix(3, 5);
  std::vector<int> y{0, 1, 1};
  auto down = [&](const ad::Var& v) { return ad::sum(ad::mul(v, ad::constant(w))); };
  auto gh = ad::gradients(down(convert_label_hard(conv2, y, 11)), {conv2.logits})[0];
  auto gs = ad::gradients(down(convert_label_soft(conv2, y, 11)), {conv2.logits})[0];
  const bool st_bitwise = gh == gs;

  const bool pass = worst_se < 3.0 && st_bitwise;
  return {pass, "1e5 draws, worst dev " + fmt("%.2f", worst_se) +
                    " SE; straight-through bitwise " +
                    (st_bitwise ? "equal" : "UNEQUAL")};
}

// ---------------------------------------------------------------------------
// 4. SCR bounds and invariances
// ---------------------------------------------------------------------------
Outcome criterion4() {
  Rng seeds(4004);
  bool bounds_ok = true, zero_ok = true, scale_ok = true, head_ok = true;
  for (int t = 0; t < 50; ++t) {
    ClassifierConfig cc;
    cc.input_dim = 6;
    cc.hidden1 = 7;
    cc.hidden2 = 5;
    cc.num_classes = 3;
    cc.seed = seeds.next_u64();
    auto theta = make_classifier(cc);
    Rng rng(seeds.next_u64());
    auto x = ad::constant(rng.normal_matrix(3, 6));
    ScrConfig sc;
    auto loss = scr_loss(theta, x, sc, seeds.next_u64());
    const double v = loss->scalar_value();
    bounds_ok = bounds_ok && v >= 0.0 && v <= 2.0;
    for (const auto& h : theta.head())
      head_ok = head_ok && ad::gradients(loss, {h})[0].isZero(0.0);

    // Zero under identical branches.
    ScrConfig ident;
    ident.weak = {AugKind::weak, 0.0, 0.0, 0.0};
    ident.strong = {AugKind::strong, 0.0, 0.0, 0.0};
    zero_ok = zero_ok &&
              std::abs(scr_loss(theta, x, ident, 1)->scalar_value()) <= 1e-12;

    // Scale invariance of the cosine distance on feature pairs.
    Eigen::MatrixXd u = rng.normal_matrix(2, 5), w = rng.normal_matrix(2, 5);
    const double base = feature_consistency(ad::constant(u), ad::constant(w),
                                            DistanceKind::cosine)
                            ->scalar_value();
    const double scaled =
        feature_consistency(ad::constant(Eigen::MatrixXd(4.2 * u)),
                            ad::constant(Eigen::MatrixXd(0.37 * w)),
                            DistanceKind::cosine)
            ->scalar_value();
    scale_ok = scale_ok && std::abs(base - scaled) <= 1e-6;
  }
  const bool pass = bounds_ok && zero_ok && scale_ok && head_ok;
  std::string detail = std::string("bounds ") + (bounds_ok ? "ok" : "BAD") +
                       ", identical-branch zero " + (zero_ok ? "ok" : "BAD") +
                       ", scaling " + (scale_ok ? "ok" : "BAD") +
                       ", head grad zero " + (head_ok ? "ok" : "BAD");
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 5. Gap-driven latent recovery
// ---------------------------------------------------------------------------
Outcome criterion5() {
  DomainSpec ds;
  ds.num_classes = 4;
  ds.data_dim = 5;
  ds.latent_dim = 2;
  ds.seed = 900;
  auto domain = make_foundation_domain(ds);
  auto gen = make_analytic_generator(domain);
  ClassifierConfig cc;
  cc.input_dim = 5;
  cc.hidden1 = 6;
  cc.hidden2 = 4;
  cc.num_classes = 2;
  cc.seed = 901;
  auto theta = make_classifier(cc);
  MapperConfig mc;
  mc.latent_dim = 2;
  mc.num_classes = 2;
  mc.embed_dim = 3;
  mc.hidden = 6;
  mc.seed = 902;
  auto phi = make_mapper(mc);
  ConverterConfig xc;
  xc.num_classes = 2;
  xc.num_foundation_classes = 4;
  xc.tau = 1.0;
  xc.mode = ConverterMode::hard_gumbel;
  auto xi = make_converter(xc);
  // Converter pinned to the true classes: together with the ground-truth
  // affine map below, an exact zero-gap solution exists in parameter space.
  for (int r = 0; r < 2; ++r) {
    xi.logits->value.row(r).setConstant(-20.0);
    xi.logits->value(r, r) = 20.0;
  }
  ScrConfig scr;
  scr.weak.noise_sigma = 0.05;

  Rng rng(903);
  const int b = 8;
  LmoBatch batch;
  batch.z = rng.normal_matrix(b, 2);
  batch.labeled_y.resize(b);
  for (auto& y : batch.labeled_y) y = rng.below(2);
  Eigen::MatrixXd w_true = 0.6 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd b_true(2);
  b_true << 1.0, -0.5;
  Eigen::MatrixXd z_mapped =
      (batch.z * w_true.transpose()).rowwise() + b_true.transpose();
  batch.labeled_x = generate_batch_value(gen, z_mapped, batch.labeled_y);
  batch.val_x = batch.labeled_x;
  batch.val_y = batch.labeled_y;

  InnerStepConfig ic;
  ic.eta = 0.05;
  ic.lambda = 0.2;
  OuterStepConfig oc;
  oc.lambda_gap = 10.0;
  oc.val_weight = 0.0;  // gap-only objective
  std::vector<ad::Var> params = phi.params();
  auto xs = xi.params();
  params.insert(params.end(), xs.begin(), xs.end());
  Adam opt(params, 0.05);

  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    LmoBatch bb = batch;
    bb.noise_seed = 5000 + static_cast<std::uint64_t>(step);
    auto rep = lmo_step(phi, xi, opt, theta, gen, bb, ic, oc, scr);
    if (step == 0) first = rep.gap_loss_value;
    last = rep.gap_loss_value;
  }
  const double reduction = 1.0 - last / first;
  return {reduction >= 0.90, "gap " + fmt("%.4f", first) + " -> " +
                                 fmt("%.4f", last) + " (" +
                                 fmt("%.1f", 100.0 * reduction) + "% reduction)"};
}

// ---------------------------------------------------------------------------
// 6. Directional desk-scale reproduction
// ---------------------------------------------------------------------------
Outcome criterion6() {
  const std::string cfg_dir = std::string(MPSSL_SOURCE_DIR) + "/configs";
  auto base_cfg = load_experiment_config(cfg_dir + "/default.cfg");
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  auto run_method = [&](const ExperimentConfig& cfg, Method m,
                        std::uint64_t seed) {
    auto artifacts = build_foundation(cfg, m == Method::pssl);
    auto task = build_task(cfg, artifacts.generator.domain);
    auto tc = make_trainer_config(cfg, seed, m);
    return train_run(task, artifacts.generator,
                     artifacts.classifier ? &*artifacts.classifier : nullptr, tc);
  };

  // Part A: default toy task, paired seeds, three methods.
  std::vector<double> base_a, mp_a, naive_a;
  for (auto s : seeds) {
    base_a.push_back(run_method(base_cfg, Method::base, s).final_test_accuracy);
    mp_a.push_back(run_method(base_cfg, Method::mpssl, s).final_test_accuracy);
    naive_a.push_back(
        run_method(base_cfg, Method::naive_gssl, s).final_test_accuracy);
  }
  double d_base = 0.0, d_naive = 0.0;
  std::printf("    paired per-seed differences (mpssl-base, mpssl-naive):\n");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const double db = mp_a[i] - base_a[i];
    const double dn = mp_a[i] - naive_a[i];
    std::printf("      seed %llu: %+0.4f  %+0.4f\n",
                static_cast<unsigned long long>(seeds[i]), db, dn);
    d_base += db;
    d_naive += dn;
  }
  d_base /= seeds.size();
  d_naive /= seeds.size();

  // Part B: 10% vs 100% labeled fractions under the split protocol.
  auto proto_cfg = load_experiment_config(cfg_dir + "/protocol.cfg");
  auto gap_at = [&](double frac) {
    ExperimentConfig c = proto_cfg;
    c.labeled_fraction = frac;
    c.hash = fnv1a64(canonical_config_text(c));
    double gap = 0.0;
    for (auto s : seeds) {
      const double b = run_method(c, Method::base, s).final_test_accuracy;
      const double m = run_method(c, Method::mpssl, s).final_test_accuracy;
      gap += m - b;
    }
    return gap / seeds.size();
  };
  const double gap10 = gap_at(0.10);
  const double gap100 = gap_at(1.00);
  std::printf(
      "    documented trend: mpssl-base gap %+.4f at 10%% labels vs %+.4f at "
      "100%% labels (%s at the small-label setting)\n",
      gap10, gap100, gap10 >= gap100 ? "at least as large" : "smaller");

  const bool pass = d_base >= 0.0 && d_naive >= 0.0;
  return {pass, "mean(mpssl-base) = " + fmt("%+.4f", d_base) +
                    ", mean(mpssl-naive) = " + fmt("%+.4f", d_naive) +
                    ", gap@10% " + fmt("%+.4f", gap10) + " vs gap@100% " +
                    fmt("%+.4f", gap100)};
}

// ---------------------------------------------------------------------------
// 7. Ablation machinery fidelity
// ---------------------------------------------------------------------------
Outcome criterion7() {
  const std::string cfg_dir = std::string(MPSSL_SOURCE_DIR) + "/configs";
  auto cfg = load_experiment_config(cfg_dir + "/default.cfg");

  auto names = [&](const std::string& preset) {
    std::vector<std::string> out;
    for (const auto& c : expand_ablation(preset, cfg)) out.push_back(c.row_name);
    return out;
  };

  const std::vector<std::string> want_mapper{"base_model", "unconditional_mapper",
                                             "conditional_mapper"};
  const std::vector<std::string> want_conv{
      "soft_label_emb",        "soft_gumbel_softmax",  "hard_gumbel_tau_1e-01",
      "hard_gumbel_tau_1e-03", "hard_gumbel_tau_1e-05", "hard_gumbel_tau_1e-07"};
  const std::vector<std::string> want_scr{"fixmatch_style_full_model",
                                          "l1_distance", "l2_distance",
                                          "smooth_l1_distance", "cosine_scr"};
  const std::vector<std::string> want_lmo{"base_model", "mpssl_wo_lmo",
                                          "mpssl_wo_gap_loss", "mpssl_wo_val_loss",
                                          "mpssl_full"};
  bool rows_ok = names("mapper_conditioning") == want_mapper &&
                 names("converter_variants") == want_conv &&
                 names("scr_distances") == want_scr &&
                 names("lmo_components") == want_lmo;

  // Tau grid values of the converter preset.
  auto conv_cells = expand_ablation("converter_variants", cfg);
  bool tau_ok = conv_cells[2].cfg.converter.tau == 1e-1 &&
                conv_cells[3].cfg.converter.tau == 1e-3 &&
                conv_cells[4].cfg.converter.tau == 1e-5 &&
                conv_cells[5].cfg.converter.tau == 1e-7;

  // Paired seeds across all cells of every preset.
  bool seeds_ok = true;
  for (const char* preset : kAblationPresets) {
    for (const auto& cell : expand_ablation(preset, cfg))
      seeds_ok = seeds_ok && cell.cfg.seeds == cfg.seeds;
  }

  // Emission path: run one preset end to end at a tiny budget.
  ExperimentConfig tiny = cfg;
  tiny.seeds = {1, 2};
  tiny.loop.epochs = 2;
  tiny.task.unlabeled_per_class = 4;
  tiny.task.test_per_class = 10;
  tiny.hash = fnv1a64(canonical_config_text(tiny));
  const fs::path out = fs::temp_directory_path() / "mpssl_acceptance_ablate";
  fs::remove_all(out);
  auto res = run_ablation("mapper_conditioning", tiny, out.string());
  const bool emitted = res.all_ok() && res.rows.size() == 3 &&
                       fs::exists(out / "ablation_mapper_conditioning.json") &&
                       fs::exists(out / "ablation_mapper_conditioning.txt");
  bool per_seed_ok = true;
  for (const auto& row : res.rows)
    per_seed_ok = per_seed_ok && row.per_seed.size() == 2;
  fs::remove_all(out);

  const bool pass = rows_ok && tau_ok && seeds_ok && emitted && per_seed_ok;
  std::string detail = std::string("row sets ") + (rows_ok ? "ok" : "BAD") +
                       ", tau grid " + (tau_ok ? "ok" : "BAD") +
                       ", shared seeds " + (seeds_ok ? "ok" : "BAD") +
                       ", emission " + (emitted && per_seed_ok ? "ok" : "BAD");
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 8. gSSL contract and determinism audit
// ---------------------------------------------------------------------------
Outcome criterion8() {
  DomainSpec ds;
  ds.num_classes = 8;
  ds.data_dim = 6;
  ds.latent_dim = 3;
  ds.seed = 2;
  auto domain = make_foundation_domain(ds);
  auto gen = make_analytic_generator(domain);
  TaskSpec ts;
  ts.num_classes = 3;
  ts.seed = 4;
  ts.labels_per_class = 4;
  ts.val_per_class = 3;
  ts.unlabeled_per_class = 10;
  ts.test_per_class = 25;
  ts.shift.noise_sigma = 1.0;

  ClassifierBudget budget;
  budget.samples_per_class = 100;
  budget.epochs = 12;
  budget.hidden = 32;
  budget.accuracy_floor = 0.8;
  auto fclf = pretrain_foundation_classifier(domain, budget);

  auto cfg = [&](Method m, std::uint64_t seed) {
    TrainerConfig tc;
    tc.loop.method = m;
    tc.loop.seed = seed;
    tc.loop.epochs = 4;
    tc.loop.batch = 8;
    tc.loop.milestones = {3};
    tc.loop.lambda = 0.6;
    tc.inner.lambda = 0.6;
    tc.model.hidden1 = 8;
    tc.model.hidden2 = 6;
    tc.mapper.embed_dim = 4;
    tc.mapper.hidden = 8;
    tc.converter.tau = 1.0;
    return tc;
  };

  bool counter_ok = true;
  for (Method m : {Method::mpssl, Method::naive_gssl, Method::pssl}) {
    auto task = make_target_task(domain, ts);
    (void)train_run(task, gen, &fclf, cfg(m, 3));
    if (task.unlabeled_read_count() != 0) counter_ok = false;
  }

  // Determinism: identical seeds, identical metric streams.
  auto t1 = make_target_task(domain, ts);
  auto t2 = make_target_task(domain, ts);
  auto r1 = train_run(t1, gen, nullptr, cfg(Method::mpssl, 17));
  auto r2 = train_run(t2, gen, nullptr, cfg(Method::mpssl, 17));
  bool det_ok = r1.history.size() == r2.history.size();
  for (std::size_t i = 0; det_ok && i < r1.history.size(); ++i) {
    const auto& a = r1.history[i];
    const auto& b = r2.history[i];
    det_ok = a.train_loss == b.train_loss && a.val_loss == b.val_loss &&
             a.val_accuracy == b.val_accuracy &&
             a.test_accuracy == b.test_accuracy && a.scr_loss == b.scr_loss &&
             a.gap_loss == b.gap_loss &&
             a.meta_grad_norm_phi == b.meta_grad_norm_phi;
  }
  for (std::size_t i = 0; det_ok && i < r1.final_theta.size(); ++i)
    det_ok = r1.final_theta[i] == r2.final_theta[i];

  const bool pass = counter_ok && det_ok;
  return {pass, std::string("D_u reads = 0 for gSSL runs: ") +
                    (counter_ok ? "yes" : "NO") + "; same-seed streams identical: " +
                    (det_ok ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------
// 9. Split protocol arithmetic on 100 random configurations
// ---------------------------------------------------------------------------
Outcome criterion9() {
  Rng rng(9009);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const int k = 2 + rng.below(6);
    const int n = k * (20 + rng.below(100));
    const double fracs[] = {0.10, 0.25, 0.50, 1.00};
    const double f = fracs[rng.below(4)];
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % k;
    Rng shuffler(rng.next_u64());
    shuffler.shuffle(labels);

    SplitIndices s;
    try {
      s = split_dataset_indices(labels, f, rng.next_u64());
    } catch (const std::exception&) {
      continue;  // starved class legitimately rejected
    }
    ++checked;

    // Independent oracle of the 50:50 then 9:1 arithmetic.
    const int labeled_pool = n / 2;
    const int kept = static_cast<int>(std::llround(f * labeled_pool));
    const int val = static_cast<int>(std::llround(kept / 10.0));
    const int train = kept - val;
    const int unlabeled = n - kept;
    if (static_cast<int>(s.train.size()) != train ||
        static_cast<int>(s.val.size()) != val ||
        static_cast<int>(s.unlabeled.size()) != unlabeled)
      return {false, "arithmetic mismatch at n=" + std::to_string(n)};

    std::set<int> seen;
    for (const auto* part : {&s.train, &s.val, &s.unlabeled}) {
      for (int idx : *part) {
        if (!seen.insert(idx).second)
          return {false, "overlapping splits at n=" + std::to_string(n)};
      }
    }
    if (static_cast<int>(seen.size()) != n)
      return {false, "splits do not cover the raw set"};
  }
  return {checked >= 90,
          std::to_string(checked) + "/100 configs exact and disjoint"};
}

}  // namespace

int main() {
  struct Row {
    int id;
    const char* name;
    std::function<Outcome()> fn;
    double budget_seconds;
  };
  const std::vector<Row> rows = {
      {1, "meta-gradient finite-difference oracle", criterion1, 60.0},
      {2, "loss-gradient finite-difference suite", criterion2, 120.0},
      {3, "gumbel-softmax distribution + straight-through", criterion3, 0.0},
      {4, "scr bounds and invariances", criterion4, 0.0},
      {5, "gap-driven latent recovery", criterion5, 120.0},
      {6, "directional desk-scale reproduction", criterion6, 1800.0},
      {7, "ablation machinery fidelity", criterion7, 0.0},
      {8, "gssl contract + determinism audit", criterion8, 0.0},
      {9, "split protocol arithmetic", criterion9, 0.0},
  };

  int failures = 0;
  for (const auto& row : rows) {
    const double t0 = now_seconds();
    Outcome oc;
    try {
      oc = row.fn();
    } catch (const std::exception& e) {
      oc = {false, std::string("exception: ") + e.what()};
    }
    const double dt = now_seconds() - t0;
    bool in_budget = row.budget_seconds <= 0.0 || dt <= row.budget_seconds;
    if (!in_budget) oc.pass = false;
    std::printf("[%d] %-48s %s  %s (%.1fs%s)\n", row.id, row.name,
                oc.pass ? "PASS" : "FAIL", oc.detail.c_str(), dt,
                in_budget ? "" : ", OVER BUDGET");
    std::fflush(stdout);
    if (!oc.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", rows.size());
  } else {
    std::printf("acceptance: %d criteria FAILED\n", failures);
  }
  return failures;
}
