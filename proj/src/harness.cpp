#include "mpssl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "mpssl/checkpoint.hpp"
#include "mpssl/common.hpp"
#include "mpssl/metrics.hpp"
#include "mpssl/plot.hpp"
#include "mpssl/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace mpssl {

// ---------------------------------------------------------------------------
// Split protocol
// ---------------------------------------------------------------------------

SplitArithmetic split_arithmetic(int n, double labeled_fraction) {
  require(n >= 2, "split_dataset: dataset too small");
  require(labeled_fraction > 0.0 && labeled_fraction <= 1.0,
          "split_dataset: labeled_fraction must be in (0,1]");
  SplitArithmetic a;
  a.labeled_pool = n / 2;
  a.kept = static_cast<int>(std::llround(labeled_fraction * a.labeled_pool));
  a.kept = std::max(1, std::min(a.kept, a.labeled_pool));
  a.val = static_cast<int>(std::llround(a.kept / 10.0));
  a.train = a.kept - a.val;
  a.unlabeled = n - a.kept;
  return a;
}

namespace {

// Largest-remainder apportionment of `total` across classes with weights w.
// Ties break toward the lower class index.
std::vector<int> largest_remainder(const std::vector<int>& w, int total) {
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  require(wsum > 0.0, "split_dataset: no samples to apportion");
  std::vector<int> base(w.size(), 0);
  std::vector<std::pair<double, int>> rem;
  int assigned = 0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    const double share = w[c] * static_cast<double>(total) / wsum;
    base[c] = static_cast<int>(std::floor(share));
    assigned += base[c];
    rem.emplace_back(share - base[c], static_cast<int>(c));
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int i = 0; i < total - assigned; ++i)
    base[static_cast<std::size_t>(rem[static_cast<std::size_t>(i)].second)] += 1;
  return base;
}

}  // namespace

SplitIndices split_dataset_indices(const std::vector<int>& labels,
                                   double labeled_fraction, std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  const SplitArithmetic a = split_arithmetic(n, labeled_fraction);

  int num_classes = 0;
  for (int y : labels) {
    require(y >= 0, "split_dataset: negative label");
    num_classes = std::max(num_classes, y + 1);
  }
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < n; ++i)
    by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]
        .push_back(i);
  std::vector<int> counts;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    require(!by_class[c].empty(),
            "split_dataset: class " + std::to_string(c) + " absent from raw data");
    counts.push_back(static_cast<int>(by_class[c].size()));
    Rng rng(stream_seed(seed, "split_class", c));
    rng.shuffle(by_class[c]);
  }

  // Stage 1: 50:50 labeled pool, stratified.
  auto pool_c = largest_remainder(counts, a.labeled_pool);
  // Stage 2: subsample the labeled pool to the requested fraction.
  auto kept_c = largest_remainder(pool_c, a.kept);
  for (std::size_t c = 0; c < kept_c.size(); ++c) {
    if (kept_c[c] < 1)
      throw RunError("split_dataset: class " + std::to_string(c) +
                     " vanished from the labeled split; use a larger raw set");
  }
  // Stage 3: 9:1 train/val inside the kept labeled set.
  auto val_c = largest_remainder(kept_c, a.val);

  SplitIndices out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& idx = by_class[c];
    const int pool = pool_c[c], kept = kept_c[c], val = val_c[c];
    const int train = kept - val;
    if (train < 1)
      throw RunError("split_dataset: class " + std::to_string(c) +
                     " has no training samples after the 9:1 split; use a "
                     "larger raw set");
    for (int i = 0; i < train; ++i) out.train.push_back(idx[static_cast<std::size_t>(i)]);
    for (int i = train; i < kept; ++i) out.val.push_back(idx[static_cast<std::size_t>(i)]);
    // Remainder of the pool slice plus the unlabeled half.
    for (int i = kept; i < static_cast<int>(idx.size()); ++i)
      out.unlabeled.push_back(idx[static_cast<std::size_t>(i)]);
    (void)pool;
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.unlabeled.begin(), out.unlabeled.end());
  return out;
}

namespace {

Dataset subset(const Dataset& d, const std::vector<int>& idx) {
  Dataset out;
  out.x.resize(static_cast<int>(idx.size()), d.x.cols());
  out.y.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.x.row(static_cast<int>(i)) = d.x.row(idx[i]);
    out.y[i] = d.y[static_cast<std::size_t>(idx[i])];
  }
  return out;
}

}  // namespace

SplitDatasets split_dataset(const Dataset& raw, double labeled_fraction,
                            std::uint64_t seed) {
  auto idx = split_dataset_indices(raw.y, labeled_fraction, seed);
  return {subset(raw, idx.train), subset(raw, idx.val), subset(raw, idx.unlabeled)};
}

// ---------------------------------------------------------------------------
// Foundation / task assembly
// ---------------------------------------------------------------------------

FoundationArtifacts build_foundation(const ExperimentConfig& cfg,
                                     bool need_classifier) {
  if (!cfg.foundation_checkpoint.empty()) {
    auto bundle = load_foundation_checkpoint(cfg.foundation_checkpoint);
    if (need_classifier && !bundle.classifier)
      throw ConfigError("foundation checkpoint '" + cfg.foundation_checkpoint +
                        "' lacks the classifier needed by this method");
    return {std::move(bundle.generator), std::move(bundle.classifier)};
  }
  FoundationDomain domain = make_foundation_domain(cfg.domain);
  FoundationArtifacts out{make_analytic_generator(domain), std::nullopt};
  if (cfg.backend == GenBackend::learned) {
    out.generator = pretrain_learned_generator(domain, cfg.generator_budget);
  }
  if (need_classifier) {
    out.classifier = pretrain_foundation_classifier(domain, cfg.classifier_budget);
  }
  return out;
}

TargetTask build_task(const ExperimentConfig& cfg, const FoundationDomain& domain) {
  if (!cfg.protocol_mode) return make_target_task(domain, cfg.task);

  auto cmap = pick_task_classes(domain, cfg.task);
  require_cfg(cfg.pool_size % cfg.task.num_classes == 0,
              "task.pool_size must be divisible by task.classes");
  const int per_class = cfg.pool_size / cfg.task.num_classes;
  Dataset pool = sample_task_dataset(domain, cfg.task, cmap, per_class,
                                     stream_seed(cfg.task.seed, "task_pool"));
  Dataset test = sample_task_dataset(domain, cfg.task, cmap,
                                     cfg.task.test_per_class,
                                     stream_seed(cfg.task.seed, "task_test"));
  auto splits = split_dataset(pool, cfg.labeled_fraction, cfg.task.seed);
  return TargetTask(std::move(cmap), std::move(splits.train), std::move(splits.val),
                    std::move(splits.unlabeled), std::move(test));
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace {

struct GridChoice {
  TrainedRun run;
  double lambda;
};

GridChoice train_with_lambda_choice(const TargetTask& task,
                                    const FoundationGenerator& gen,
                                    const FoundationClassifier* fclf,
                                    const ExperimentConfig& cfg,
                                    TrainerConfig tc) {
  if (!cfg.lambda_grid || cfg.method == Method::base) {
    return {train_run(task, gen, fclf, tc), tc.loop.lambda};
  }
  GridChoice best;
  bool have = false;
  for (int i = 1; i <= 10; ++i) {
    const double lam = i / 10.0;
    TrainerConfig trial = tc;
    trial.loop.lambda = lam;
    trial.inner.lambda = lam;
    TrainedRun run = train_run(task, gen, fclf, trial);
    if (!have || run.best_val_accuracy > best.run.best_val_accuracy) {
      best = {std::move(run), lam};
      have = true;
    }
  }
  return best;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw RunError("cannot write '" + path + "'");
  out << text;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir) {
  fs::create_directories(out_dir);
  ExperimentResult result;
  result.out_dir = out_dir;

  write_text_file(out_dir + "/config.txt",
                  "# canonical config echo\nconfig_hash = " + cfg.hash_hex() +
                      "\n" + canonical_config_text(cfg));

  const bool need_fclf = cfg.method == Method::pssl;
  auto artifacts = build_foundation(cfg, need_fclf);
  TargetTask task = build_task(cfg, artifacts.generator.domain);

  std::vector<double> finals;
  for (std::uint64_t seed : cfg.seeds) {
    SeedOutcome oc;
    oc.seed = seed;
    const std::string seed_dir = out_dir + "/seed_" + std::to_string(seed);
    fs::create_directories(seed_dir);
    try {
      TrainerConfig tc = make_trainer_config(cfg, seed, cfg.method);
      tc.checkpoint_path = seed_dir + "/checkpoint.txt";
      auto chosen = train_with_lambda_choice(
          task, artifacts.generator,
          artifacts.classifier ? &*artifacts.classifier : nullptr, cfg, tc);
      const TrainedRun& run = chosen.run;
      write_metrics_file(seed_dir + "/metrics.jsonl", cfg.hash_hex(), seed,
                         method_name(cfg.method), run.history);
      oc.ok = true;
      oc.final_test_accuracy = run.final_test_accuracy;
      oc.best_val_accuracy = run.best_val_accuracy;
      oc.best_test_accuracy = run.best_test_accuracy;
      oc.chosen_lambda = chosen.lambda;
      oc.wall_seconds = run.wall_seconds;
      finals.push_back(run.final_test_accuracy);
    } catch (const std::exception& e) {
      oc.ok = false;
      oc.error = e.what();
    }
    result.outcomes.push_back(std::move(oc));
  }

  result.n_success = 0;
  for (const auto& oc : result.outcomes)
    if (oc.ok) ++result.n_success;
  if (!finals.empty()) {
    double mean = std::accumulate(finals.begin(), finals.end(), 0.0) /
                  static_cast<double>(finals.size());
    double var = 0.0;
    for (double f : finals) var += (f - mean) * (f - mean);
    var = finals.size() > 1 ? var / static_cast<double>(finals.size() - 1) : 0.0;
    result.mean_final_test_accuracy = mean;
    result.std_final_test_accuracy = std::sqrt(var);
  }

  json summary;
  summary["schema_version"] = 1;
  summary["config_hash"] = cfg.hash_hex();
  summary["method"] = method_name(cfg.method);
  summary["task_mode"] = cfg.protocol_mode ? "protocol" : "counts";
  summary["labeled_fraction"] = cfg.protocol_mode ? cfg.labeled_fraction : 1.0;
  summary["n_seeds"] = cfg.seeds.size();
  summary["n_success"] = result.n_success;
  summary["mean_final_test_accuracy"] = result.mean_final_test_accuracy;
  summary["std_final_test_accuracy"] = result.std_final_test_accuracy;
  json per_seed = json::array();
  for (const auto& oc : result.outcomes) {
    json j;
    j["seed"] = oc.seed;
    j["status"] = oc.ok ? "ok" : "failed";
    if (!oc.ok) j["error"] = oc.error;
    j["final_test_accuracy"] = oc.final_test_accuracy;
    j["best_val_accuracy"] = oc.best_val_accuracy;
    j["best_test_accuracy"] = oc.best_test_accuracy;
    j["chosen_lambda"] = oc.chosen_lambda;
    j["wall_seconds"] = oc.wall_seconds;
    per_seed.push_back(std::move(j));
  }
  summary["per_seed"] = std::move(per_seed);
  double total_wall = 0.0;
  for (const auto& oc : result.outcomes) total_wall += oc.wall_seconds;
  summary["wall_seconds"] = total_wall;
  write_text_file(out_dir + "/summary.json", summary.dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// Ablations
// ---------------------------------------------------------------------------

const char* const kAblationPresets[6] = {
    "lmo_components",  "mapper_conditioning", "converter_variants",
    "scr_distances",   "gap_kinds",           "dataset_sizes"};

std::vector<AblationCell> expand_ablation(const std::string& preset,
                                          const ExperimentConfig& base) {
  std::vector<AblationCell> cells;
  auto with = [&](const std::string& name,
                  const std::function<void(ExperimentConfig&)>& edit) {
    ExperimentConfig c = base;
    c.method = Method::mpssl;
    c.loop.method = Method::mpssl;
    edit(c);
    c.inner.lambda = c.loop.lambda;
    c.hash = fnv1a64(canonical_config_text(c));  // cells re-hash after edits
    cells.push_back({name, std::move(c)});
  };

  if (preset == "lmo_components") {
    with("base_model", [](ExperimentConfig& c) {
      c.method = Method::base;
      c.loop.method = Method::base;
    });
    with("mpssl_wo_lmo", [](ExperimentConfig& c) { c.lmo_enabled = false; });
    with("mpssl_wo_gap_loss",
         [](ExperimentConfig& c) { c.outer.lambda_gap = 0.0; });
    with("mpssl_wo_val_loss",
         [](ExperimentConfig& c) { c.outer.val_weight = 0.0; });
    with("mpssl_full", [](ExperimentConfig&) {});
  } else if (preset == "mapper_conditioning") {
    with("base_model", [](ExperimentConfig& c) {
      c.method = Method::base;
      c.loop.method = Method::base;
    });
    with("unconditional_mapper",
         [](ExperimentConfig& c) { c.mapper.conditional = false; });
    with("conditional_mapper",
         [](ExperimentConfig& c) { c.mapper.conditional = true; });
  } else if (preset == "converter_variants") {
    with("soft_label_emb", [](ExperimentConfig& c) {
      c.converter.mode = ConverterMode::soft_embedding;
    });
    with("soft_gumbel_softmax", [](ExperimentConfig& c) {
      c.converter.mode = ConverterMode::soft_gumbel;
      c.converter.tau = 1.0;
    });
    for (double tau : {1e-1, 1e-3, 1e-5, 1e-7}) {
      char name[64];
      std::snprintf(name, sizeof(name), "hard_gumbel_tau_%.0e", tau);
      with(name, [tau](ExperimentConfig& c) {
        c.converter.mode = ConverterMode::hard_gumbel;
        c.converter.tau = tau;
      });
    }
  } else if (preset == "scr_distances") {
    with("fixmatch_style_full_model",
         [](ExperimentConfig& c) { c.inner.use_fixmatch_unsup = true; });
    with("l1_distance",
         [](ExperimentConfig& c) { c.scr.distance = DistanceKind::l1; });
    with("l2_distance",
         [](ExperimentConfig& c) { c.scr.distance = DistanceKind::l2; });
    with("smooth_l1_distance",
         [](ExperimentConfig& c) { c.scr.distance = DistanceKind::smooth_l1; });
    with("cosine_scr",
         [](ExperimentConfig& c) { c.scr.distance = DistanceKind::cosine; });
  } else if (preset == "gap_kinds") {
    with("gap_mse", [](ExperimentConfig& c) { c.outer.gap.kind = GapKind::mse; });
    with("gap_mmd", [](ExperimentConfig& c) { c.outer.gap.kind = GapKind::mmd; });
  } else if (preset == "dataset_sizes") {
    for (double frac : {0.10, 0.25, 0.50, 1.00}) {
      for (Method m : {Method::base, Method::mpssl, Method::naive_gssl,
                       Method::pssl, Method::fixmatch_oracle,
                       Method::adaptive_oracle}) {
        char name[80];
        std::snprintf(name, sizeof(name), "%s_frac_%03d", method_name(m).c_str(),
                      static_cast<int>(std::llround(frac * 100)));
        with(name, [frac, m](ExperimentConfig& c) {
          c.method = m;
          c.loop.method = m;
          c.protocol_mode = true;
          c.labeled_fraction = frac;
        });
      }
    }
  } else {
    throw ConfigError("unknown ablation preset '" + preset + "'");
  }
  return cells;
}

bool AblationResult::all_ok() const {
  for (const auto& r : rows)
    if (!r.ok) return false;
  return true;
}

AblationResult run_ablation(const std::string& preset,
                            const ExperimentConfig& base,
                            const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto cells = expand_ablation(preset, base);
  AblationResult result;
  result.preset = preset;

  for (const auto& cell : cells) {
    const std::string cell_dir = out_dir + "/" + cell.row_name;
    auto res = run_experiment(cell.cfg, cell_dir);
    AblationRow row;
    row.name = cell.row_name;
    row.mean = res.mean_final_test_accuracy;
    row.stddev = res.std_final_test_accuracy;
    for (const auto& oc : res.outcomes)
      if (oc.ok) row.per_seed.push_back(oc.final_test_accuracy);
    row.ok = res.all_ok();
    result.rows.push_back(std::move(row));
  }

  json j;
  j["schema_version"] = 1;
  j["preset"] = preset;
  j["config_hash"] = base.hash_hex();
  json seeds = json::array();
  for (auto s : base.seeds) seeds.push_back(s);
  j["seeds"] = std::move(seeds);
  json rows = json::array();
  for (const auto& r : result.rows) {
    json rj;
    rj["name"] = r.name;
    rj["mean_test_accuracy"] = r.mean;
    rj["std_test_accuracy"] = r.stddev;
    rj["per_seed"] = r.per_seed;
    rj["ok"] = r.ok;
    rows.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows);
  write_text_file(out_dir + "/ablation_" + preset + ".json", j.dump(2) + "\n");

  std::string table;
  table += "ablation: " + preset + "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %12s %12s %8s\n", "variant",
                "mean acc", "std", "status");
  table += line;
  for (const auto& r : result.rows) {
    std::snprintf(line, sizeof(line), "%-28s %12.4f %12.4f %8s\n",
                  r.name.c_str(), r.mean, r.stddev, r.ok ? "ok" : "FAILED");
    table += line;
  }
  write_text_file(out_dir + "/ablation_" + preset + ".txt", table);
  return result;
}

std::string pretrain_foundation_to(const ExperimentConfig& cfg,
                                   const std::string& out_dir) {
  fs::create_directories(out_dir);
  FoundationDomain domain = make_foundation_domain(cfg.domain);
  FoundationGenerator gen = cfg.backend == GenBackend::learned
                                ? pretrain_learned_generator(domain,
                                                             cfg.generator_budget)
                                : make_analytic_generator(domain);
  FoundationClassifier fclf =
      pretrain_foundation_classifier(domain, cfg.classifier_budget);
  const std::string path = out_dir + "/foundation.ckpt";
  save_foundation_checkpoint(path, gen, &fclf);
  return path;
}

// ---------------------------------------------------------------------------
// Plot emission
// ---------------------------------------------------------------------------

std::vector<std::string> emit_plots(const std::vector<std::string>& run_dirs,
                                    const std::string& out_dir) {
  require(!run_dirs.empty(), "emit_plots: no run directories given");
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  struct RunInfo {
    std::string name;
    std::string method;
    double fraction;
    double mean_acc;
  };
  std::vector<RunInfo> infos;

  for (const auto& dir : run_dirs) {
    const std::string summary_path = dir + "/summary.json";
    std::ifstream in(summary_path);
    if (!in) throw RunError("emit_plots: missing summary file '" + summary_path + "'");
    json summary;
    try {
      in >> summary;
    } catch (const std::exception& e) {
      throw RunError("emit_plots: corrupt summary file '" + summary_path + "': " +
                     e.what());
    }
    RunInfo info;
    info.name = fs::path(dir).filename().string();
    info.method = summary.at("method").get<std::string>();
    info.fraction = summary.at("labeled_fraction").get<double>();
    info.mean_acc = summary.at("mean_final_test_accuracy").get<double>();
    infos.push_back(info);

    // Per-run curves from every successful seed's metrics stream.
    std::vector<plot::Series> loss_series, acc_series;
    for (const auto& entry : summary.at("per_seed")) {
      if (entry.at("status").get<std::string>() != "ok") continue;
      const std::string mpath =
          dir + "/seed_" + std::to_string(entry.at("seed").get<std::uint64_t>()) +
          "/metrics.jsonl";
      auto records = read_metrics_file(mpath);
      plot::Series train_loss{"train_loss s" +
                                  std::to_string(entry.at("seed").get<long>()),
                              {}};
      plot::Series val_loss{"val_loss s" +
                                std::to_string(entry.at("seed").get<long>()),
                            {}};
      plot::Series test_acc{"test_acc s" +
                                std::to_string(entry.at("seed").get<long>()),
                            {}};
      plot::Series val_acc{"val_acc s" +
                               std::to_string(entry.at("seed").get<long>()),
                           {}};
      for (const auto& r : records) {
        train_loss.points.emplace_back(r.m.epoch, r.m.train_loss);
        val_loss.points.emplace_back(r.m.epoch, r.m.val_loss);
        test_acc.points.emplace_back(r.m.epoch, r.m.test_accuracy);
        val_acc.points.emplace_back(r.m.epoch, r.m.val_accuracy);
      }
      loss_series.push_back(std::move(train_loss));
      loss_series.push_back(std::move(val_loss));
      acc_series.push_back(std::move(test_acc));
      acc_series.push_back(std::move(val_acc));
    }
    const std::string provenance =
        summary.at("config_hash").get<std::string>();
    if (!loss_series.empty()) {
      const std::string lp = out_dir + "/" + info.name + "_loss.svg";
      plot::write_svg_chart(lp, info.name + " loss", "epoch", "loss", loss_series,
                            provenance);
      written.push_back(lp);
      const std::string ap = out_dir + "/" + info.name + "_accuracy.svg";
      plot::write_svg_chart(ap, info.name + " accuracy", "epoch", "accuracy",
                            acc_series, provenance);
      written.push_back(ap);
    }
  }

  // Accuracy vs labeled fraction, one curve per method.
  std::vector<double> fractions;
  for (const auto& i : infos) fractions.push_back(i.fraction);
  std::sort(fractions.begin(), fractions.end());
  fractions.erase(std::unique(fractions.begin(), fractions.end()), fractions.end());
  if (fractions.size() >= 2) {
    std::map<std::string, plot::Series> by_method;
    std::vector<RunInfo> sorted = infos;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return a.fraction < b.fraction;
    });
    for (const auto& i : sorted) {
      auto& s = by_method[i.method];
      s.label = i.method;
      s.points.emplace_back(i.fraction, i.mean_acc);
    }
    std::vector<plot::Series> series;
    for (auto& [_, s] : by_method) series.push_back(std::move(s));
    std::string provenance;
    for (const auto& dir : run_dirs) {
      std::ifstream sin(dir + "/summary.json");
      json sj;
      sin >> sj;
      if (!provenance.empty()) provenance += " ";
      provenance += sj.at("config_hash").get<std::string>();
    }
    const std::string p = out_dir + "/accuracy_vs_fraction.svg";
    plot::write_svg_chart(p, "test accuracy vs labeled fraction",
                          "labeled fraction", "test accuracy", series,
                          provenance);
    written.push_back(p);
  }
  return written;
}

}  // namespace mpssl
