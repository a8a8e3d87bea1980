#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpssl/config.hpp"
#include "mpssl/foundation.hpp"
#include "mpssl/trainer.hpp"

namespace mpssl {

// ---------------------------------------------------------------------------
// Split protocol: 50:50 labeled/unlabeled, labeled side subsampled to
// `labeled_fraction` (remainder joins the unlabeled pool), then 9:1
// train/validation. Stratified at every stage; the test split is held out
// upstream. All index sets are disjoint and seed-deterministic.
// ---------------------------------------------------------------------------

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> unlabeled;
};

SplitIndices split_dataset_indices(const std::vector<int>& labels,
                                   double labeled_fraction, std::uint64_t seed);

struct SplitDatasets {
  Dataset train;
  Dataset val;
  Dataset unlabeled;
};

SplitDatasets split_dataset(const Dataset& raw, double labeled_fraction,
                            std::uint64_t seed);

// Exact integer arithmetic of the protocol (shared with tests/oracles):
// labeled pool = floor(n/2); kept = llround(fraction * pool);
// val = llround(kept / 10); train = kept - val.
struct SplitArithmetic {
  int labeled_pool;
  int kept;
  int train;
  int val;
  int unlabeled;
};
SplitArithmetic split_arithmetic(int n, double labeled_fraction);

// ---------------------------------------------------------------------------
// Experiment orchestration
// ---------------------------------------------------------------------------

struct FoundationArtifacts {
  FoundationGenerator generator;
  std::optional<FoundationClassifier> classifier;
};

FoundationArtifacts build_foundation(const ExperimentConfig& cfg,
                                     bool need_classifier);

TargetTask build_task(const ExperimentConfig& cfg, const FoundationDomain& domain);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_test_accuracy = 0.0;
  double best_val_accuracy = 0.0;
  double best_test_accuracy = 0.0;
  double chosen_lambda = 0.0;
  double wall_seconds = 0.0;
};

struct ExperimentResult {
  std::string out_dir;
  std::vector<SeedOutcome> outcomes;
  double mean_final_test_accuracy = 0.0;
  double std_final_test_accuracy = 0.0;
  int n_success = 0;
  bool all_ok() const { return n_success == static_cast<int>(outcomes.size()); }
};

// One sub-run per seed (failures are recorded and the other seeds continue),
// then a summary with mean +/- std of final test accuracy. Writes
// config.txt, seed_<s>/metrics.jsonl, seed_<s>/checkpoint.txt, summary.json.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir);

// ---------------------------------------------------------------------------
// Ablations
// ---------------------------------------------------------------------------

struct AblationCell {
  std::string row_name;
  ExperimentConfig cfg;
};

extern const char* const kAblationPresets[6];

std::vector<AblationCell> expand_ablation(const std::string& preset,
                                          const ExperimentConfig& base);

struct AblationRow {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_seed;
  bool ok = false;
};

struct AblationResult {
  std::string preset;
  std::vector<AblationRow> rows;
  bool all_ok() const;
};

// Runs every cell over the shared seed list and writes
// ablation_<preset>.json and ablation_<preset>.txt under out_dir.
AblationResult run_ablation(const std::string& preset,
                            const ExperimentConfig& base,
                            const std::string& out_dir);

// Pretrains/loads foundation artifacts and writes a foundation checkpoint.
std::string pretrain_foundation_to(const ExperimentConfig& cfg,
                                   const std::string& out_dir);

// Plot emission from run directories (see plot.hpp for the SVG writer).
std::vector<std::string> emit_plots(const std::vector<std::string>& run_dirs,
                                    const std::string& out_dir);

}  // namespace mpssl
