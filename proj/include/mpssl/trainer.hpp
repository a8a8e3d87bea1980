#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpssl/classifier.hpp"
#include "mpssl/lmo.hpp"

namespace mpssl {

enum class Method {
  base,
  mpssl,
  naive_gssl,
  pssl,
  fixmatch_oracle,
  adaptive_oracle,
  transfer_ssl,
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);
bool method_uses_generator(Method m);
bool method_uses_real_unlabeled(Method m);

struct TrainLoopConfig {
  int epochs = 60;
  int batch = 64;
  int val_batch = 64;
  double lr = 0.01;
  double momentum = 0.9;
  std::vector<int> milestones = {20, 40, 52};  // lr *= 0.1 at each
  double lambda = 0.5;
  double fixmatch_threshold = 0.95;
  double adaptive_momentum = 0.9;
  // Global-norm clip on the classifier gradient; near-zero-norm features can
  // spike the cosine-consistency gradient enough to destabilize SGD. <= 0
  // disables.
  double grad_clip = 1000.0;
  Method method = Method::base;
  std::uint64_t seed = 1;
};

// lr after `epoch` epochs: lr0 * 0.1^(milestones passed)
double learning_rate_at(double lr0, const std::vector<int>& milestones, int epoch);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double scr_loss = 0.0;
  double gap_loss = 0.0;
  double meta_grad_norm_phi = 0.0;
  double meta_grad_norm_xi = 0.0;
  double pseudo_acceptance_rate = 0.0;
  double wall_seconds = 0.0;
};

struct TrainedRun {
  ClassifierConfig model_cfg;
  std::vector<ad::Matrix> final_theta;
  std::vector<ad::Matrix> best_theta;  // epoch with maximal validation accuracy
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  double best_test_accuracy = 0.0;  // test accuracy of the best-val model
  std::vector<EpochMetrics> history;
  double wall_seconds = 0.0;
  std::vector<ad::Matrix> final_phi;  // empty unless MP-SSL
  std::vector<ad::Matrix> final_xi;
};

struct TrainerConfig {
  TrainLoopConfig loop;
  ClassifierConfig model;
  InnerStepConfig inner;  // eta <= 0 tracks the classifier's current lr
  OuterStepConfig outer;
  ScrConfig scr;
  MapperConfig mapper;
  ConverterConfig converter;
  bool lmo_enabled = true;       // false: phi/xi frozen at init (w/o LMO)
  int transfer_samples = 512;    // foundation-domain stream for transfer SSL
  std::string checkpoint_path;   // per-epoch checkpoint; empty disables
  std::uint64_t config_hash = 0;
};

// One full training run. gSSL methods never touch task.unlabeled(); the
// oracle baselines read it through the counted accessor. fclf is required
// for P-SSL only.
TrainedRun train_run(const TargetTask& task, const FoundationGenerator& gen,
                     const FoundationClassifier* fclf, const TrainerConfig& cfg);

// Soft foundation label for a training sample (P-SSL conditioning).
Eigen::VectorXd pssl_label(const FoundationClassifier& fclf,
                           const Eigen::VectorXd& x);

ClassifierParams classifier_from_run(const TrainedRun& run, bool best = false);

}  // namespace mpssl
