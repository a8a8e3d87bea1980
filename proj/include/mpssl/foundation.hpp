#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "mpssl/autodiff.hpp"
#include "mpssl/rng.hpp"

namespace mpssl {

// ---------------------------------------------------------------------------
// Foundation domain: |Y_F| classes, each an affine-Gaussian generator
// x = mu_c + A_c z with z ~ N(0, I).
// ---------------------------------------------------------------------------

struct DomainSpec {
  int num_classes = 10;
  int data_dim = 8;
  int latent_dim = 4;
  std::uint64_t seed = 1;
  double separation = 5.0;  // minimum pairwise distance between class means
  double sv_min = 0.6;      // singular value range of A_c
  double sv_max = 1.4;
};

struct FoundationDomain {
  DomainSpec spec;
  std::vector<Eigen::VectorXd> means;   // mu_c in R^d
  std::vector<Eigen::MatrixXd> scales;  // A_c, d x d_z, full column rank

  int num_classes() const { return spec.num_classes; }
  int data_dim() const { return spec.data_dim; }
  int latent_dim() const { return spec.latent_dim; }
  std::uint64_t checksum() const;
};

FoundationDomain make_foundation_domain(const DomainSpec& spec);

// Latent batch: row i depends only on (seed, i), not on count.
Eigen::MatrixXd sample_latent(int latent_dim, int count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Frozen conditional generator over the domain.
// ---------------------------------------------------------------------------

enum class GenBackend { analytic, learned };

// Gated conditional decoder: x = ((z Wz) .* (e Wg + bg)) Wo + e Wm + bm,
// e = onehot(c) Emb (soft labels mix embeddings). Frozen after pretraining.
struct LearnedGenParams {
  Eigen::MatrixXd emb;  // |Y_F| x d_e
  Eigen::MatrixXd w_z;  // d_z x H
  Eigen::MatrixXd w_g;  // d_e x H
  Eigen::RowVectorXd b_g;
  Eigen::MatrixXd w_o;  // H x d
  Eigen::MatrixXd w_m;  // d_e x d
  Eigen::RowVectorXd b_m;
};

struct FoundationGenerator {
  GenBackend backend = GenBackend::analytic;
  FoundationDomain domain;
  std::optional<LearnedGenParams> learned;

  std::uint64_t checksum() const;
};

FoundationGenerator make_analytic_generator(FoundationDomain domain);

// Graph-building batch forms; differentiable w.r.t. z (and soft labels p).
// z: B x d_z. labels: one class per row. p: B x |Y_F| rows on the simplex.
ad::Var generate_batch(const FoundationGenerator& g, const ad::Var& z,
                       const std::vector<int>& labels);
ad::Var generate_batch_soft(const FoundationGenerator& g, const ad::Var& z,
                            const ad::Var& p);

// Single-sample forms matching the hard/soft conditioning contract.
Eigen::VectorXd generate(const FoundationGenerator& g, const Eigen::VectorXd& z,
                         int label);
Eigen::VectorXd generate(const FoundationGenerator& g, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& soft_label);

// Plain batch evaluation (no graph) for dataset synthesis and statistics.
Eigen::MatrixXd generate_batch_value(const FoundationGenerator& g,
                                     const Eigen::MatrixXd& z,
                                     const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Target task derived from the foundation domain.
// ---------------------------------------------------------------------------

struct Dataset {
  Eigen::MatrixXd x;  // n x d
  std::vector<int> y;
  int size() const { return static_cast<int>(x.rows()); }
  std::uint64_t checksum() const;
};

struct ShiftParams {
  double scale = 1.0;        // isotropic scaling of foundation outputs
  bool rotate = false;       // apply a seeded rotation
  double translation = 0.0;  // magnitude of a seeded translation direction
  double noise_sigma = 0.0;  // additive observation noise (outside G_F's span)
};

struct TaskSpec {
  int num_classes = 4;
  std::vector<int> class_pick;  // foundation classes; empty = seeded choice
  ShiftParams shift;
  std::uint64_t seed = 1;
  int labels_per_class = 4;
  int val_per_class = 2;
  int unlabeled_per_class = 50;
  int test_per_class = 100;
};

class TargetTask {
 public:
  TargetTask(std::vector<int> class_map, Dataset train, Dataset val,
             Dataset unlabeled, Dataset test)
      : class_map_(std::move(class_map)),
        train_(std::move(train)),
        val_(std::move(val)),
        du_(std::move(unlabeled)),
        test_(std::move(test)) {}

  int num_classes() const { return static_cast<int>(class_map_.size()); }
  const Dataset& train() const { return train_; }
  const Dataset& val() const { return val_; }
  const Dataset& test() const { return test_; }

  // Oracle-SSL data source. Every read is counted; gSSL methods must leave
  // the counter at zero.
  const Dataset& unlabeled() const {
    ++du_reads_;
    return du_;
  }
  std::int64_t unlabeled_read_count() const { return du_reads_; }
  int unlabeled_size() const { return du_.size(); }

  // Ground-truth class -> foundation class mapping, for evaluation only.
  const std::vector<int>& eval_class_map() const { return class_map_; }

  std::uint64_t data_checksum() const;

 private:
  std::vector<int> class_map_;
  Dataset train_, val_, du_, test_;
  mutable std::int64_t du_reads_ = 0;
};

TargetTask make_target_task(const FoundationDomain& domain, const TaskSpec& spec);

// Samples `count` task-distributed points per requested class label.
// Used both by make_target_task and by the 50:50/9:1 protocol pool builder.
Dataset sample_task_dataset(const FoundationDomain& domain, const TaskSpec& spec,
                            const std::vector<int>& class_map, int per_class,
                            std::uint64_t stream);

std::vector<int> pick_task_classes(const FoundationDomain& domain,
                                   const TaskSpec& spec);

// ---------------------------------------------------------------------------
// Foundation classifier f_{theta_F} (for the P-SSL baseline).
// ---------------------------------------------------------------------------

struct FoundationClassifier {
  Eigen::MatrixXd w1;
  Eigen::RowVectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::RowVectorXd b2;
  double leak = 0.01;
  int num_outputs() const { return static_cast<int>(w2.cols()); }

  Eigen::VectorXd predict_proba(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd predict_proba_batch(const Eigen::MatrixXd& x) const;
  double holdout_accuracy = 0.0;
  std::uint64_t checksum() const;
};

struct ClassifierBudget {
  int samples_per_class = 500;
  int epochs = 40;
  int batch = 256;
  double lr = 1e-2;
  int hidden = 64;
  double accuracy_floor = 0.95;
  std::uint64_t seed = 7;
};

FoundationClassifier pretrain_foundation_classifier(const FoundationDomain& domain,
                                                    const ClassifierBudget& budget);

struct GeneratorBudget {
  int samples = 8192;
  int epochs = 300;
  int batch = 256;
  double lr = 2e-3;
  int hidden = 64;
  int embed_dim = 16;
  double rel_mse_threshold = 0.05;
  std::uint64_t seed = 11;
};

FoundationGenerator pretrain_learned_generator(const FoundationDomain& domain,
                                               const GeneratorBudget& budget);

}  // namespace mpssl
