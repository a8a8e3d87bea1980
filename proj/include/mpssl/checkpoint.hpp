#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mpssl/classifier.hpp"
#include "mpssl/foundation.hpp"
#include "mpssl/latent_search.hpp"
#include "mpssl/optim.hpp"

namespace mpssl {

// Versioned text checkpoint. Values are written as C hexfloats, so a
// save/load round trip restores every double bit for bit.
struct Checkpoint {
  int schema_version = 1;
  std::string kind;
  std::uint64_t seed = 0;
  std::string config_hash;
  long epoch = 0;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, ad::Matrix>> tensors;

  const ad::Matrix& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
  std::string meta_value(const std::string& key) const;
  long meta_long(const std::string& key) const;
  double meta_double(const std::string& key) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// ---- run checkpoints (theta, phi, xi, optimizer state, epoch, seed) ----

void save_run_checkpoint(const std::string& path, const ClassifierParams& theta,
                         const MapperParams& phi, const ConverterParams& xi,
                         const SgdMomentum& sgd, const Adam& outer_opt,
                         int epoch, std::uint64_t seed,
                         std::uint64_t config_hash);

// Rebuilds the classifier (architecture from checkpoint meta).
ClassifierParams load_run_classifier(const Checkpoint& ck);

// ---- foundation checkpoints (domain, generator backend, classifier) ----

void save_foundation_checkpoint(const std::string& path,
                                const FoundationGenerator& gen,
                                const FoundationClassifier* fclf);

struct FoundationBundle {
  FoundationGenerator generator;
  std::optional<FoundationClassifier> classifier;
};

FoundationBundle load_foundation_checkpoint(const std::string& path);

}  // namespace mpssl
