#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpssl/foundation.hpp"
#include "mpssl/trainer.hpp"

namespace mpssl {

// Flat `key = value` config text: '#' comments, typed schema, versioned.
// Unknown keys, bad types, and missing required keys all fail loudly.
struct ExperimentConfig {
  int config_version = 1;
  Method method = Method::mpssl;
  std::vector<std::uint64_t> seeds;

  // foundation
  DomainSpec domain;
  GenBackend backend = GenBackend::analytic;
  std::string foundation_checkpoint;  // optional pre-built bundle
  ClassifierBudget classifier_budget;
  GeneratorBudget generator_budget;

  // task
  TaskSpec task;
  bool protocol_mode = false;
  int pool_size = 800;
  double labeled_fraction = 1.0;

  // model + training
  ClassifierConfig model;
  TrainLoopConfig loop;
  bool lambda_grid = false;

  // mpssl specifics
  InnerStepConfig inner;
  OuterStepConfig outer;
  bool lmo_enabled = true;
  MapperConfig mapper;
  ConverterConfig converter;
  ScrConfig scr;
  int transfer_samples = 512;

  std::uint64_t hash = 0;
  std::string hash_hex() const;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical `key = value` rendering of the parsed config (sorted keys);
// the config hash is the FNV-1a of this text.
std::string canonical_config_text(const ExperimentConfig& cfg);

// Assembles the per-run trainer configuration for one seed.
TrainerConfig make_trainer_config(const ExperimentConfig& cfg, std::uint64_t seed,
                                  Method method);

}  // namespace mpssl
