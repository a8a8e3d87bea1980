#include "mpssl/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mpssl/common.hpp"

namespace mpssl {

namespace {

enum class KeyType { integer, real, boolean, text, int_list };

struct SchemaEntry {
  const char* key;
  KeyType type;
  const char* default_value;  // nullptr = required
};

// The full schema. Every recognized key appears here; anything else is an
// error with the offending key named.
const SchemaEntry kSchema[] = {
    {"config_version", KeyType::integer, nullptr},
    {"method", KeyType::text, "mpssl"},
    {"seeds", KeyType::int_list, "1,2,3"},

    {"foundation.classes", KeyType::integer, "10"},
    {"foundation.data_dim", KeyType::integer, "8"},
    {"foundation.latent_dim", KeyType::integer, "4"},
    {"foundation.seed", KeyType::integer, "1"},
    {"foundation.separation", KeyType::real, "5.0"},
    {"foundation.sv_min", KeyType::real, "0.6"},
    {"foundation.sv_max", KeyType::real, "1.4"},
    {"foundation.backend", KeyType::text, "analytic"},
    {"foundation.checkpoint", KeyType::text, ""},
    {"foundation.classifier_hidden", KeyType::integer, "64"},
    {"foundation.classifier_samples_per_class", KeyType::integer, "500"},
    {"foundation.classifier_epochs", KeyType::integer, "40"},
    {"foundation.classifier_batch", KeyType::integer, "256"},
    {"foundation.classifier_lr", KeyType::real, "0.01"},
    {"foundation.classifier_accuracy_floor", KeyType::real, "0.95"},
    {"foundation.generator_hidden", KeyType::integer, "64"},
    {"foundation.generator_embed_dim", KeyType::integer, "16"},
    {"foundation.generator_samples", KeyType::integer, "8192"},
    {"foundation.generator_epochs", KeyType::integer, "300"},
    {"foundation.generator_batch", KeyType::integer, "256"},
    {"foundation.generator_lr", KeyType::real, "0.002"},
    {"foundation.generator_rel_mse_threshold", KeyType::real, "0.05"},

    {"task.classes", KeyType::integer, "4"},
    {"task.class_pick", KeyType::int_list, ""},
    {"task.seed", KeyType::integer, "5"},
    {"task.mode", KeyType::text, "counts"},
    {"task.labels_per_class", KeyType::integer, "4"},
    {"task.val_per_class", KeyType::integer, "2"},
    {"task.unlabeled_per_class", KeyType::integer, "50"},
    {"task.test_per_class", KeyType::integer, "100"},
    {"task.pool_size", KeyType::integer, "800"},
    {"task.labeled_fraction", KeyType::real, "1.0"},
    {"task.shift_scale", KeyType::real, "1.0"},
    {"task.shift_rotate", KeyType::boolean, "false"},
    {"task.shift_translation", KeyType::real, "0.5"},
    {"task.noise_sigma", KeyType::real, "0.05"},

    {"model.hidden1", KeyType::integer, "64"},
    {"model.hidden2", KeyType::integer, "32"},
    {"model.leak", KeyType::real, "0.01"},

    {"train.epochs", KeyType::integer, "60"},
    {"train.batch", KeyType::integer, "64"},
    {"train.val_batch", KeyType::integer, "64"},
    {"train.lr", KeyType::real, "0.01"},
    {"train.momentum", KeyType::real, "0.9"},
    {"train.milestones", KeyType::int_list, "20,40,52"},
    {"train.lambda", KeyType::real, "0.5"},
    {"train.lambda_grid", KeyType::boolean, "false"},
    {"train.fixmatch_threshold", KeyType::real, "0.95"},
    {"train.adaptive_momentum", KeyType::real, "0.9"},
    {"train.grad_clip", KeyType::real, "1000.0"},

    {"mpssl.lambda_gap", KeyType::real, "10.0"},
    {"mpssl.val_weight", KeyType::real, "1.0"},
    {"mpssl.meta_mode", KeyType::text, "second_order"},
    {"mpssl.gap_variant", KeyType::text, "feature_pairwise"},
    {"mpssl.gap_kind", KeyType::text, "mse"},
    {"mpssl.mmd_bandwidth", KeyType::real, "0.0"},
    {"mpssl.outer_lr", KeyType::real, "0.0001"},
    {"mpssl.inner_eta", KeyType::real, "0.0"},
    {"mpssl.lmo_enabled", KeyType::boolean, "true"},
    {"mpssl.unsup_loss", KeyType::text, "scr"},
    {"mpssl.grad_clip", KeyType::real, "0.0"},

    {"mapper.conditional", KeyType::boolean, "true"},
    {"mapper.hidden", KeyType::integer, "0"},
    {"mapper.embed_dim", KeyType::integer, "8"},
    {"mapper.init_noise", KeyType::real, "0.01"},

    {"converter.mode", KeyType::text, "hard_gumbel"},
    {"converter.tau", KeyType::real, "1e-5"},

    {"scr.distance", KeyType::text, "cosine"},
    {"scr.smooth_l1_delta", KeyType::real, "1.0"},
    {"aug.weak_sigma", KeyType::real, "0.1"},
    {"aug.strong_sigma", KeyType::real, "0.3"},
    {"aug.strong_mask_prob", KeyType::real, "0.15"},
    {"aug.strong_jitter", KeyType::real, "0.2"},

    {"transfer.samples", KeyType::integer, "512"},
};

const SchemaEntry* find_schema(const std::string& key) {
  for (const auto& e : kSchema)
    if (key == e.key) return &e;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long x = std::stol(v, &pos);
    require_cfg(pos == v.size(), "config: field '" + key +
                                     "' is not an integer: '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("config: field '" + key + "' is not an integer: '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    require_cfg(pos == v.size(),
                "config: field '" + key + "' is not a number: '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("config: field '" + key + "' is not a number: '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config: field '" + key + "' must be true or false: '" + v +
                    "'");
}

std::vector<long> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<long> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  return out;
}

class ParsedConfig {
 public:
  explicit ParsedConfig(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      require_cfg(eq != std::string::npos,
                  "config: line " + std::to_string(lineno) +
                      " is not 'key = value': '" + line + "'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      require_cfg(!key.empty(), "config: empty key at line " + std::to_string(lineno));
      const SchemaEntry* entry = find_schema(key);
      require_cfg(entry != nullptr, "config: unknown key '" + key + "'");
      require_cfg(!values_.count(key), "config: duplicate key '" + key + "'");
      values_[key] = value;
    }
    for (const auto& e : kSchema) {
      if (values_.count(e.key)) continue;
      require_cfg(e.default_value != nullptr,
                  std::string("config: missing required key '") + e.key + "'");
      values_[e.key] = e.default_value;
    }
  }

  long get_int(const std::string& key) const { return parse_int(key, values_.at(key)); }
  double get_real(const std::string& key) const { return parse_real(key, values_.at(key)); }
  bool get_bool(const std::string& key) const { return parse_bool(key, values_.at(key)); }
  const std::string& get_text(const std::string& key) const { return values_.at(key); }
  std::vector<long> get_list(const std::string& key) const {
    return parse_int_list(key, values_.at(key));
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

DistanceKind distance_from_name(const std::string& s) {
  if (s == "cosine") return DistanceKind::cosine;
  if (s == "l1") return DistanceKind::l1;
  if (s == "l2") return DistanceKind::l2;
  if (s == "smooth_l1") return DistanceKind::smooth_l1;
  throw ConfigError("config: unknown scr.distance '" + s + "'");
}

ConverterMode converter_mode_from_name(const std::string& s) {
  if (s == "soft_embedding") return ConverterMode::soft_embedding;
  if (s == "soft_gumbel") return ConverterMode::soft_gumbel;
  if (s == "hard_gumbel") return ConverterMode::hard_gumbel;
  throw ConfigError("config: unknown converter.mode '" + s + "'");
}

}  // namespace

std::string ExperimentConfig::hash_hex() const { return to_hex(hash); }

ExperimentConfig parse_experiment_config(const std::string& text) {
  ParsedConfig p(text);
  ExperimentConfig cfg;

  cfg.config_version = static_cast<int>(p.get_int("config_version"));
  require_cfg(cfg.config_version == 1,
              "config: unsupported config_version " +
                  std::to_string(cfg.config_version));
  cfg.method = method_from_name(p.get_text("method"));
  for (long s : p.get_list("seeds")) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  require_cfg(!cfg.seeds.empty(), "config: seeds must not be empty");

  cfg.domain.num_classes = static_cast<int>(p.get_int("foundation.classes"));
  cfg.domain.data_dim = static_cast<int>(p.get_int("foundation.data_dim"));
  cfg.domain.latent_dim = static_cast<int>(p.get_int("foundation.latent_dim"));
  cfg.domain.seed = static_cast<std::uint64_t>(p.get_int("foundation.seed"));
  cfg.domain.separation = p.get_real("foundation.separation");
  cfg.domain.sv_min = p.get_real("foundation.sv_min");
  cfg.domain.sv_max = p.get_real("foundation.sv_max");
  const std::string backend = p.get_text("foundation.backend");
  if (backend == "analytic") {
    cfg.backend = GenBackend::analytic;
  } else if (backend == "learned") {
    cfg.backend = GenBackend::learned;
  } else {
    throw ConfigError("config: unknown foundation.backend '" + backend + "'");
  }
  cfg.foundation_checkpoint = p.get_text("foundation.checkpoint");
  cfg.classifier_budget.hidden =
      static_cast<int>(p.get_int("foundation.classifier_hidden"));
  cfg.classifier_budget.samples_per_class =
      static_cast<int>(p.get_int("foundation.classifier_samples_per_class"));
  cfg.classifier_budget.epochs =
      static_cast<int>(p.get_int("foundation.classifier_epochs"));
  cfg.classifier_budget.batch =
      static_cast<int>(p.get_int("foundation.classifier_batch"));
  cfg.classifier_budget.lr = p.get_real("foundation.classifier_lr");
  cfg.classifier_budget.accuracy_floor =
      p.get_real("foundation.classifier_accuracy_floor");
  cfg.classifier_budget.seed = cfg.domain.seed;
  cfg.generator_budget.hidden =
      static_cast<int>(p.get_int("foundation.generator_hidden"));
  cfg.generator_budget.embed_dim =
      static_cast<int>(p.get_int("foundation.generator_embed_dim"));
  cfg.generator_budget.samples =
      static_cast<int>(p.get_int("foundation.generator_samples"));
  cfg.generator_budget.epochs =
      static_cast<int>(p.get_int("foundation.generator_epochs"));
  cfg.generator_budget.batch =
      static_cast<int>(p.get_int("foundation.generator_batch"));
  cfg.generator_budget.lr = p.get_real("foundation.generator_lr");
  cfg.generator_budget.rel_mse_threshold =
      p.get_real("foundation.generator_rel_mse_threshold");
  cfg.generator_budget.seed = cfg.domain.seed;

  cfg.task.num_classes = static_cast<int>(p.get_int("task.classes"));
  for (long c : p.get_list("task.class_pick"))
    cfg.task.class_pick.push_back(static_cast<int>(c));
  cfg.task.seed = static_cast<std::uint64_t>(p.get_int("task.seed"));
  const std::string mode = p.get_text("task.mode");
  if (mode == "counts") {
    cfg.protocol_mode = false;
  } else if (mode == "protocol") {
    cfg.protocol_mode = true;
  } else {
    throw ConfigError("config: task.mode must be counts or protocol, got '" +
                      mode + "'");
  }
  cfg.task.labels_per_class = static_cast<int>(p.get_int("task.labels_per_class"));
  cfg.task.val_per_class = static_cast<int>(p.get_int("task.val_per_class"));
  cfg.task.unlabeled_per_class =
      static_cast<int>(p.get_int("task.unlabeled_per_class"));
  cfg.task.test_per_class = static_cast<int>(p.get_int("task.test_per_class"));
  cfg.pool_size = static_cast<int>(p.get_int("task.pool_size"));
  cfg.labeled_fraction = p.get_real("task.labeled_fraction");
  if (cfg.protocol_mode) {
    const double allowed[] = {0.10, 0.25, 0.50, 1.00};
    bool ok = false;
    for (double a : allowed)
      if (std::abs(cfg.labeled_fraction - a) < 1e-12) ok = true;
    require_cfg(ok, "config: task.labeled_fraction must be one of "
                    "0.10, 0.25, 0.50, 1.00");
  }
  cfg.task.shift.scale = p.get_real("task.shift_scale");
  cfg.task.shift.rotate = p.get_bool("task.shift_rotate");
  cfg.task.shift.translation = p.get_real("task.shift_translation");
  cfg.task.shift.noise_sigma = p.get_real("task.noise_sigma");

  cfg.model.hidden1 = static_cast<int>(p.get_int("model.hidden1"));
  cfg.model.hidden2 = static_cast<int>(p.get_int("model.hidden2"));
  cfg.model.leak = p.get_real("model.leak");

  cfg.loop.epochs = static_cast<int>(p.get_int("train.epochs"));
  cfg.loop.batch = static_cast<int>(p.get_int("train.batch"));
  cfg.loop.val_batch = static_cast<int>(p.get_int("train.val_batch"));
  cfg.loop.lr = p.get_real("train.lr");
  cfg.loop.momentum = p.get_real("train.momentum");
  cfg.loop.milestones.clear();
  for (long m : p.get_list("train.milestones"))
    cfg.loop.milestones.push_back(static_cast<int>(m));
  cfg.loop.lambda = p.get_real("train.lambda");
  cfg.lambda_grid = p.get_bool("train.lambda_grid");
  cfg.loop.fixmatch_threshold = p.get_real("train.fixmatch_threshold");
  cfg.loop.adaptive_momentum = p.get_real("train.adaptive_momentum");
  cfg.loop.grad_clip = p.get_real("train.grad_clip");
  cfg.loop.method = cfg.method;

  cfg.outer.lambda_gap = p.get_real("mpssl.lambda_gap");
  cfg.outer.val_weight = p.get_real("mpssl.val_weight");
  const std::string mm = p.get_text("mpssl.meta_mode");
  if (mm == "second_order") {
    cfg.outer.meta_mode = MetaMode::second_order;
  } else if (mm == "first_order") {
    cfg.outer.meta_mode = MetaMode::first_order;
  } else {
    throw ConfigError("config: unknown mpssl.meta_mode '" + mm + "'");
  }
  const std::string gv = p.get_text("mpssl.gap_variant");
  if (gv == "feature_pairwise") {
    cfg.outer.gap_variant = GapVariant::feature_pairwise;
  } else if (gv == "output_batch_mean") {
    cfg.outer.gap_variant = GapVariant::output_batch_mean;
  } else {
    throw ConfigError("config: unknown mpssl.gap_variant '" + gv + "'");
  }
  const std::string gk = p.get_text("mpssl.gap_kind");
  if (gk == "mse") {
    cfg.outer.gap.kind = GapKind::mse;
  } else if (gk == "mmd") {
    cfg.outer.gap.kind = GapKind::mmd;
  } else {
    throw ConfigError("config: unknown mpssl.gap_kind '" + gk + "'");
  }
  cfg.outer.gap.mmd_bandwidth = p.get_real("mpssl.mmd_bandwidth");
  cfg.outer.outer_lr = p.get_real("mpssl.outer_lr");
  cfg.outer.grad_clip = p.get_real("mpssl.grad_clip");
  cfg.inner.eta = p.get_real("mpssl.inner_eta");
  cfg.inner.lambda = cfg.loop.lambda;
  cfg.inner.fixmatch_threshold = cfg.loop.fixmatch_threshold;
  const std::string ul = p.get_text("mpssl.unsup_loss");
  if (ul == "scr") {
    cfg.inner.use_fixmatch_unsup = false;
  } else if (ul == "fixmatch") {
    cfg.inner.use_fixmatch_unsup = true;
  } else {
    throw ConfigError("config: mpssl.unsup_loss must be scr or fixmatch, got '" +
                      ul + "'");
  }
  cfg.lmo_enabled = p.get_bool("mpssl.lmo_enabled");

  cfg.mapper.conditional = p.get_bool("mapper.conditional");
  cfg.mapper.hidden = static_cast<int>(p.get_int("mapper.hidden"));
  cfg.mapper.embed_dim = static_cast<int>(p.get_int("mapper.embed_dim"));
  cfg.mapper.init_noise = p.get_real("mapper.init_noise");

  cfg.converter.mode = converter_mode_from_name(p.get_text("converter.mode"));
  cfg.converter.tau = p.get_real("converter.tau");
  require_cfg(cfg.converter.tau > 0.0, "config: converter.tau must be positive");

  cfg.scr.distance = distance_from_name(p.get_text("scr.distance"));
  cfg.scr.smooth_l1_delta = p.get_real("scr.smooth_l1_delta");
  cfg.scr.weak = {AugKind::weak, p.get_real("aug.weak_sigma"), 0.0, 0.0};
  cfg.scr.strong = {AugKind::strong, p.get_real("aug.strong_sigma"),
                    p.get_real("aug.strong_mask_prob"),
                    p.get_real("aug.strong_jitter")};
  cfg.transfer_samples = static_cast<int>(p.get_int("transfer.samples"));

  // The hash is always computed from the canonical re-rendering of the typed
  // fields, so edited configs (ablation cells) re-hash consistently.
  cfg.hash = fnv1a64(canonical_config_text(cfg));
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
  // Complete re-rendering of the typed fields, sorted by key. Parsing this
  // text reproduces the config; its FNV-1a is the config hash.
  std::map<std::string, std::string> kv;
  auto put_int = [&](const char* k, long v) { kv[k] = std::to_string(v); };
  auto put_real = [&](const char* k, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    kv[k] = buf;
  };
  auto put_bool = [&](const char* k, bool v) { kv[k] = v ? "true" : "false"; };
  auto put_ilist = [&](const char* k, const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "," : "") + std::to_string(v[i]);
    kv[k] = s;
  };

  put_int("config_version", cfg.config_version);
  kv["method"] = method_name(cfg.method);
  {
    std::string s;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      s += (i ? "," : "") + std::to_string(cfg.seeds[i]);
    kv["seeds"] = s;
  }

  put_int("foundation.classes", cfg.domain.num_classes);
  put_int("foundation.data_dim", cfg.domain.data_dim);
  put_int("foundation.latent_dim", cfg.domain.latent_dim);
  put_int("foundation.seed", static_cast<long>(cfg.domain.seed));
  put_real("foundation.separation", cfg.domain.separation);
  put_real("foundation.sv_min", cfg.domain.sv_min);
  put_real("foundation.sv_max", cfg.domain.sv_max);
  kv["foundation.backend"] =
      cfg.backend == GenBackend::analytic ? "analytic" : "learned";
  kv["foundation.checkpoint"] = cfg.foundation_checkpoint;
  put_int("foundation.classifier_hidden", cfg.classifier_budget.hidden);
  put_int("foundation.classifier_samples_per_class",
          cfg.classifier_budget.samples_per_class);
  put_int("foundation.classifier_epochs", cfg.classifier_budget.epochs);
  put_int("foundation.classifier_batch", cfg.classifier_budget.batch);
  put_real("foundation.classifier_lr", cfg.classifier_budget.lr);
  put_real("foundation.classifier_accuracy_floor",
           cfg.classifier_budget.accuracy_floor);
  put_int("foundation.generator_hidden", cfg.generator_budget.hidden);
  put_int("foundation.generator_embed_dim", cfg.generator_budget.embed_dim);
  put_int("foundation.generator_samples", cfg.generator_budget.samples);
  put_int("foundation.generator_epochs", cfg.generator_budget.epochs);
  put_int("foundation.generator_batch", cfg.generator_budget.batch);
  put_real("foundation.generator_lr", cfg.generator_budget.lr);
  put_real("foundation.generator_rel_mse_threshold",
           cfg.generator_budget.rel_mse_threshold);

  put_int("task.classes", cfg.task.num_classes);
  put_ilist("task.class_pick", cfg.task.class_pick);
  put_int("task.seed", static_cast<long>(cfg.task.seed));
  kv["task.mode"] = cfg.protocol_mode ? "protocol" : "counts";
  put_int("task.labels_per_class", cfg.task.labels_per_class);
  put_int("task.val_per_class", cfg.task.val_per_class);
  put_int("task.unlabeled_per_class", cfg.task.unlabeled_per_class);
  put_int("task.test_per_class", cfg.task.test_per_class);
  put_int("task.pool_size", cfg.pool_size);
  put_real("task.labeled_fraction", cfg.labeled_fraction);
  put_real("task.shift_scale", cfg.task.shift.scale);
  put_bool("task.shift_rotate", cfg.task.shift.rotate);
  put_real("task.shift_translation", cfg.task.shift.translation);
  put_real("task.noise_sigma", cfg.task.shift.noise_sigma);

  put_int("model.hidden1", cfg.model.hidden1);
  put_int("model.hidden2", cfg.model.hidden2);
  put_real("model.leak", cfg.model.leak);

  put_int("train.epochs", cfg.loop.epochs);
  put_int("train.batch", cfg.loop.batch);
  put_int("train.val_batch", cfg.loop.val_batch);
  put_real("train.lr", cfg.loop.lr);
  put_real("train.momentum", cfg.loop.momentum);
  put_ilist("train.milestones", cfg.loop.milestones);
  put_real("train.lambda", cfg.loop.lambda);
  put_bool("train.lambda_grid", cfg.lambda_grid);
  put_real("train.fixmatch_threshold", cfg.loop.fixmatch_threshold);
  put_real("train.adaptive_momentum", cfg.loop.adaptive_momentum);
  put_real("train.grad_clip", cfg.loop.grad_clip);

  put_real("mpssl.lambda_gap", cfg.outer.lambda_gap);
  put_real("mpssl.val_weight", cfg.outer.val_weight);
  kv["mpssl.meta_mode"] = cfg.outer.meta_mode == MetaMode::second_order
                              ? "second_order"
                              : "first_order";
  kv["mpssl.gap_variant"] = cfg.outer.gap_variant == GapVariant::feature_pairwise
                                ? "feature_pairwise"
                                : "output_batch_mean";
  kv["mpssl.gap_kind"] = cfg.outer.gap.kind == GapKind::mse ? "mse" : "mmd";
  put_real("mpssl.mmd_bandwidth", cfg.outer.gap.mmd_bandwidth);
  put_real("mpssl.outer_lr", cfg.outer.outer_lr);
  put_real("mpssl.grad_clip", cfg.outer.grad_clip);
  put_real("mpssl.inner_eta", cfg.inner.eta);
  put_bool("mpssl.lmo_enabled", cfg.lmo_enabled);
  kv["mpssl.unsup_loss"] = cfg.inner.use_fixmatch_unsup ? "fixmatch" : "scr";

  put_bool("mapper.conditional", cfg.mapper.conditional);
  put_int("mapper.hidden", cfg.mapper.hidden);
  put_int("mapper.embed_dim", cfg.mapper.embed_dim);
  put_real("mapper.init_noise", cfg.mapper.init_noise);

  switch (cfg.converter.mode) {
    case ConverterMode::soft_embedding: kv["converter.mode"] = "soft_embedding"; break;
    case ConverterMode::soft_gumbel: kv["converter.mode"] = "soft_gumbel"; break;
    case ConverterMode::hard_gumbel: kv["converter.mode"] = "hard_gumbel"; break;
  }
  put_real("converter.tau", cfg.converter.tau);

  switch (cfg.scr.distance) {
    case DistanceKind::cosine: kv["scr.distance"] = "cosine"; break;
    case DistanceKind::l1: kv["scr.distance"] = "l1"; break;
    case DistanceKind::l2: kv["scr.distance"] = "l2"; break;
    case DistanceKind::smooth_l1: kv["scr.distance"] = "smooth_l1"; break;
  }
  put_real("scr.smooth_l1_delta", cfg.scr.smooth_l1_delta);
  put_real("aug.weak_sigma", cfg.scr.weak.noise_sigma);
  put_real("aug.strong_sigma", cfg.scr.strong.noise_sigma);
  put_real("aug.strong_mask_prob", cfg.scr.strong.mask_prob);
  put_real("aug.strong_jitter", cfg.scr.strong.jitter);

  put_int("transfer.samples", cfg.transfer_samples);

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

TrainerConfig make_trainer_config(const ExperimentConfig& cfg, std::uint64_t seed,
                                  Method method) {
  TrainerConfig tc;
  tc.loop = cfg.loop;
  tc.loop.seed = seed;
  tc.loop.method = method;
  tc.model = cfg.model;
  tc.inner = cfg.inner;
  tc.outer = cfg.outer;
  tc.scr = cfg.scr;
  tc.mapper = cfg.mapper;
  tc.converter = cfg.converter;
  tc.lmo_enabled = cfg.lmo_enabled;
  tc.transfer_samples = cfg.transfer_samples;
  tc.config_hash = cfg.hash;
  return tc;
}

}  // namespace mpssl
