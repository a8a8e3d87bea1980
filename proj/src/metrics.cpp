#include "mpssl/metrics.hpp"

#include <fstream>

#include "json.hpp"
#include "mpssl/common.hpp"

namespace mpssl {

namespace {

using json = nlohmann::ordered_json;

json record_json(const std::string& config_hash, std::uint64_t seed,
                 const std::string& method, const EpochMetrics& m) {
  json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["method"] = method;
  j["epoch"] = m.epoch;
  j["train_loss"] = m.train_loss;
  j["val_loss"] = m.val_loss;
  j["val_accuracy"] = m.val_accuracy;
  j["test_accuracy"] = m.test_accuracy;
  j["scr_loss"] = m.scr_loss;
  j["gap_loss"] = m.gap_loss;
  j["meta_grad_norm_phi"] = m.meta_grad_norm_phi;
  j["meta_grad_norm_xi"] = m.meta_grad_norm_xi;
  j["pseudo_acceptance_rate"] = m.pseudo_acceptance_rate;
  j["wall_seconds"] = m.wall_seconds;
  return j;
}

const char* kRequiredFields[] = {
    "schema_version", "config_hash",  "seed",
    "method",         "epoch",        "train_loss",
    "val_loss",       "val_accuracy", "test_accuracy",
    "scr_loss",       "gap_loss",     "meta_grad_norm_phi",
    "meta_grad_norm_xi", "pseudo_acceptance_rate", "wall_seconds"};

void validate_record(const json& j, const std::string& path, int line) {
  for (const char* f : kRequiredFields) {
    if (!j.contains(f))
      throw RunError("metrics file '" + path + "' line " + std::to_string(line) +
                     ": missing field '" + f + "'");
  }
  if (j["schema_version"].get<int>() != kMetricsSchemaVersion)
    throw RunError("metrics file '" + path + "': unsupported schema version");
  const double va = j["val_accuracy"].get<double>();
  const double ta = j["test_accuracy"].get<double>();
  if (va < 0.0 || va > 1.0 || ta < 0.0 || ta > 1.0)
    throw RunError("metrics file '" + path + "' line " + std::to_string(line) +
                   ": accuracy out of [0,1]");
}

}  // namespace

void write_metrics_file(const std::string& path, const std::string& config_hash,
                        std::uint64_t seed, const std::string& method,
                        const std::vector<EpochMetrics>& history) {
  std::ofstream out(path);
  if (!out) throw RunError("metrics: cannot write '" + path + "'");
  for (const auto& m : history) {
    out << record_json(config_hash, seed, method, m).dump() << "\n";
  }
  if (!out) throw RunError("metrics: write failed for '" + path + "'");
}

std::vector<MetricsRecord> read_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RunError("metrics file '" + path + "' is missing or unreadable");
  std::vector<MetricsRecord> out;
  std::string line;
  int lineno = 0;
  int last_epoch = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw RunError("metrics file '" + path + "' line " + std::to_string(lineno) +
                     ": corrupt JSON (" + e.what() + ")");
    }
    validate_record(j, path, lineno);
    MetricsRecord r;
    r.schema_version = j["schema_version"].get<int>();
    r.config_hash = j["config_hash"].get<std::string>();
    r.seed = j["seed"].get<std::uint64_t>();
    r.method = j["method"].get<std::string>();
    r.m.epoch = j["epoch"].get<int>();
    if (r.m.epoch <= last_epoch)
      throw RunError("metrics file '" + path +
                     "': epochs not strictly increasing at line " +
                     std::to_string(lineno));
    last_epoch = r.m.epoch;
    r.m.train_loss = j["train_loss"].get<double>();
    r.m.val_loss = j["val_loss"].get<double>();
    r.m.val_accuracy = j["val_accuracy"].get<double>();
    r.m.test_accuracy = j["test_accuracy"].get<double>();
    r.m.scr_loss = j["scr_loss"].get<double>();
    r.m.gap_loss = j["gap_loss"].get<double>();
    r.m.meta_grad_norm_phi = j["meta_grad_norm_phi"].get<double>();
    r.m.meta_grad_norm_xi = j["meta_grad_norm_xi"].get<double>();
    r.m.pseudo_acceptance_rate = j["pseudo_acceptance_rate"].get<double>();
    r.m.wall_seconds = j["wall_seconds"].get<double>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mpssl
