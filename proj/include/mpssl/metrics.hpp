#pragma once

#include <string>
#include <vector>

#include "mpssl/trainer.hpp"

namespace mpssl {

inline constexpr int kMetricsSchemaVersion = 1;

struct MetricsRecord {
  int schema_version = kMetricsSchemaVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string method;
  EpochMetrics m;
};

// One self-describing JSON record per line.
void write_metrics_file(const std::string& path, const std::string& config_hash,
                        std::uint64_t seed, const std::string& method,
                        const std::vector<EpochMetrics>& history);

// Throws RunError naming the file on missing/corrupt/invalid records.
std::vector<MetricsRecord> read_metrics_file(const std::string& path);

}  // namespace mpssl
