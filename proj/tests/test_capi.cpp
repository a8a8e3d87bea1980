// Exercises the shared-library surface exactly as an external consumer
// would: through mpssl/capi.h only.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "mpssl/capi.h"

namespace fs = std::filesystem;

static int g_failures = 0;

#define EXPECT(cond, what)                                       \
  do {                                                           \
    if (!(cond)) {                                               \
      std::fprintf(stderr, "FAIL %s:%d: %s\n", __FILE__, __LINE__, what); \
      ++g_failures;                                              \
    }                                                            \
  } while (0)

static const char* kConfig =
    "config_version = 1\n"
    "method = base\n"
    "seeds = 1,2\n"
    "foundation.classes = 6\n"
    "foundation.data_dim = 6\n"
    "foundation.latent_dim = 3\n"
    "task.classes = 3\n"
    "task.labels_per_class = 4\n"
    "task.val_per_class = 3\n"
    "task.unlabeled_per_class = 8\n"
    "task.test_per_class = 20\n"
    "train.epochs = 2\n"
    "train.batch = 8\n"
    "train.milestones = 1\n"
    "model.hidden1 = 8\n"
    "model.hidden2 = 6\n"
    "mapper.embed_dim = 4\n"
    "mapper.hidden = 8\n"
    "converter.tau = 1.0\n";

int main() {
  const fs::path tmp = fs::temp_directory_path() / "mpssl_capi_test";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const std::string cfg_path = (tmp / "config.txt").string();
  std::ofstream(cfg_path) << kConfig;

  mpssl_ctx* ctx = nullptr;
  EXPECT(mpssl_ctx_create(&ctx) == MPSSL_OK, "context creation");
  EXPECT(std::strlen(mpssl_last_error(ctx)) == 0, "fresh context has no error");
  EXPECT(std::strstr(mpssl_version(), "mpssl") != nullptr, "version string");

  // Happy path: train through the C API.
  const std::string out = (tmp / "run").string();
  int rc = mpssl_train(ctx, cfg_path.c_str(), out.c_str(), nullptr, -1);
  EXPECT(rc == MPSSL_OK, mpssl_last_error(ctx));
  EXPECT(fs::exists(out + "/summary.json"), "summary written");
  EXPECT(fs::exists(out + "/seed_1/metrics.jsonl"), "metrics written");

  // Method and seed overrides.
  const std::string out2 = (tmp / "run2").string();
  rc = mpssl_train(ctx, cfg_path.c_str(), out2.c_str(), "naive_gssl", 7);
  EXPECT(rc == MPSSL_OK, mpssl_last_error(ctx));
  EXPECT(fs::exists(out2 + "/seed_7/metrics.jsonl"), "seed override respected");

  // Config errors surface as MPSSL_ERR_CONFIG with a message.
  const std::string bad_path = (tmp / "bad.txt").string();
  std::ofstream(bad_path) << "config_version = 1\nbogus = 1\n";
  rc = mpssl_train(ctx, bad_path.c_str(), out.c_str(), nullptr, -1);
  EXPECT(rc == MPSSL_ERR_CONFIG, "unknown key is a config error");
  EXPECT(std::strstr(mpssl_last_error(ctx), "bogus") != nullptr,
         "error names the key");

  rc = mpssl_train(ctx, (tmp / "absent.txt").string().c_str(), out.c_str(),
                   nullptr, -1);
  EXPECT(rc == MPSSL_ERR_CONFIG, "missing config file is a config error");

  rc = mpssl_train(ctx, cfg_path.c_str(), out.c_str(), "not_a_method", -1);
  EXPECT(rc == MPSSL_ERR_CONFIG, "unknown method override");

  // Ablation through the C API (tiny preset).
  const std::string abl = (tmp / "abl").string();
  rc = mpssl_ablate(ctx, cfg_path.c_str(), "gap_kinds", abl.c_str());
  EXPECT(rc == MPSSL_OK, mpssl_last_error(ctx));
  EXPECT(fs::exists(abl + "/ablation_gap_kinds.txt"), "ablation table");
  rc = mpssl_ablate(ctx, cfg_path.c_str(), "nonsense", abl.c_str());
  EXPECT(rc == MPSSL_ERR_CONFIG, "unknown preset");

  // Plot emission.
  const char* dirs[] = {out.c_str()};
  const std::string plots = (tmp / "plots").string();
  rc = mpssl_plot(ctx, dirs, 1, plots.c_str());
  EXPECT(rc == MPSSL_OK, mpssl_last_error(ctx));
  rc = mpssl_plot(ctx, nullptr, 0, plots.c_str());
  EXPECT(rc == MPSSL_ERR_CONFIG, "plot with no dirs");

  // Foundation pretraining writes a checkpoint.
  const std::string found = (tmp / "foundation").string();
  std::string fcfg_path = (tmp / "fcfg.txt").string();
  std::ofstream(fcfg_path)
      << "config_version = 1\nfoundation.classes = 6\nfoundation.data_dim = 6\n"
      << "foundation.latent_dim = 3\n"
      << "foundation.classifier_samples_per_class = 80\n"
      << "foundation.classifier_epochs = 10\n"
      << "foundation.classifier_accuracy_floor = 0.8\n";
  rc = mpssl_pretrain_foundation(ctx, fcfg_path.c_str(), found.c_str());
  EXPECT(rc == MPSSL_OK, mpssl_last_error(ctx));
  EXPECT(fs::exists(found + "/foundation.ckpt"), "foundation checkpoint");

  mpssl_ctx_destroy(ctx);
  fs::remove_all(tmp);

  if (g_failures == 0) std::printf("capi_tests: all checks passed\n");
  return g_failures == 0 ? 0 : 1;
}
