// mpssl command-line tool. Talks to the library exclusively through the
// C API in mpssl/capi.h.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpssl/capi.h"

namespace {

std::string output_root() {
  const char* env = std::getenv("MPSSL_OUT_ROOT");
  return env && *env ? env : "runs";
}

std::string default_out(const std::string& stem) {
  return output_root() + "/" + stem;
}

std::string config_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

struct CtxDeleter {
  void operator()(mpssl_ctx* c) const { mpssl_ctx_destroy(c); }
};

int report(mpssl_ctx* ctx, int rc, const char* what) {
  if (rc != MPSSL_OK) {
    std::fprintf(stderr, "mpssl: %s failed: %s\n", what, mpssl_last_error(ctx));
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MP-SSL: semi-supervised training with meta-searched synthetic "
               "unlabeled data"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset, method;
  long long seed = -1;
  std::vector<std::string> run_dirs;

  auto* pretrain = app.add_subcommand(
      "pretrain-foundation", "Build the foundation domain and pretrain the "
                             "foundation classifier/generator");
  pretrain->add_option("--config", config_path, "config file")->required();
  pretrain->add_option("--out", out_dir, "output directory");

  auto* train = app.add_subcommand("train", "Run a training experiment");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--seed", seed, "override the config seed list");
  train->add_option("--method", method, "override the method tag");

  auto* ablate = app.add_subcommand("ablate", "Run an ablation preset");
  ablate->add_option("--config", config_path, "base config file")->required();
  ablate->add_option("--preset", preset, "preset name")->required();
  ablate->add_option("--out", out_dir, "output directory");

  auto* plot = app.add_subcommand("plot", "Emit SVG plots for run directories");
  plot->add_option("--out", out_dir, "output directory");
  plot->add_option("dirs", run_dirs, "run directories")->required();

  auto* verify =
      app.add_subcommand("verify", "Run the oracle/gradient-check suite");
  bool quick = false;
  verify->add_flag("--quick", quick, "reduced trial counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : MPSSL_ERR_CONFIG;
  }

  mpssl_ctx* raw = nullptr;
  if (mpssl_ctx_create(&raw) != MPSSL_OK) {
    std::fprintf(stderr, "mpssl: cannot create context\n");
    return MPSSL_ERR_RUN;
  }
  std::unique_ptr<mpssl_ctx, CtxDeleter> ctx(raw);

  if (pretrain->parsed()) {
    if (out_dir.empty()) out_dir = default_out("foundation");
    int rc = mpssl_pretrain_foundation(ctx.get(), config_path.c_str(),
                                       out_dir.c_str());
    if (rc == MPSSL_OK)
      std::printf("foundation checkpoint written under %s\n", out_dir.c_str());
    return report(ctx.get(), rc, "pretrain-foundation");
  }

  if (train->parsed()) {
    if (out_dir.empty())
      out_dir = default_out(config_stem(config_path) +
                            (method.empty() ? "" : "-" + method));
    int rc = mpssl_train(ctx.get(), config_path.c_str(), out_dir.c_str(),
                         method.empty() ? nullptr : method.c_str(), seed);
    if (rc == MPSSL_OK)
      std::printf("run complete; summary at %s/summary.json\n", out_dir.c_str());
    return report(ctx.get(), rc, "train");
  }

  if (ablate->parsed()) {
    if (out_dir.empty()) out_dir = default_out("ablation-" + preset);
    int rc = mpssl_ablate(ctx.get(), config_path.c_str(), preset.c_str(),
                          out_dir.c_str());
    if (rc == MPSSL_OK)
      std::printf("ablation table at %s/ablation_%s.txt\n", out_dir.c_str(),
                  preset.c_str());
    return report(ctx.get(), rc, "ablate");
  }

  if (plot->parsed()) {
    if (out_dir.empty()) out_dir = default_out("plots");
    std::vector<const char*> dirs;
    for (const auto& d : run_dirs) dirs.push_back(d.c_str());
    int rc = mpssl_plot(ctx.get(), dirs.data(), dirs.size(), out_dir.c_str());
    if (rc == MPSSL_OK) std::printf("plots written to %s\n", out_dir.c_str());
    return report(ctx.get(), rc, "plot");
  }

  if (verify->parsed()) {
    int failed = 0;
    int rc = mpssl_verify(ctx.get(), quick ? 1 : 0, &failed);
    return report(ctx.get(), rc, "verify");
  }

  return MPSSL_ERR_CONFIG;
}
