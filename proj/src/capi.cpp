#include "mpssl/capi.h"

#include <cstdio>
#include <string>

#include "mpssl/common.hpp"
#include "mpssl/harness.hpp"
#include "mpssl/selfcheck.hpp"

struct mpssl_ctx {
  std::string last_error;
};

namespace {

template <typename F>
int guarded(mpssl_ctx* ctx, F&& fn) {
  if (!ctx) return MPSSL_ERR_RUN;
  ctx->last_error.clear();
  try {
    return fn();
  } catch (const mpssl::ConfigError& e) {
    ctx->last_error = e.what();
    return MPSSL_ERR_CONFIG;
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return MPSSL_ERR_RUN;
  }
}

}  // namespace

extern "C" {

int mpssl_ctx_create(mpssl_ctx** out) {
  if (!out) return MPSSL_ERR_RUN;
  *out = new (std::nothrow) mpssl_ctx();
  return *out ? MPSSL_OK : MPSSL_ERR_RUN;
}

void mpssl_ctx_destroy(mpssl_ctx* ctx) { delete ctx; }

const char* mpssl_last_error(const mpssl_ctx* ctx) {
  return ctx ? ctx->last_error.c_str() : "null context";
}

int mpssl_train(mpssl_ctx* ctx, const char* config_path, const char* out_dir,
                const char* method_or_null, long long seed_or_negative) {
  return guarded(ctx, [&]() -> int {
    mpssl::require_cfg(config_path != nullptr, "train: config path is null");
    mpssl::require_cfg(out_dir != nullptr, "train: output directory is null");
    auto cfg = mpssl::load_experiment_config(config_path);
    if (method_or_null) {
      cfg.method = mpssl::method_from_name(method_or_null);
      cfg.loop.method = cfg.method;
    }
    if (seed_or_negative >= 0) {
      cfg.seeds = {static_cast<std::uint64_t>(seed_or_negative)};
    }
    cfg.hash = mpssl::fnv1a64(mpssl::canonical_config_text(cfg));
    auto result = mpssl::run_experiment(cfg, out_dir);
    if (!result.all_ok()) {
      std::string msg = "sub-run failures:";
      for (const auto& oc : result.outcomes)
        if (!oc.ok) msg += " [seed " + std::to_string(oc.seed) + ": " + oc.error + "]";
      ctx->last_error = msg;
      return MPSSL_ERR_RUN;
    }
    return MPSSL_OK;
  });
}

int mpssl_pretrain_foundation(mpssl_ctx* ctx, const char* config_path,
                              const char* out_dir) {
  return guarded(ctx, [&]() -> int {
    mpssl::require_cfg(config_path != nullptr, "pretrain: config path is null");
    mpssl::require_cfg(out_dir != nullptr, "pretrain: output directory is null");
    auto cfg = mpssl::load_experiment_config(config_path);
    mpssl::pretrain_foundation_to(cfg, out_dir);
    return MPSSL_OK;
  });
}

int mpssl_ablate(mpssl_ctx* ctx, const char* config_path, const char* preset,
                 const char* out_dir) {
  return guarded(ctx, [&]() -> int {
    mpssl::require_cfg(config_path != nullptr, "ablate: config path is null");
    mpssl::require_cfg(preset != nullptr, "ablate: preset name is null");
    mpssl::require_cfg(out_dir != nullptr, "ablate: output directory is null");
    auto cfg = mpssl::load_experiment_config(config_path);
    auto result = mpssl::run_ablation(preset, cfg, out_dir);
    if (!result.all_ok()) {
      ctx->last_error = "ablation preset '" + std::string(preset) +
                        "' had failing cells; see " + std::string(out_dir);
      return MPSSL_ERR_RUN;
    }
    return MPSSL_OK;
  });
}

int mpssl_plot(mpssl_ctx* ctx, const char* const* run_dirs, size_t n_dirs,
               const char* out_dir) {
  return guarded(ctx, [&]() -> int {
    mpssl::require_cfg(run_dirs != nullptr && n_dirs > 0,
                       "plot: no run directories given");
    mpssl::require_cfg(out_dir != nullptr, "plot: output directory is null");
    std::vector<std::string> dirs;
    for (size_t i = 0; i < n_dirs; ++i) dirs.emplace_back(run_dirs[i]);
    mpssl::emit_plots(dirs, out_dir);
    return MPSSL_OK;
  });
}

int mpssl_verify(mpssl_ctx* ctx, int quick, int* n_failed_or_null) {
  return guarded(ctx, [&]() -> int {
    auto results = mpssl::run_selfchecks(quick != 0);
    int failed = 0;
    for (const auto& r : results) {
      std::printf("%-28s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                  r.detail.c_str());
      if (!r.pass) ++failed;
    }
    std::fflush(stdout);
    if (n_failed_or_null) *n_failed_or_null = failed;
    if (failed > 0) {
      ctx->last_error = std::to_string(failed) + " self-checks failed";
      return MPSSL_ERR_RUN;
    }
    return MPSSL_OK;
  });
}

const char* mpssl_version(void) { return "mpssl 1.0.0"; }

}  // extern "C"
