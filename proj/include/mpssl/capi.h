#ifndef MPSSL_CAPI_H
#define MPSSL_CAPI_H

/*
 * C interface to the MP-SSL training library. All entry points return an
 * error code; details of the last failure are available per context. The
 * context handle is opaque and not thread-safe; create one per thread.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Error codes (also the CLI exit codes). */
#define MPSSL_OK 0
#define MPSSL_ERR_RUN 1
#define MPSSL_ERR_CONFIG 2

typedef struct mpssl_ctx mpssl_ctx;

/* Returns MPSSL_OK and stores a new context in *out. */
int mpssl_ctx_create(mpssl_ctx** out);
void mpssl_ctx_destroy(mpssl_ctx* ctx);

/* Message for the most recent failure on this context; empty string if none.
 * The pointer stays valid until the next call on the same context. */
const char* mpssl_last_error(const mpssl_ctx* ctx);

/* Runs the experiment described by the config file: one sub-run per seed,
 * metrics + checkpoints + summary under out_dir. method_or_null overrides the
 * config's method tag; seed_or_negative >= 0 overrides the seed list with a
 * single seed. */
int mpssl_train(mpssl_ctx* ctx, const char* config_path, const char* out_dir,
                const char* method_or_null, long long seed_or_negative);

/* Builds the foundation domain, pretrains the foundation classifier (and the
 * learned generator when configured), and writes a foundation checkpoint
 * under out_dir. */
int mpssl_pretrain_foundation(mpssl_ctx* ctx, const char* config_path,
                              const char* out_dir);

/* Expands an ablation preset against the base config, runs every cell over
 * the shared seed list, and writes the comparison table under out_dir. */
int mpssl_ablate(mpssl_ctx* ctx, const char* config_path, const char* preset,
                 const char* out_dir);

/* Emits SVG plots for the given run directories into out_dir. */
int mpssl_plot(mpssl_ctx* ctx, const char* const* run_dirs, size_t n_dirs,
               const char* out_dir);

/* Runs the oracle/gradient-check suite, printing one line per check to
 * stdout. Stores the number of failed checks in *n_failed_or_null if given.
 * Returns MPSSL_OK when everything passes, MPSSL_ERR_RUN otherwise. */
int mpssl_verify(mpssl_ctx* ctx, int quick, int* n_failed_or_null);

const char* mpssl_version(void);

#ifdef __cplusplus
}
#endif

#endif /* MPSSL_CAPI_H */
