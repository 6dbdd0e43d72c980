/* ae2 — self-supervised ego-exo temporal alignment toolkit.
 *
 * C API over the shared library. All functions return an ae2 status code
 * (AE2_OK on success); on failure ae2_last_error() describes what went wrong
 * for the calling thread. Handles are opaque and must be released with their
 * matching destroy function.
 */
#ifndef AE2_H
#define AE2_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define AE2_API __declspec(dllexport)
#else
#define AE2_API __attribute__((visibility("default")))
#endif

/* Status codes; they double as CLI exit codes. */
enum {
  AE2_OK = 0,
  AE2_ERR = 1,         /* unexpected failure */
  AE2_ERR_CONFIG = 2,  /* bad configuration */
  AE2_ERR_DATA = 3,    /* malformed file / missing data */
  AE2_ERR_NUMERIC = 4, /* non-finite value encountered */
};

typedef struct ae2_config ae2_config;

AE2_API const char* ae2_version(void);

/* Message for the most recent failing call on this thread. */
AE2_API const char* ae2_last_error(void);

/* ---- configuration (flat key=value model) ---- */

AE2_API ae2_config* ae2_config_new(void);
AE2_API void ae2_config_destroy(ae2_config* cfg);

/* Merges key=value lines (with # comments) from a file into cfg. */
AE2_API int ae2_config_load(ae2_config* cfg, const char* path);
AE2_API int ae2_config_set(ae2_config* cfg, const char* key, const char* value);

/* Writes the value into buf (NUL-terminated); fails if buf_len is too small. */
AE2_API int ae2_config_get(const ae2_config* cfg, const char* key, char* buf,
                           size_t buf_len);

/* ---- pipeline commands ---- */

/* Generates the synthetic dataset under out_dir (manifest.txt, features/,
 * report.txt). Refuses to overwrite an existing manifest unless force != 0. */
AE2_API int ae2_generate(const ae2_config* cfg, const char* out_dir, int force);

/* Trains on the manifest's train split; writes the best checkpoint and a
 * per-epoch log. init_checkpoint may be NULL (train from scratch). */
AE2_API int ae2_train(const ae2_config* cfg, const char* manifest_path,
                      const char* checkpoint_out, const char* log_out,
                      const char* init_checkpoint);

/* Writes one embedding file per video of `split` ("train"/"val"/"test"/"all").
 * cfg may be NULL: the model shape always comes from the checkpoint echo. */
AE2_API int ae2_embed(const ae2_config* cfg, const char* manifest_path,
                      const char* checkpoint_path, const char* split,
                      const char* out_dir);

/* Runs the downstream metric suite on embedded train+test splits; writes the
 * key=value report and the summary CSV. */
AE2_API int ae2_evaluate(const ae2_config* cfg, const char* manifest_path,
                         const char* embed_dir, const char* report_out,
                         const char* csv_out);

/* Aligns two embedding files; writes the cost/path CSV and the sync-map CSV.
 * Optional outputs (may be NULL): hard_cost, soft_loss, map_tau. */
AE2_API int ae2_align(const ae2_config* cfg, const char* embed_a,
                      const char* embed_b, const char* csv_out,
                      const char* map_out, double* hard_cost, double* soft_loss,
                      double* map_tau);

/* Dumps per-query top-k retrievals over the test split to CSV.
 * scope is "regular", "ego2exo" or "exo2ego". */
AE2_API int ae2_retrieve(const ae2_config* cfg, const char* manifest_path,
                         const char* embed_dir, const char* scope, int k,
                         const char* csv_out);

/* ---- embedding-file access for downstream consumers ---- */

/* Reads the header of an AE2E file. */
AE2_API int ae2_embeddings_info(const char* path, uint32_t* frames, uint32_t* dim);

/* Copies the full T*d matrix (row-major doubles) into buf. */
AE2_API int ae2_embeddings_read(const char* path, double* buf, size_t buf_len);

#ifdef __cplusplus
}
#endif

#endif /* AE2_H */
