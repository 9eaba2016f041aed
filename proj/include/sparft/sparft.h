/*
 * sparft: cluster-based training-data reduction and a Thompson-sampling
 * curriculum scheduler, exposed as a C ABI.
 *
 * Every function returns a sparft_status. On failure the message for the
 * calling thread is available from sparft_last_error() until the next call.
 * Objects are opaque handles released with their matching *_free function;
 * passing NULL to a *_free function is a no-op.
 */
#ifndef SPARFT_SPARFT_H
#define SPARFT_SPARFT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SPARFT_BUILDING_LIBRARY)
#    define SPARFT_API __declspec(dllexport)
#  else
#    define SPARFT_API __declspec(dllimport)
#  endif
#else
#  define SPARFT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sparft_status {
  SPARFT_OK = 0,
  SPARFT_ERR_INVALID_ARGUMENT = 1,
  SPARFT_ERR_IO = 2,
  SPARFT_ERR_PARSE = 3,
  SPARFT_ERR_DIMENSION = 4,
  SPARFT_ERR_DUPLICATE_ID = 5,
  SPARFT_ERR_MISSING_ID = 6,
  SPARFT_ERR_DEGENERATE = 7,
  SPARFT_ERR_CORRUPT = 8,
  SPARFT_ERR_VERSION = 9,
  SPARFT_ERR_PROTOCOL = 10,
  SPARFT_ERR_INTERNAL = 11
} sparft_status;

typedef enum sparft_strategy {
  SPARFT_STRATEGY_DIVERSE = 0,
  SPARFT_STRATEGY_RANDOM = 1,
  SPARFT_STRATEGY_CLOSEST = 2
} sparft_strategy;

typedef enum sparft_log_level { SPARFT_LOG_INFO = 0, SPARFT_LOG_WARNING = 1 } sparft_log_level;

typedef void (*sparft_log_fn)(sparft_log_level level, const char* message, void* user);

typedef struct sparft_corpus sparft_corpus;
typedef struct sparft_features sparft_features;
typedef struct sparft_clusters sparft_clusters;
typedef struct sparft_reduced sparft_reduced;
typedef struct sparft_scheduler sparft_scheduler;
typedef struct sparft_service sparft_service;

SPARFT_API const char* sparft_version(void);
SPARFT_API const char* sparft_last_error(void);
SPARFT_API const char* sparft_status_name(sparft_status status);

/* Receives warnings (for example unknown ids in an attempts log). Process-wide. */
SPARFT_API void sparft_set_log_callback(sparft_log_fn fn, void* user);

/* Strings returned through char** out-parameters are released with this. */
SPARFT_API void sparft_string_free(char* s);

/* Validates a config document (JSON text, NULL for defaults; unknown keys are
 * rejected) and returns it with every default spelled out. */
SPARFT_API sparft_status sparft_config_resolve(const char* config_json, char** resolved);

/* ---- corpus ------------------------------------------------------------ */

/* 100 * (1 - successes / attempts); attempts must be >= 1. */
SPARFT_API sparft_status sparft_estimate_difficulty(uint32_t successes, uint32_t attempts, double* out);

SPARFT_API sparft_status sparft_corpus_load(const char* path, sparft_corpus** out);
SPARFT_API sparft_status sparft_corpus_save(const sparft_corpus* corpus, const char* path);
SPARFT_API size_t sparft_corpus_size(const sparft_corpus* corpus);
SPARFT_API size_t sparft_corpus_dim(const sparft_corpus* corpus);
/* Difficulty of example i, or a negative value when unset. */
SPARFT_API double sparft_corpus_difficulty(const sparft_corpus* corpus, size_t i);
/* Sets every difficulty from an attempts log. Unknown ids are logged as
 * warnings and counted in *unknown_ids (may be NULL). */
SPARFT_API sparft_status sparft_corpus_annotate(sparft_corpus* corpus, const char* attempts_path,
                                                size_t* unknown_ids);
SPARFT_API void sparft_corpus_free(sparft_corpus* corpus);

/* ---- features ---------------------------------------------------------- */

SPARFT_API sparft_status sparft_featurize(const sparft_corpus* corpus, size_t pca_components,
                                          sparft_features** out);
SPARFT_API sparft_status sparft_features_load(const char* path, sparft_features** out);
SPARFT_API sparft_status sparft_features_save(const sparft_features* features, const char* path);
SPARFT_API size_t sparft_features_rows(const sparft_features* features);
SPARFT_API size_t sparft_features_width(const sparft_features* features);
/* Copies row i (width doubles) into out. */
SPARFT_API sparft_status sparft_features_row(const sparft_features* features, size_t i, double* out, size_t len);
SPARFT_API void sparft_features_free(sparft_features* features);

/* ---- clustering -------------------------------------------------------- */

typedef struct sparft_kmeans_params {
  size_t k;
  uint64_t seed;
  size_t max_iters; /* 0 selects the default (300) */
  double tol;       /* negative selects the default (1e-6) */
} sparft_kmeans_params;

SPARFT_API sparft_status sparft_kmeans(const sparft_features* features, const sparft_kmeans_params* params,
                                       sparft_clusters** out);
SPARFT_API sparft_status sparft_clusters_load(const char* path, sparft_clusters** out);
SPARFT_API sparft_status sparft_clusters_save(const sparft_clusters* clusters, const char* path);
SPARFT_API size_t sparft_clusters_k(const sparft_clusters* clusters);
SPARFT_API double sparft_clusters_inertia(const sparft_clusters* clusters);
/* Cluster index of feature row i, or SIZE_MAX when out of range. */
SPARFT_API size_t sparft_clusters_assignment(const sparft_clusters* clusters, size_t i);
SPARFT_API sparft_status sparft_clusters_nearest(const sparft_clusters* clusters, const double* point, size_t len,
                                                 size_t* out);
SPARFT_API void sparft_clusters_free(sparft_clusters* clusters);

/* ---- reduction --------------------------------------------------------- */

SPARFT_API sparft_status sparft_reduce(const sparft_features* features, const sparft_clusters* clusters,
                                       sparft_strategy strategy, size_t per_cluster, uint64_t seed,
                                       sparft_reduced** out);
SPARFT_API sparft_status sparft_reduced_load(const char* path, sparft_reduced** out);
SPARFT_API sparft_status sparft_reduced_save(const sparft_reduced* reduced, const char* path);
SPARFT_API size_t sparft_reduced_clusters(const sparft_reduced* reduced);
SPARFT_API size_t sparft_reduced_cluster_size(const sparft_reduced* reduced, size_t cluster);
/* Id at position i of a cluster's selection, or NULL. Owned by the handle. */
SPARFT_API const char* sparft_reduced_id(const sparft_reduced* reduced, size_t cluster, size_t i);
SPARFT_API void sparft_reduced_free(sparft_reduced* reduced);

/* ---- scheduler --------------------------------------------------------- */

typedef struct sparft_batch {
  uint64_t step;
  size_t cluster;
  size_t size; /* number of ids, read them with sparft_scheduler_batch_id */
} sparft_batch;

SPARFT_API sparft_status sparft_scheduler_create(const sparft_reduced* reduced, size_t batch_size, double epsilon,
                                                 uint64_t seed, sparft_scheduler** out);
SPARFT_API sparft_status sparft_scheduler_next_batch(sparft_scheduler* scheduler, sparft_batch* out);
/* Id i of the most recently issued batch. Owned by the handle. */
SPARFT_API const char* sparft_scheduler_batch_id(const sparft_scheduler* scheduler, size_t i);
/* Average of 0/1 correctness values. */
SPARFT_API sparft_status sparft_average_reward(const uint8_t* correct, size_t len, double* out);
SPARFT_API sparft_status sparft_scheduler_report(sparft_scheduler* scheduler, uint64_t step, double r_avg);
SPARFT_API size_t sparft_scheduler_arms(const sparft_scheduler* scheduler);
SPARFT_API uint64_t sparft_scheduler_step(const sparft_scheduler* scheduler);
/* Copies cumulative rewards and pull counts (arms entries each; either may be NULL). */
SPARFT_API sparft_status sparft_scheduler_stats(const sparft_scheduler* scheduler, double* reward, uint64_t* pulls,
                                                size_t arms);
SPARFT_API sparft_status sparft_scheduler_checkpoint(const sparft_scheduler* scheduler, const char* path);
SPARFT_API sparft_status sparft_scheduler_restore(const sparft_reduced* reduced, const char* path,
                                                  sparft_scheduler** out);
SPARFT_API void sparft_scheduler_free(sparft_scheduler* scheduler);

/* ---- simulation -------------------------------------------------------- */

/* Runs one episode with the config document (JSON text, may be NULL for
 * defaults). reduced may be NULL, in which case a synthetic manifest with
 * simulation.arms clusters is used. Writes decisions.jsonl, trajectory.jsonl,
 * heatmap.json and summary.csv under out_dir. */
SPARFT_API sparft_status sparft_simulate(const char* config_json, const sparft_reduced* reduced, uint64_t seed,
                                         const char* out_dir);

/* Runs every policy in simulation.compare over seeds [seed, seed + n_seeds)
 * and writes comparison.csv plus per-run heatmaps under out_dir. */
SPARFT_API sparft_status sparft_compare(const char* config_json, const sparft_reduced* reduced, uint64_t seed,
                                        size_t n_seeds, const char* out_dir);

/* Rebuilds heatmap data (window x cluster counts and observed solve rates)
 * from a decision log. */
SPARFT_API sparft_status sparft_replay(const char* decision_log, size_t window, const char* out_path);

/* ---- service ----------------------------------------------------------- */

/* config_json must carry a "service" section; reduced may be NULL to load
 * service.manifest. */
SPARFT_API sparft_status sparft_service_create(const char* config_json, const sparft_reduced* reduced,
                                               uint64_t seed, sparft_service** out);
/* One request line in, one response line (no newline) out. */
SPARFT_API sparft_status sparft_service_handle(sparft_service* service, const char* request, char** response);
SPARFT_API int sparft_service_is_shutdown(const sparft_service* service);
SPARFT_API sparft_status sparft_service_checkpoint(sparft_service* service);
/* Serves over the configured transport until shutdown or end of input. */
SPARFT_API sparft_status sparft_service_run(sparft_service* service);
/* Releases the service without a final checkpoint. */
SPARFT_API void sparft_service_free(sparft_service* service);

#ifdef __cplusplus
}
#endif

#endif /* SPARFT_SPARFT_H */
