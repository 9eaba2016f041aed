/* Drives the public C API end to end: usage test_capi <data dir> <work dir>. */
#include <sparft/sparft.h>

#include <math.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

#define OK(call)                                                                    \
  do {                                                                              \
    sparft_status st_ = (call);                                                     \
    if (st_ != SPARFT_OK) {                                                         \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,           \
              sparft_status_name(st_), sparft_last_error());                        \
      exit(1);                                                                      \
    }                                                                               \
  } while (0)

static char work_dir[4096];
static char data_dir[4096];

static const char* in_work(const char* name) {
  static char buf[4][4200];
  static int slot = 0;
  slot = (slot + 1) % 4;
  snprintf(buf[slot], sizeof buf[slot], "%s/%s", work_dir, name);
  return buf[slot];
}

static const char* in_data(const char* name) {
  static char buf[4200];
  snprintf(buf, sizeof buf, "%s/%s", data_dir, name);
  return buf;
}

static int warnings_seen = 0;
static void on_log(sparft_log_level level, const char* message, void* user) {
  (void)message;
  if (level == SPARFT_LOG_WARNING) ++*(int*)user;
}

static void errors(void) {
  double d = 0;
  sparft_corpus* corpus = NULL;
  EXPECT(sparft_estimate_difficulty(1, 0, &d) == SPARFT_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(sparft_last_error()) > 0);
  EXPECT(sparft_estimate_difficulty(5, 3, &d) == SPARFT_ERR_INVALID_ARGUMENT);
  EXPECT(sparft_estimate_difficulty(0, 4, NULL) == SPARFT_ERR_INVALID_ARGUMENT);
  OK(sparft_estimate_difficulty(32, 128, &d));
  EXPECT(fabs(d - 75.0) < 1e-12);
  EXPECT(sparft_corpus_load(in_work("missing.jsonl"), &corpus) == SPARFT_ERR_IO);
  EXPECT(corpus == NULL);
  EXPECT(strcmp(sparft_status_name(SPARFT_ERR_CORRUPT), "SPARFT_OK") != 0);
  EXPECT(sparft_version()[0] != '\0');

  char* resolved = NULL;
  EXPECT(sparft_config_resolve("{\"clustering\":{\"kk\":1}}", &resolved) == SPARFT_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(sparft_last_error(), "clustering.kk") != NULL);
  OK(sparft_config_resolve(NULL, &resolved));
  EXPECT(strstr(resolved, "\"pca_components\": 50") != NULL);
  sparft_string_free(resolved);

  /* Null handles are reported, not dereferenced. */
  EXPECT(sparft_corpus_size(NULL) == 0);
  EXPECT(sparft_scheduler_next_batch(NULL, NULL) == SPARFT_ERR_INVALID_ARGUMENT);
  sparft_corpus_free(NULL);
}

static void pipeline(void) {
  sparft_corpus* corpus = NULL;
  OK(sparft_corpus_load(in_data("corpus.jsonl"), &corpus));
  EXPECT(sparft_corpus_size(corpus) == 160);
  EXPECT(sparft_corpus_dim(corpus) == 8);
  EXPECT(sparft_corpus_difficulty(corpus, 0) < 0);

  sparft_features* unscored = NULL;
  EXPECT(sparft_featurize(corpus, 5, &unscored) == SPARFT_ERR_MISSING_ID);

  size_t unknown = 99;
  sparft_set_log_callback(on_log, &warnings_seen);
  OK(sparft_corpus_annotate(corpus, in_data("attempts.jsonl"), &unknown));
  sparft_set_log_callback(NULL, NULL);
  EXPECT(unknown == 0);
  EXPECT(warnings_seen == 0);
  EXPECT(fabs(sparft_corpus_difficulty(corpus, 0) - 12.5) < 1e-12);
  OK(sparft_corpus_save(corpus, in_work("scored.jsonl")));

  sparft_features* features = NULL;
  OK(sparft_featurize(corpus, 5, &features));
  EXPECT(sparft_features_rows(features) == 160);
  EXPECT(sparft_features_width(features) == 6);
  double row[6];
  OK(sparft_features_row(features, 3, row, 6));
  EXPECT(sparft_features_row(features, 160, row, 6) == SPARFT_ERR_INVALID_ARGUMENT);
  EXPECT(sparft_features_row(features, 0, row, 4) == SPARFT_ERR_INVALID_ARGUMENT);
  OK(sparft_features_save(features, in_work("features.json")));

  sparft_features* loaded = NULL;
  OK(sparft_features_load(in_work("features.json"), &loaded));
  double again[6];
  OK(sparft_features_row(loaded, 3, again, 6));
  EXPECT(memcmp(row, again, sizeof row) == 0);
  sparft_features_free(loaded);

  sparft_kmeans_params params = {4, 9, 0, -1.0};
  sparft_clusters* clusters = NULL;
  OK(sparft_kmeans(features, &params, &clusters));
  EXPECT(sparft_clusters_k(clusters) == 4);
  EXPECT(sparft_clusters_inertia(clusters) > 0);
  EXPECT(sparft_clusters_assignment(clusters, 1000) == SIZE_MAX);
  size_t nearest = 99;
  OK(sparft_features_row(features, 7, row, 6));
  OK(sparft_clusters_nearest(clusters, row, 6, &nearest));
  EXPECT(nearest == sparft_clusters_assignment(clusters, 7));
  EXPECT(sparft_clusters_nearest(clusters, row, 5, &nearest) == SPARFT_ERR_DIMENSION);
  OK(sparft_clusters_save(clusters, in_work("clusters.json")));

  sparft_kmeans_params bad = {0, 1, 0, -1.0};
  sparft_clusters* none = NULL;
  EXPECT(sparft_kmeans(features, &bad, &none) == SPARFT_ERR_INVALID_ARGUMENT);

  sparft_reduced* reduced = NULL;
  OK(sparft_reduce(features, clusters, SPARFT_STRATEGY_DIVERSE, 6, 9, &reduced));
  EXPECT(sparft_reduced_clusters(reduced) == 4);
  for (size_t c = 0; c < 4; ++c) {
    EXPECT(sparft_reduced_cluster_size(reduced, c) == 6);
    for (size_t i = 0; i < 6; ++i) EXPECT(sparft_reduced_id(reduced, c, i) != NULL);
  }
  EXPECT(sparft_reduced_id(reduced, 4, 0) == NULL);
  OK(sparft_reduced_save(reduced, in_work("manifest.json")));

  /* Scheduler with checkpoint and restore. */
  sparft_scheduler* sched = NULL;
  OK(sparft_scheduler_create(reduced, 4, 1e-6, 5, &sched));
  EXPECT(sparft_scheduler_arms(sched) == 4);
  sparft_batch batch;
  for (uint64_t t = 0; t < 20; ++t) {
    OK(sparft_scheduler_next_batch(sched, &batch));
    EXPECT(batch.step == t);
    EXPECT(batch.size == 4);
    EXPECT(sparft_scheduler_batch_id(sched, 0) != NULL);
    EXPECT(sparft_scheduler_batch_id(sched, 4) == NULL);
    uint8_t correct[4] = {1, 0, (uint8_t)(t % 2), 1};
    double r = 0;
    OK(sparft_average_reward(correct, 4, &r));
    OK(sparft_scheduler_report(sched, t, r));
  }
  EXPECT(sparft_scheduler_report(sched, 20, 0.5) == SPARFT_ERR_PROTOCOL);
  EXPECT(sparft_scheduler_step(sched) == 20);
  uint64_t pulls[4];
  double reward[4];
  OK(sparft_scheduler_stats(sched, reward, pulls, 4));
  EXPECT(pulls[0] + pulls[1] + pulls[2] + pulls[3] == 20);
  EXPECT(sparft_scheduler_stats(sched, reward, pulls, 3) == SPARFT_ERR_INVALID_ARGUMENT);
  OK(sparft_scheduler_checkpoint(sched, in_work("sched.json")));

  sparft_scheduler* restored = NULL;
  OK(sparft_scheduler_restore(reduced, in_work("sched.json"), &restored));
  sparft_batch a, b;
  OK(sparft_scheduler_next_batch(sched, &a));
  OK(sparft_scheduler_next_batch(restored, &b));
  EXPECT(a.step == b.step && a.cluster == b.cluster);
  EXPECT(strcmp(sparft_scheduler_batch_id(sched, 0), sparft_scheduler_batch_id(restored, 0)) == 0);
  sparft_scheduler_free(restored);
  sparft_scheduler_free(sched);

  /* Simulation and replay. */
  const char* cfg = "{\"simulation\":{\"steps\":200,\"window\":50}}";
  OK(sparft_simulate(cfg, reduced, 3, in_work("sim")));
  OK(sparft_replay(in_work("sim/decisions.jsonl"), 50, in_work("replay.json")));
  OK(sparft_compare(cfg, NULL, 3, 2, in_work("cmp")));
  FILE* f = fopen(in_work("cmp/comparison.csv"), "r");
  EXPECT(f != NULL);
  if (f) fclose(f);

  /* Service over the same manifest. */
  remove(in_work("state/c.checkpoint.json"));
  remove(in_work("state/c.decisions.jsonl"));
  sparft_service* svc = NULL;
  char cfg_svc[5000];
  snprintf(cfg_svc, sizeof cfg_svc, "{\"service\":{\"state_dir\":\"%s\"}}", in_work("state"));
  OK(sparft_service_create(cfg_svc, reduced, 11, &svc));
  char* resp = NULL;
  OK(sparft_service_handle(svc, "{\"op\":\"next_batch\",\"session\":\"c\"}", &resp));
  EXPECT(strstr(resp, "\"step\":0") != NULL);
  sparft_string_free(resp);
  OK(sparft_service_handle(svc, "{\"op\":\"report\",\"session\":\"c\",\"step\":0,\"r_avg\":0.75}", &resp));
  EXPECT(strcmp(resp, "{\"ok\":true}") == 0);
  sparft_string_free(resp);
  OK(sparft_service_handle(svc, "nonsense", &resp));
  EXPECT(strstr(resp, "bad_json") != NULL);
  sparft_string_free(resp);
  EXPECT(!sparft_service_is_shutdown(svc));
  OK(sparft_service_handle(svc, "{\"op\":\"shutdown\"}", &resp));
  sparft_string_free(resp);
  EXPECT(sparft_service_is_shutdown(svc));
  OK(sparft_service_checkpoint(svc));
  sparft_service_free(svc);

  sparft_reduced* manifest = NULL;
  OK(sparft_reduced_load(in_work("manifest.json"), &manifest));
  EXPECT(strcmp(sparft_reduced_id(manifest, 2, 3), sparft_reduced_id(reduced, 2, 3)) == 0);
  sparft_reduced_free(manifest);

  sparft_reduced_free(reduced);
  sparft_clusters_free(clusters);
  sparft_features_free(features);
  sparft_corpus_free(corpus);
}

int main(int argc, char** argv) {
  if (argc != 3) {
    fprintf(stderr, "usage: %s <data dir> <work dir>\n", argv[0]);
    return 2;
  }
  snprintf(data_dir, sizeof data_dir, "%s", argv[1]);
  snprintf(work_dir, sizeof work_dir, "%s", argv[2]);
  mkdir(work_dir, 0755);
  errors();
  pipeline();
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  return failures ? 1 : 0;
}
