#include "sparft/sparft.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <mutex>
#include <new>
#include <string>
#include <vector>

#include "clustering.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "features.hpp"
#include "learner_sim.hpp"
#include "reduction.hpp"
#include "scheduler.hpp"
#include "service.hpp"

struct sparft_corpus {
  sparft::Corpus value;
};
struct sparft_features {
  sparft::FeatureMatrix value;
};
struct sparft_clusters {
  sparft::ClusterModel value;
};
struct sparft_reduced {
  sparft::ReducedSet value;
};
struct sparft_scheduler {
  sparft::CurriculumScheduler value;
  std::vector<std::string> batch;
};
struct sparft_service {
  sparft::Service value;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
sparft_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void log_warning(const std::string& msg) {
  std::lock_guard lock(g_log_mutex);
  if (g_log_fn) g_log_fn(SPARFT_LOG_WARNING, msg.c_str(), g_log_user);
}

sparft_status to_status(sparft::ErrorCode code) {
  using sparft::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return SPARFT_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return SPARFT_ERR_IO;
    case ErrorCode::Parse: return SPARFT_ERR_PARSE;
    case ErrorCode::DimensionMismatch: return SPARFT_ERR_DIMENSION;
    case ErrorCode::DuplicateId: return SPARFT_ERR_DUPLICATE_ID;
    case ErrorCode::MissingId: return SPARFT_ERR_MISSING_ID;
    case ErrorCode::DegenerateVariance: return SPARFT_ERR_DEGENERATE;
    case ErrorCode::CorruptArtifact: return SPARFT_ERR_CORRUPT;
    case ErrorCode::VersionMismatch: return SPARFT_ERR_VERSION;
    case ErrorCode::Protocol: return SPARFT_ERR_PROTOCOL;
    case ErrorCode::Internal: return SPARFT_ERR_INTERNAL;
  }
  return SPARFT_ERR_INTERNAL;
}

template <class F>
sparft_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return SPARFT_OK;
  } catch (const sparft::ProtocolError& e) {
    g_last_error = e.reason() + ": " + e.what();
    return SPARFT_ERR_PROTOCOL;
  } catch (const sparft::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SPARFT_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return SPARFT_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SPARFT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SPARFT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) sparft::fail(sparft::ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

sparft::PipelineConfig config_from(const char* text) {
  return text ? sparft::parse_config_text(text) : sparft::parse_config(nlohmann::json());
}

sparft::ReducedSet manifest_or_synthetic(const sparft::PipelineConfig& cfg, const sparft_reduced* reduced) {
  if (reduced) return reduced->value;
  return sparft::synthetic_reduced_set(cfg.simulation_arms, cfg.per_cluster);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* sparft_version(void) { return "0.1.0"; }

const char* sparft_last_error(void) { return g_last_error.c_str(); }

const char* sparft_status_name(sparft_status status) {
  switch (status) {
    case SPARFT_OK: return "ok";
    case SPARFT_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SPARFT_ERR_IO: return "io";
    case SPARFT_ERR_PARSE: return "parse";
    case SPARFT_ERR_DIMENSION: return "dimension_mismatch";
    case SPARFT_ERR_DUPLICATE_ID: return "duplicate_id";
    case SPARFT_ERR_MISSING_ID: return "missing_id";
    case SPARFT_ERR_DEGENERATE: return "degenerate_variance";
    case SPARFT_ERR_CORRUPT: return "corrupt_artifact";
    case SPARFT_ERR_VERSION: return "version_mismatch";
    case SPARFT_ERR_PROTOCOL: return "protocol";
    case SPARFT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void sparft_set_log_callback(sparft_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

void sparft_string_free(char* s) { std::free(s); }

sparft_status sparft_config_resolve(const char* config_json, char** resolved) {
  return guarded([&] {
    need(resolved, "resolved");
    *resolved = dup_string(sparft::config_to_json(config_from(config_json)).dump(2));
  });
}

sparft_status sparft_estimate_difficulty(uint32_t successes, uint32_t attempts, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = sparft::estimate_difficulty(successes, attempts);
  });
}

sparft_status sparft_corpus_load(const char* path, sparft_corpus** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sparft_corpus{sparft::load_corpus(path)};
  });
}

sparft_status sparft_corpus_save(const sparft_corpus* corpus, const char* path) {
  return guarded([&] {
    need(corpus, "corpus");
    need(path, "path");
    sparft::save_corpus(corpus->value, path);
  });
}

size_t sparft_corpus_size(const sparft_corpus* corpus) { return corpus ? corpus->value.size() : 0; }
size_t sparft_corpus_dim(const sparft_corpus* corpus) { return corpus ? corpus->value.dim() : 0; }

double sparft_corpus_difficulty(const sparft_corpus* corpus, size_t i) {
  if (!corpus || i >= corpus->value.size()) return -1.0;
  return corpus->value[i].difficulty.value_or(-1.0);
}

sparft_status sparft_corpus_annotate(sparft_corpus* corpus, const char* attempts_path, size_t* unknown_ids) {
  return guarded([&] {
    need(corpus, "corpus");
    need(attempts_path, "attempts_path");
    auto result = sparft::annotate_difficulty(corpus->value, std::filesystem::path(attempts_path));
    for (const auto& w : result.warnings) log_warning(w);
    if (unknown_ids) *unknown_ids = result.warnings.size();
    corpus->value = std::move(result.corpus);
  });
}

void sparft_corpus_free(sparft_corpus* corpus) { delete corpus; }

sparft_status sparft_featurize(const sparft_corpus* corpus, size_t pca_components, sparft_features** out) {
  return guarded([&] {
    need(corpus, "corpus");
    need(out, "out");
    *out = new sparft_features{sparft::featurize(corpus->value, pca_components)};
  });
}

sparft_status sparft_features_load(const char* path, sparft_features** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sparft_features{sparft::load_features(path)};
  });
}

sparft_status sparft_features_save(const sparft_features* features, const char* path) {
  return guarded([&] {
    need(features, "features");
    need(path, "path");
    sparft::save_features(features->value, path);
  });
}

size_t sparft_features_rows(const sparft_features* features) { return features ? features->value.size() : 0; }
size_t sparft_features_width(const sparft_features* features) { return features ? features->value.width() : 0; }

sparft_status sparft_features_row(const sparft_features* features, size_t i, double* out, size_t len) {
  return guarded([&] {
    need(features, "features");
    need(out, "out");
    const auto& m = features->value.rows;
    sparft::require(i < m.rows(), "row index out of range");
    sparft::require(len >= m.cols(), "output buffer is shorter than the feature width");
    const auto row = m.row(i);
    std::copy(row.begin(), row.end(), out);
  });
}

void sparft_features_free(sparft_features* features) { delete features; }

sparft_status sparft_kmeans(const sparft_features* features, const sparft_kmeans_params* params,
                            sparft_clusters** out) {
  return guarded([&] {
    need(features, "features");
    need(params, "params");
    need(out, "out");
    sparft::KMeansParams p;
    p.k = params->k;
    p.seed = params->seed;
    if (params->max_iters > 0) p.max_iters = params->max_iters;
    if (params->tol >= 0) p.tol = params->tol;
    *out = new sparft_clusters{sparft::kmeans(features->value, p)};
  });
}

sparft_status sparft_clusters_load(const char* path, sparft_clusters** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sparft_clusters{sparft::load_cluster_model(path)};
  });
}

sparft_status sparft_clusters_save(const sparft_clusters* clusters, const char* path) {
  return guarded([&] {
    need(clusters, "clusters");
    need(path, "path");
    sparft::save_cluster_model(clusters->value, path);
  });
}

size_t sparft_clusters_k(const sparft_clusters* clusters) { return clusters ? clusters->value.k : 0; }
double sparft_clusters_inertia(const sparft_clusters* clusters) { return clusters ? clusters->value.inertia : 0.0; }

size_t sparft_clusters_assignment(const sparft_clusters* clusters, size_t i) {
  if (!clusters || i >= clusters->value.assignment.size()) return SIZE_MAX;
  return clusters->value.assignment[i];
}

sparft_status sparft_clusters_nearest(const sparft_clusters* clusters, const double* point, size_t len,
                                      size_t* out) {
  return guarded([&] {
    need(clusters, "clusters");
    need(point, "point");
    need(out, "out");
    *out = sparft::nearest_centroid(clusters->value, std::span<const double>(point, len));
  });
}

void sparft_clusters_free(sparft_clusters* clusters) { delete clusters; }

sparft_status sparft_reduce(const sparft_features* features, const sparft_clusters* clusters,
                            sparft_strategy strategy, size_t per_cluster, uint64_t seed, sparft_reduced** out) {
  return guarded([&] {
    need(features, "features");
    need(clusters, "clusters");
    need(out, "out");
    sparft::SelectionStrategy s;
    switch (strategy) {
      case SPARFT_STRATEGY_DIVERSE: s = sparft::SelectionStrategy::Diverse; break;
      case SPARFT_STRATEGY_RANDOM: s = sparft::SelectionStrategy::Random; break;
      case SPARFT_STRATEGY_CLOSEST: s = sparft::SelectionStrategy::Closest; break;
      default: sparft::fail(sparft::ErrorCode::InvalidArgument, "unknown selection strategy");
    }
    *out = new sparft_reduced{sparft::reduce(features->value, clusters->value, s, per_cluster, seed)};
  });
}

sparft_status sparft_reduced_load(const char* path, sparft_reduced** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sparft_reduced{sparft::load_reduced_set(path)};
  });
}

sparft_status sparft_reduced_save(const sparft_reduced* reduced, const char* path) {
  return guarded([&] {
    need(reduced, "reduced");
    need(path, "path");
    sparft::save_reduced_set(reduced->value, path);
  });
}

size_t sparft_reduced_clusters(const sparft_reduced* reduced) { return reduced ? reduced->value.cluster_count() : 0; }

size_t sparft_reduced_cluster_size(const sparft_reduced* reduced, size_t cluster) {
  if (!reduced || cluster >= reduced->value.cluster_count()) return 0;
  return reduced->value.clusters[cluster].size();
}

const char* sparft_reduced_id(const sparft_reduced* reduced, size_t cluster, size_t i) {
  if (!reduced || cluster >= reduced->value.cluster_count()) return nullptr;
  const auto& ids = reduced->value.clusters[cluster];
  return i < ids.size() ? ids[i].c_str() : nullptr;
}

void sparft_reduced_free(sparft_reduced* reduced) { delete reduced; }

sparft_status sparft_scheduler_create(const sparft_reduced* reduced, size_t batch_size, double epsilon,
                                      uint64_t seed, sparft_scheduler** out) {
  return guarded([&] {
    need(reduced, "reduced");
    need(out, "out");
    sparft::SchedulerConfig cfg{batch_size, epsilon, seed};
    *out = new sparft_scheduler{sparft::CurriculumScheduler(reduced->value, cfg), {}};
  });
}

sparft_status sparft_scheduler_next_batch(sparft_scheduler* scheduler, sparft_batch* out) {
  return guarded([&] {
    need(scheduler, "scheduler");
    need(out, "out");
    auto req = scheduler->value.next_batch();
    scheduler->batch = std::move(req.ids);
    out->step = req.step;
    out->cluster = req.cluster;
    out->size = scheduler->batch.size();
  });
}

const char* sparft_scheduler_batch_id(const sparft_scheduler* scheduler, size_t i) {
  if (!scheduler || i >= scheduler->batch.size()) return nullptr;
  return scheduler->batch[i].c_str();
}

sparft_status sparft_average_reward(const uint8_t* correct, size_t len, double* out) {
  return guarded([&] {
    need(out, "out");
    if (len > 0) need(correct, "correct");
    *out = sparft::average_reward(std::span<const std::uint8_t>(correct, len));
  });
}

sparft_status sparft_scheduler_report(sparft_scheduler* scheduler, uint64_t step, double r_avg) {
  return guarded([&] {
    need(scheduler, "scheduler");
    scheduler->value.report(step, r_avg);
  });
}

size_t sparft_scheduler_arms(const sparft_scheduler* scheduler) {
  return scheduler ? scheduler->value.state().arms() : 0;
}

uint64_t sparft_scheduler_step(const sparft_scheduler* scheduler) {
  return scheduler ? scheduler->value.state().step() : 0;
}

sparft_status sparft_scheduler_stats(const sparft_scheduler* scheduler, double* reward, uint64_t* pulls,
                                     size_t arms) {
  return guarded([&] {
    need(scheduler, "scheduler");
    const auto& st = scheduler->value.state();
    sparft::require(arms >= st.arms(), "output buffers are shorter than the number of clusters");
    for (std::size_t k = 0; k < st.arms(); ++k) {
      if (reward) reward[k] = st.reward()[k];
      if (pulls) pulls[k] = st.pulls()[k];
    }
  });
}

sparft_status sparft_scheduler_checkpoint(const sparft_scheduler* scheduler, const char* path) {
  return guarded([&] {
    need(scheduler, "scheduler");
    need(path, "path");
    sparft::write_file(path, scheduler->value.checkpoint());
  });
}

sparft_status sparft_scheduler_restore(const sparft_reduced* reduced, const char* path, sparft_scheduler** out) {
  return guarded([&] {
    need(reduced, "reduced");
    need(path, "path");
    need(out, "out");
    auto sched = sparft::CurriculumScheduler::restore(reduced->value, sparft::read_file(path));
    std::vector<std::string> batch;
    if (sched.pending()) batch = sched.pending()->ids;
    *out = new sparft_scheduler{std::move(sched), std::move(batch)};
  });
}

void sparft_scheduler_free(sparft_scheduler* scheduler) { delete scheduler; }

sparft_status sparft_simulate(const char* config_json, const sparft_reduced* reduced, uint64_t seed,
                              const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    const auto cfg = config_from(config_json);
    const auto set = manifest_or_synthetic(cfg, reduced);
    const auto episode = sparft::resolve_episode(cfg, set, seed);
    sparft::export_metrics(sparft::run_episode(episode, set), out_dir);
  });
}

sparft_status sparft_compare(const char* config_json, const sparft_reduced* reduced, uint64_t seed, size_t n_seeds,
                             const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    sparft::require(n_seeds >= 1, "compare needs at least one seed");
    const auto cfg = config_from(config_json);
    const auto set = manifest_or_synthetic(cfg, reduced);
    const auto base = sparft::resolve_episode(cfg, set, seed);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(seed + i);
    const auto report = sparft::compare_schedulers(cfg.compare, base, set, seeds);
    const std::filesystem::path dir(out_dir);
    sparft::write_file(dir / "comparison.csv", report.csv());
    for (const auto& run : report.runs)
      sparft::write_file(dir / (run.policy + "_seed" + std::to_string(run.seed) + ".heatmap.json"),
                         sparft::serialize_heatmap(sparft::heatmap_from_metrics(run)));
  });
}

sparft_status sparft_replay(const char* decision_log, size_t window, const char* out_path) {
  return guarded([&] {
    need(decision_log, "decision_log");
    need(out_path, "out_path");
    const auto log = sparft::read_decision_log(decision_log);
    sparft::write_file(out_path, sparft::serialize_heatmap(sparft::heatmap_from_log(log, window)));
  });
}

sparft_status sparft_service_create(const char* config_json, const sparft_reduced* reduced, uint64_t seed,
                                    sparft_service** out) {
  return guarded([&] {
    need(out, "out");
    auto cfg = config_from(config_json);
    auto svc = cfg.service;
    svc.scheduler = cfg.scheduler;
    svc.scheduler.seed = seed;
    if (reduced) {
      *out = new sparft_service{sparft::Service(svc, reduced->value)};
    } else {
      sparft::require(!svc.manifest.empty(), "service.manifest is required when no manifest handle is given");
      *out = new sparft_service{sparft::Service(svc)};
    }
  });
}

sparft_status sparft_service_handle(sparft_service* service, const char* request, char** response) {
  return guarded([&] {
    need(service, "service");
    need(request, "request");
    need(response, "response");
    *response = dup_string(service->value.handle(request));
  });
}

int sparft_service_is_shutdown(const sparft_service* service) {
  return service && service->value.shutting_down() ? 1 : 0;
}

sparft_status sparft_service_checkpoint(sparft_service* service) {
  return guarded([&] {
    need(service, "service");
    service->value.checkpoint_all();
  });
}

sparft_status sparft_service_run(sparft_service* service) {
  return guarded([&] {
    need(service, "service");
    sparft::serve(service->value);
  });
}

void sparft_service_free(sparft_service* service) { delete service; }

}  // extern "C"
