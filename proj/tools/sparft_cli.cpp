// sparft command line: each subcommand is one pipeline stage.
//
//   sparft score     --corpus raw.jsonl --attempts attempts.jsonl --out scored.jsonl
//   sparft featurize --corpus scored.jsonl --out features.json
//   sparft cluster   --features features.json --out clusters.json --seed 1
//   sparft reduce    --features features.json --clusters clusters.json --out manifest.json --seed 1
//   sparft simulate  [--manifest manifest.json] --out run/ --seed 1
//   sparft serve     --manifest manifest.json --state-dir state/ --seed 1
//   sparft replay    --log run/decisions.jsonl --out heatmap.json
//
// Every subcommand takes --config <file.json>; flags override the file.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sparft/sparft.h"

using nlohmann::json;

namespace {

struct Failure {
  sparft_status status;
};

void check(sparft_status st) {
  if (st != SPARFT_OK) throw Failure{st};
}

struct Handle {
  sparft_corpus* corpus = nullptr;
  sparft_features* features = nullptr;
  sparft_clusters* clusters = nullptr;
  sparft_reduced* reduced = nullptr;
  sparft_service* service = nullptr;
  ~Handle() {
    sparft_service_free(service);
    sparft_reduced_free(reduced);
    sparft_clusters_free(clusters);
    sparft_features_free(features);
    sparft_corpus_free(corpus);
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Config {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    try {
      doc_ = json::parse(slurp(path), nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!doc_.is_object()) throw std::runtime_error("config '" + path + "' must be a JSON object");
  }

  template <typename T>
  void set(const char* section, const char* key, const std::optional<T>& value) {
    if (value) doc_[section][key] = *value;
  }

  // Validated document with every default filled in.
  json resolved() const {
    char* buf = nullptr;
    check(sparft_config_resolve(text().c_str(), &buf));
    json out = json::parse(buf);
    sparft_string_free(buf);
    return out;
  }

  std::string text() const { return doc_.is_null() ? "{}" : doc_.dump(); }

 private:
  json doc_;
};

void on_log(sparft_log_level level, const char* msg, void*) {
  std::fprintf(stderr, "sparft: %s: %s\n", level == SPARFT_LOG_WARNING ? "warning" : "info", msg);
}

sparft_strategy strategy_from(const std::string& name) {
  if (name == "diverse") return SPARFT_STRATEGY_DIVERSE;
  if (name == "random") return SPARFT_STRATEGY_RANDOM;
  if (name == "closest") return SPARFT_STRATEGY_CLOSEST;
  throw std::runtime_error("unknown strategy '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-based data reduction and bandit curriculum scheduling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sparft_version());

  std::string config_path;
  std::optional<std::uint64_t> seed;
  Config config;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "RNG seed")->required(); };

  // score
  std::string corpus_path, attempts_path, out_path;
  auto* score = app.add_subcommand("score", "Annotate a corpus with difficulty from an attempts log");
  add_config(score);
  score->add_option("--corpus", corpus_path, "corpus JSON lines")->required()->check(CLI::ExistingFile);
  score->add_option("--attempts", attempts_path, "attempts log JSON lines")->required()->check(CLI::ExistingFile);
  score->add_option("--out", out_path, "annotated corpus")->required();

  // featurize
  std::optional<std::size_t> pca;
  auto* featurize = app.add_subcommand("featurize", "PCA-reduce embeddings and fuse with difficulty");
  add_config(featurize);
  featurize->add_option("--corpus", corpus_path, "annotated corpus")->required()->check(CLI::ExistingFile);
  featurize->add_option("--out", out_path, "feature matrix")->required();
  featurize->add_option("--pca-components", pca, "principal components kept");

  // cluster
  std::string features_path, clusters_path;
  std::optional<std::size_t> k, max_iters;
  std::optional<double> tol;
  auto* cluster = app.add_subcommand("cluster", "k-means++ and Lloyd iterations over a feature matrix");
  add_config(cluster);
  add_seed(cluster);
  cluster->add_option("--features", features_path, "feature matrix")->required()->check(CLI::ExistingFile);
  cluster->add_option("--out", out_path, "cluster model")->required();
  cluster->add_option("-k,--k", k, "number of clusters");
  cluster->add_option("--max-iters", max_iters, "Lloyd iteration cap");
  cluster->add_option("--tol", tol, "centroid shift tolerance");

  // reduce
  std::optional<std::string> strategy;
  std::optional<std::size_t> per_cluster;
  auto* reduce = app.add_subcommand("reduce", "Select representatives per cluster");
  add_config(reduce);
  add_seed(reduce);
  reduce->add_option("--features", features_path, "feature matrix")->required()->check(CLI::ExistingFile);
  reduce->add_option("--clusters", clusters_path, "cluster model")->required()->check(CLI::ExistingFile);
  reduce->add_option("--out", out_path, "reduced-set manifest")->required();
  reduce->add_option("--strategy", strategy, "diverse, random or closest");
  reduce->add_option("-l,--per-cluster", per_cluster, "examples kept per cluster");

  // simulate
  std::string manifest_path;
  std::optional<std::string> policy;
  std::optional<std::uint64_t> steps;
  std::optional<std::size_t> window, batch_size, arms;
  bool compare = false;
  std::size_t n_seeds = 3;
  auto* simulate = app.add_subcommand("simulate", "Run the scheduler against a simulated learner");
  add_config(simulate);
  add_seed(simulate);
  simulate->add_option("--manifest", manifest_path, "reduced-set manifest (synthetic if omitted)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", out_path, "output directory")->required();
  simulate->add_option("--policy", policy, "thompson, uniform, round_robin or oracle");
  simulate->add_option("--steps", steps, "episode length");
  simulate->add_option("--window", window, "heatmap window");
  simulate->add_option("--batch-size", batch_size, "examples per batch");
  simulate->add_option("--arms", arms, "clusters in the synthetic manifest");
  simulate->add_flag("--compare", compare, "run every policy in simulation.compare over several seeds");
  simulate->add_option("--seeds", n_seeds, "seeds for --compare, starting at --seed")->check(CLI::PositiveNumber);

  // serve
  std::optional<std::string> state_dir, transport, serve_manifest;
  std::optional<std::uint64_t> interval;
  auto* serve = app.add_subcommand("serve", "JSON-lines scheduler service");
  add_config(serve);
  add_seed(serve);
  serve->add_option("--manifest", serve_manifest, "reduced-set manifest");
  serve->add_option("--state-dir", state_dir, "checkpoint and decision-log directory");
  serve->add_option("--transport", transport, "stdio or tcp:<host>:<port>")->envname("SPARFT_TRANSPORT");
  serve->add_option("--checkpoint-interval", interval, "reports between checkpoints");
  serve->add_option("--batch-size", batch_size, "examples per batch");

  // replay
  std::string log_path;
  auto* replay = app.add_subcommand("replay", "Rebuild heatmap data from a decision log");
  add_config(replay);
  replay->add_option("--log", log_path, "decisions.jsonl")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", out_path, "heatmap JSON")->required();
  replay->add_option("--window", window, "steps per window");

  CLI11_PARSE(app, argc, argv);
  sparft_set_log_callback(on_log, nullptr);

  try {
    config.load(config_path);
    Handle h;

    if (*score) {
      config.resolved();
      std::size_t unknown = 0;
      check(sparft_corpus_load(corpus_path.c_str(), &h.corpus));
      check(sparft_corpus_annotate(h.corpus, attempts_path.c_str(), &unknown));
      check(sparft_corpus_save(h.corpus, out_path.c_str()));
      std::cerr << "scored " << sparft_corpus_size(h.corpus) << " examples";
      if (unknown) std::cerr << " (" << unknown << " unknown ids ignored)";
      std::cerr << "\n";
    } else if (*featurize) {
      config.set("features", "pca_components", pca);
      const json cfg = config.resolved();
      check(sparft_corpus_load(corpus_path.c_str(), &h.corpus));
      check(sparft_featurize(h.corpus, cfg["features"]["pca_components"].get<std::size_t>(), &h.features));
      check(sparft_features_save(h.features, out_path.c_str()));
    } else if (*cluster) {
      config.set("clustering", "k", k);
      config.set("clustering", "max_iters", max_iters);
      config.set("clustering", "tol", tol);
      const json c = config.resolved()["clustering"];
      check(sparft_features_load(features_path.c_str(), &h.features));
      sparft_kmeans_params p{c["k"].get<std::size_t>(), *seed, c["max_iters"].get<std::size_t>(),
                             c["tol"].get<double>()};
      check(sparft_kmeans(h.features, &p, &h.clusters));
      check(sparft_clusters_save(h.clusters, out_path.c_str()));
      std::cerr << "k=" << sparft_clusters_k(h.clusters) << " inertia=" << sparft_clusters_inertia(h.clusters)
                << "\n";
    } else if (*reduce) {
      config.set("reduction", "strategy", strategy);
      config.set("reduction", "per_cluster", per_cluster);
      const json r = config.resolved()["reduction"];
      check(sparft_features_load(features_path.c_str(), &h.features));
      check(sparft_clusters_load(clusters_path.c_str(), &h.clusters));
      check(sparft_reduce(h.features, h.clusters, strategy_from(r["strategy"].get<std::string>()),
                          r["per_cluster"].get<std::size_t>(), *seed, &h.reduced));
      check(sparft_reduced_save(h.reduced, out_path.c_str()));
    } else if (*simulate) {
      config.set("simulation", "policy", policy);
      config.set("simulation", "steps", steps);
      config.set("simulation", "window", window);
      config.set("simulation", "arms", arms);
      config.set("scheduler", "batch_size", batch_size);
      const std::string text = config.text();
      config.resolved();
      if (!manifest_path.empty()) check(sparft_reduced_load(manifest_path.c_str(), &h.reduced));
      if (compare)
        check(sparft_compare(text.c_str(), h.reduced, *seed, n_seeds, out_path.c_str()));
      else
        check(sparft_simulate(text.c_str(), h.reduced, *seed, out_path.c_str()));
    } else if (*serve) {
      config.set("service", "manifest", serve_manifest);
      config.set("service", "state_dir", state_dir);
      config.set("service", "transport", transport);
      config.set("service", "checkpoint_interval", interval);
      config.set("scheduler", "batch_size", batch_size);
      const std::string text = config.text();
      if (config.resolved()["service"]["manifest"].get<std::string>().empty())
        throw std::runtime_error("serve needs a manifest (--manifest or service.manifest)");
      check(sparft_service_create(text.c_str(), nullptr, *seed, &h.service));
      check(sparft_service_run(h.service));
    } else if (*replay) {
      config.set("simulation", "window", window);
      const json cfg = config.resolved();
      check(sparft_replay(log_path.c_str(), cfg["simulation"]["window"].get<std::size_t>(), out_path.c_str()));
    }
  } catch (const Failure& f) {
    std::cerr << "sparft: error (" << sparft_status_name(f.status) << "): " << sparft_last_error() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "sparft: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
