#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clustering.hpp"
#include "learner_sim.hpp"
#include "reduction.hpp"
#include "scheduler.hpp"
#include "service.hpp"

namespace sparft {

// One document configures every stage; every key is optional and unknown keys
// are rejected with the offending path.
//
// {
//   "features":   {"pca_components": 50},
//   "clustering": {"k": 7, "max_iters": 300, "tol": 1e-6},
//   "reduction":  {"strategy": "diverse", "per_cluster": 10},
//   "scheduler":  {"batch_size": 8, "epsilon": 1e-6},
//   "simulation": {"policy": "thompson", "steps": 1200, "window": 100, "arms": 7,
//                  "compare": ["thompson", "uniform", "round_robin", "oracle"],
//                  "learner": {"initial_solve_rate": [...], "gain": [...], "spillover": 0.2,
//                              "lipschitz": 1.0, "max_grad_norm": 0.1,
//                              "schedule": {"shape": "cosine", "base_lr": 0.05,
//                                           "warmup_ratio": 0.1, "total_steps": 1200}}},
//   "service":    {"manifest": "...", "state_dir": "...", "checkpoint_interval": 1,
//                  "transport": "stdio"}
// }
struct PipelineConfig {
  std::size_t pca_components = kDefaultPcaComponents;
  KMeansParams clustering;
  SelectionStrategy strategy = SelectionStrategy::Diverse;
  std::size_t per_cluster = kDefaultPerCluster;
  SchedulerConfig scheduler;

  EpisodeConfig simulation;
  bool learner_given = false;           // simulation.learner.initial_solve_rate present
  std::size_t simulation_arms = 7;      // used when there is no manifest
  bool schedule_steps_given = false;    // simulation.learner.schedule.total_steps present
  std::vector<PolicyKind> compare;

  ServiceConfig service;
};

PipelineConfig parse_config(const nlohmann::json& doc);
PipelineConfig parse_config_text(const std::string& text);

// Fully spelled-out document; parse_config(config_to_json(c)) reproduces c.
nlohmann::json config_to_json(const PipelineConfig& config);

// Learner used by the simulate stage when the config does not spell one out.
// With a manifest carrying per-cluster difficulty, clusters start at
// 1 - difficulty / 100; otherwise the built-in profile for `arms` clusters.
LearnerConfig default_learner(std::size_t arms, const ReducedSet* reduced);

// Final episode config for a simulate run: learner filled in, schedule length
// tied to the episode length unless given, seed applied.
EpisodeConfig resolve_episode(const PipelineConfig& config, const ReducedSet& reduced, std::uint64_t seed);

}  // namespace sparft
