#include "config.hpp"

#include <algorithm>
#include <set>

#include "error.hpp"

namespace sparft {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(ErrorCode::InvalidArgument, "config: '" + path + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) {
      std::string list;
      for (const auto& k : ok) list += (list.empty() ? "" : ", ") + k;
      fail(ErrorCode::InvalidArgument,
           "config: unknown key '" + (path.empty() ? key : path + "." + key) + "' (allowed: " + list + ")");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::InvalidArgument, "config: '" + path + "." + key + "' has the wrong type (" + it->dump() + ")");
  }
}

std::size_t positive(const json& obj, const char* key, const std::string& path, std::size_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number_unsigned() || it->get<std::uint64_t>() == 0)
    fail(ErrorCode::InvalidArgument, "config: '" + path + "." + key + "' must be a positive integer");
  return it->get<std::size_t>();
}

}  // namespace

PipelineConfig parse_config(const json& doc) {
  PipelineConfig cfg;
  cfg.compare = {PolicyKind::Thompson, PolicyKind::Uniform, PolicyKind::RoundRobin, PolicyKind::Oracle};
  cfg.simulation.steps = 1200;
  cfg.simulation.window = 100;
  if (doc.is_null()) return cfg;
  check_keys(doc, "", {"features", "clustering", "reduction", "scheduler", "simulation", "service"});

  if (auto it = doc.find("features"); it != doc.end()) {
    check_keys(*it, "features", {"pca_components"});
    cfg.pca_components = positive(*it, "pca_components", "features", cfg.pca_components);
  }
  if (auto it = doc.find("clustering"); it != doc.end()) {
    check_keys(*it, "clustering", {"k", "max_iters", "tol"});
    cfg.clustering.k = positive(*it, "k", "clustering", cfg.clustering.k);
    cfg.clustering.max_iters = positive(*it, "max_iters", "clustering", cfg.clustering.max_iters);
    read(*it, "tol", "clustering", cfg.clustering.tol);
    require(cfg.clustering.tol >= 0.0, "config: 'clustering.tol' must be nonnegative");
  }
  if (auto it = doc.find("reduction"); it != doc.end()) {
    check_keys(*it, "reduction", {"strategy", "per_cluster"});
    std::string strategy(to_string(cfg.strategy));
    read(*it, "strategy", "reduction", strategy);
    cfg.strategy = parse_strategy(strategy);
    cfg.per_cluster = positive(*it, "per_cluster", "reduction", cfg.per_cluster);
  }
  if (auto it = doc.find("scheduler"); it != doc.end()) {
    check_keys(*it, "scheduler", {"batch_size", "epsilon"});
    cfg.scheduler.batch_size = positive(*it, "batch_size", "scheduler", cfg.scheduler.batch_size);
    read(*it, "epsilon", "scheduler", cfg.scheduler.epsilon);
    require(cfg.scheduler.epsilon > 0.0, "config: 'scheduler.epsilon' must be positive");
  }
  if (auto it = doc.find("simulation"); it != doc.end()) {
    const json& sim = *it;
    check_keys(sim, "simulation", {"policy", "steps", "window", "arms", "compare", "learner"});
    std::string policy(to_string(cfg.simulation.policy));
    read(sim, "policy", "simulation", policy);
    cfg.simulation.policy = parse_policy(policy);
    cfg.simulation.steps = positive(sim, "steps", "simulation", cfg.simulation.steps);
    cfg.simulation.window = positive(sim, "window", "simulation", cfg.simulation.window);
    cfg.simulation_arms = positive(sim, "arms", "simulation", cfg.simulation_arms);
    if (auto c = sim.find("compare"); c != sim.end()) {
      std::vector<std::string> names;
      read(sim, "compare", "simulation", names);
      cfg.compare.clear();
      for (const auto& n : names) cfg.compare.push_back(parse_policy(n));
    }
    if (auto l = sim.find("learner"); l != sim.end()) {
      const json& lj = *l;
      check_keys(lj, "simulation.learner",
                 {"initial_solve_rate", "gain", "spillover", "lipschitz", "max_grad_norm", "schedule"});
      LearnerConfig& lc = cfg.simulation.learner;
      read(lj, "initial_solve_rate", "simulation.learner", lc.initial_solve_rate);
      read(lj, "gain", "simulation.learner", lc.gain);
      read(lj, "spillover", "simulation.learner", lc.spillover);
      read(lj, "lipschitz", "simulation.learner", lc.lipschitz);
      read(lj, "max_grad_norm", "simulation.learner", lc.max_grad_norm);
      cfg.learner_given = !lc.initial_solve_rate.empty();
      if (cfg.learner_given && lc.gain.empty()) lc.gain.assign(lc.initial_solve_rate.size(), 0.0);
      if (auto s = lj.find("schedule"); s != lj.end()) {
        check_keys(*s, "simulation.learner.schedule", {"shape", "base_lr", "warmup_ratio", "total_steps"});
        std::string shape(to_string(lc.schedule.shape));
        read(*s, "shape", "simulation.learner.schedule", shape);
        lc.schedule.shape = parse_lr_shape(shape);
        read(*s, "base_lr", "simulation.learner.schedule", lc.schedule.base_lr);
        read(*s, "warmup_ratio", "simulation.learner.schedule", lc.schedule.warmup_ratio);
        if (s->contains("total_steps") && !(*s)["total_steps"].is_null()) {
          lc.schedule.total_steps = positive(*s, "total_steps", "simulation.learner.schedule", 1);
          cfg.schedule_steps_given = true;
        }
      }
    }
  }
  if (auto it = doc.find("service"); it != doc.end()) {
    check_keys(*it, "service", {"manifest", "state_dir", "checkpoint_interval", "transport"});
    std::string manifest, state_dir;
    read(*it, "manifest", "service", manifest);
    read(*it, "state_dir", "service", state_dir);
    cfg.service.manifest = manifest;
    cfg.service.state_dir = state_dir;
    cfg.service.checkpoint_interval = positive(*it, "checkpoint_interval", "service", cfg.service.checkpoint_interval);
    read(*it, "transport", "service", cfg.service.transport);
    parse_transport(cfg.service.transport);
  }
  cfg.simulation.scheduler = cfg.scheduler;
  return cfg;
}

PipelineConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const PipelineConfig& c) {
  json doc;
  doc["features"] = {{"pca_components", c.pca_components}};
  doc["clustering"] = {{"k", c.clustering.k}, {"max_iters", c.clustering.max_iters}, {"tol", c.clustering.tol}};
  doc["reduction"] = {{"strategy", to_string(c.strategy)}, {"per_cluster", c.per_cluster}};
  doc["scheduler"] = {{"batch_size", c.scheduler.batch_size}, {"epsilon", c.scheduler.epsilon}};

  const auto& sim = c.simulation;
  const auto& lc = sim.learner;
  json schedule = {{"shape", to_string(lc.schedule.shape)},
                   {"base_lr", lc.schedule.base_lr},
                   {"warmup_ratio", lc.schedule.warmup_ratio}};
  if (c.schedule_steps_given) schedule["total_steps"] = lc.schedule.total_steps;
  json learner = {{"spillover", lc.spillover},
                  {"lipschitz", lc.lipschitz},
                  {"max_grad_norm", lc.max_grad_norm},
                  {"schedule", schedule}};
  if (c.learner_given) {
    learner["initial_solve_rate"] = lc.initial_solve_rate;
    learner["gain"] = lc.gain;
  }
  json compare = json::array();
  for (auto p : c.compare) compare.push_back(to_string(p));
  doc["simulation"] = {{"policy", to_string(sim.policy)}, {"steps", sim.steps},   {"window", sim.window},
                       {"arms", c.simulation_arms},       {"compare", compare}, {"learner", learner}};
  doc["service"] = {{"manifest", c.service.manifest.string()},
                    {"state_dir", c.service.state_dir.string()},
                    {"checkpoint_interval", c.service.checkpoint_interval},
                    {"transport", c.service.transport}};
  return doc;
}

LearnerConfig default_learner(std::size_t arms, const ReducedSet* reduced) {
  require(arms >= 1, "learner needs at least one cluster");
  LearnerConfig lc;
  if (reduced && reduced->mean_difficulty.size() == arms) {
    for (double d : reduced->mean_difficulty) lc.initial_solve_rate.push_back(std::clamp(1.0 - d / 100.0, 0.0, 1.0));
  } else {
    // Two hard clusters that respond to training, one easy cluster that does
    // not, and the rest in between with mixed responsiveness.
    static constexpr double kRates[] = {0.5, 0.2, 0.22, 0.7, 0.45, 0.55, 0.6};
    for (std::size_t k = 0; k < arms; ++k) lc.initial_solve_rate.push_back(kRates[k % std::size(kRates)]);
  }
  static constexpr double kGains[] = {0.005, 0.02, 0.02, 0.0, 0.01, 0.01, 0.005};
  for (std::size_t k = 0; k < arms; ++k) lc.gain.push_back(kGains[k % std::size(kGains)]);
  return lc;
}

EpisodeConfig resolve_episode(const PipelineConfig& config, const ReducedSet& reduced, std::uint64_t seed) {
  EpisodeConfig ep = config.simulation;
  ep.scheduler = config.scheduler;
  ep.scheduler.seed = seed;
  const std::size_t arms = reduced.cluster_count();
  if (!config.learner_given) {
    LearnerConfig base = default_learner(arms, &reduced);
    base.spillover = ep.learner.spillover;
    base.lipschitz = ep.learner.lipschitz;
    base.max_grad_norm = ep.learner.max_grad_norm;
    base.schedule = ep.learner.schedule;
    ep.learner = std::move(base);
  }
  if (!config.schedule_steps_given) ep.learner.schedule.total_steps = ep.steps;
  if (ep.learner.arms() != arms)
    fail(ErrorCode::InvalidArgument, "config: simulation.learner describes " + std::to_string(ep.learner.arms()) +
                                         " clusters but the manifest has " + std::to_string(arms));
  ep.learner.validate();
  return ep;
}

}  // namespace sparft
