#include <doctest.h>

#include "config.hpp"
#include "error.hpp"

using namespace sparft;
using nlohmann::json;

TEST_CASE("empty document gives the defaults") {
  const auto c = parse_config(json::object());
  CHECK(c.pca_components == 50);
  CHECK(c.clustering.k == 7);
  CHECK(c.strategy == SelectionStrategy::Diverse);
  CHECK(c.per_cluster == 10);
  CHECK(c.scheduler.batch_size == 8);
  CHECK(c.scheduler.epsilon == 1e-6);
  CHECK(c.simulation.steps == 1200);
  CHECK(c.simulation.window == 100);
  CHECK(c.compare.size() == 4);
  CHECK_FALSE(c.learner_given);
  CHECK(parse_config(json()).simulation.steps == 1200);
}

TEST_CASE("unknown keys name their path") {
  try {
    parse_config(json::parse(R"({"simulation":{"learner":{"schedule":{"shap":"cosine"}}}})"));
    FAIL("accepted an unknown key");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
    CHECK(std::string(e.what()).find("simulation.learner.schedule.shap") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(json::parse(R"({"reduction":{"strategy":"best"}})")), Error);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"clustering":{"k":"seven"}})")), Error);
  CHECK_THROWS_AS(parse_config(json::parse(R"([1])")), Error);
  CHECK_THROWS_AS(parse_config_text("{"), Error);
}

TEST_CASE("spelled-out document round-trips") {
  const auto c = parse_config(json::parse(R"({
    "features": {"pca_components": 12},
    "clustering": {"k": 5, "max_iters": 40, "tol": 1e-4},
    "reduction": {"strategy": "closest", "per_cluster": 6},
    "scheduler": {"batch_size": 4, "epsilon": 1e-3},
    "simulation": {"policy": "uniform", "steps": 300, "window": 50, "arms": 5, "compare": ["oracle"],
                   "learner": {"initial_solve_rate": [0.1, 0.2, 0.3, 0.4, 0.5], "gain": [0, 0, 0, 0, 1],
                               "schedule": {"shape": "inverse_time", "base_lr": 0.2, "total_steps": 77}}},
    "service": {"checkpoint_interval": 3, "transport": "tcp:127.0.0.1:9000"}})"));
  CHECK(c.learner_given);
  CHECK(c.schedule_steps_given);
  const json once = config_to_json(c);
  const json twice = config_to_json(parse_config(once));
  CHECK(once == twice);
  CHECK(once["clustering"]["k"] == 5);
  CHECK(once["simulation"]["learner"]["schedule"]["total_steps"] == 77);
  CHECK(config_to_json(parse_config(json::object())) == config_to_json(parse_config(config_to_json(parse_config(json::object())))));
}

TEST_CASE("default learner") {
  const auto seven = default_learner(7, nullptr);
  CHECK(seven.arms() == 7);
  CHECK_NOTHROW(seven.validate());
  ReducedSet r = synthetic_reduced_set(3, 2);
  r.mean_difficulty = {0.0, 50.0, 100.0};
  const auto lc = default_learner(3, &r);
  CHECK(lc.initial_solve_rate == std::vector<double>{1.0, 0.5, 0.0});
  CHECK_THROWS_AS(default_learner(0, nullptr), Error);
}

TEST_CASE("episode resolution") {
  auto c = parse_config(json::object());
  const auto set = synthetic_reduced_set(7, 10);
  const auto ep = resolve_episode(c, set, 42);
  CHECK(ep.scheduler.seed == 42);
  CHECK(ep.learner.schedule.total_steps == 1200);
  CHECK(ep.learner.arms() == 7);
  c = parse_config(json::parse(R"({"simulation":{"learner":{"initial_solve_rate":[0.5,0.5],"gain":[0,0]}}})"));
  CHECK_THROWS_AS(resolve_episode(c, set, 1), Error);
}
