#include "scheduler.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace sparft {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;
constexpr std::uint64_t kBanditStream = 0;
constexpr std::uint64_t kBatchStream = 1;

json rng_to_json(const Rng& rng) { return {{"state", rng.serialize()}, {"draws", rng.draws()}}; }

Rng rng_from_json(const json& j) {
  return Rng::deserialize(j.at("state").get<std::string>(), j.at("draws").get<std::uint64_t>());
}

}  // namespace

BanditState::BanditState(std::size_t arms, double epsilon, std::uint64_t seed)
    : reward_(arms, 0.0), pulls_(arms, 0), epsilon_(epsilon), rng_(derive_seed(seed, kBanditStream)) {
  require(arms >= 1, "bandit needs at least one arm");
  require(epsilon > 0.0 && std::isfinite(epsilon), "bandit epsilon must be a positive finite number");
}

BanditState::BanditState(std::vector<double> reward, std::vector<std::uint64_t> pulls, double epsilon, Rng rng)
    : reward_(std::move(reward)), pulls_(std::move(pulls)), epsilon_(epsilon), rng_(std::move(rng)) {
  require(!reward_.empty(), "bandit needs at least one arm");
  require(reward_.size() == pulls_.size(), "bandit reward and pull vectors differ in length");
  require(epsilon_ > 0.0 && std::isfinite(epsilon_), "bandit epsilon must be a positive finite number");
  for (std::size_t k = 0; k < reward_.size(); ++k) {
    require(reward_[k] >= 0.0 && reward_[k] <= static_cast<double>(pulls_[k]),
            "bandit arm " + std::to_string(k) + " has cumulative reward outside [0, pulls]");
    step_ += pulls_[k];
  }
}

double BanditState::posterior_mean(std::size_t arm) const {
  return -reward_.at(arm) / (static_cast<double>(pulls_.at(arm)) + epsilon_);
}

double BanditState::posterior_variance(std::size_t arm) const {
  return 1.0 / (static_cast<double>(pulls_.at(arm)) + epsilon_);
}

void BanditState::record(std::size_t arm, double r_avg) {
  require(arm < arms(), "arm index " + std::to_string(arm) + " out of range");
  require(r_avg >= 0.0 && r_avg <= 1.0, "reward must lie in [0, 1]");
  reward_[arm] += r_avg;
  pulls_[arm] += 1;
  step_ += 1;
}

std::vector<double> sample_posteriors(BanditState& state) {
  std::vector<double> out(state.arms());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = state.posterior_mean(k) + std::sqrt(state.posterior_variance(k)) * state.rng().normal();
  return out;
}

std::size_t select_cluster(BanditState& state) {
  const auto samples = sample_posteriors(state);
  std::size_t best = 0;
  for (std::size_t k = 1; k < samples.size(); ++k)
    if (samples[k] > samples[best]) best = k;
  return best;
}

void update(BanditState& state, std::size_t arm, double r_avg) { state.record(arm, r_avg); }

double average_reward(std::span<const std::uint8_t> correct) {
  require(!correct.empty(), "average_reward: empty batch");
  std::size_t hits = 0;
  for (auto b : correct) {
    require(b <= 1, "average_reward: correctness must be 0 or 1");
    hits += b;
  }
  return static_cast<double>(hits) / static_cast<double>(correct.size());
}

BatchRequest draw_batch(const ReducedSet& reduced, std::size_t c, std::size_t batch_size, Rng& rng,
                        std::uint64_t step) {
  require(c < reduced.cluster_count(), "draw_batch: cluster index out of range");
  require(batch_size >= 1, "draw_batch: batch size must be at least 1");
  const auto& pool = reduced.clusters[c];
  require(!pool.empty(), "draw_batch: cluster " + std::to_string(c) + " has no examples");

  BatchRequest req{step, c, {}};
  req.ids.reserve(batch_size);
  if (pool.size() >= batch_size) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < batch_size; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.index(order.size() - i));
      std::swap(order[i], order[j]);
      req.ids.push_back(pool[order[i]]);
    }
  } else {
    for (std::size_t i = 0; i < batch_size; ++i)
      req.ids.push_back(pool[static_cast<std::size_t>(rng.index(pool.size()))]);
  }
  return req;
}

std::string to_json_line(const DecisionRecord& rec) {
  json j;
  j["t"] = rec.t;
  j["cluster"] = rec.cluster;
  j["r_avg"] = rec.r_avg;
  j["R"] = rec.reward;
  j["n"] = rec.pulls;
  return j.dump();
}

DecisionRecord parse_decision_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    DecisionRecord rec;
    rec.t = j.at("t").get<std::uint64_t>();
    rec.cluster = j.at("cluster").get<std::size_t>();
    rec.r_avg = j.at("r_avg").get<double>();
    rec.reward = j.at("R").get<std::vector<double>>();
    rec.pulls = j.at("n").get<std::vector<std::uint64_t>>();
    return rec;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("decision log: ") + e.what());
  }
}

CurriculumScheduler::CurriculumScheduler(ReducedSet reduced, SchedulerConfig config)
    : reduced_(std::move(reduced)),
      config_(config),
      state_(std::max<std::size_t>(1, reduced_.cluster_count()), config.epsilon, config.seed),
      batch_rng_(derive_seed(config.seed, kBatchStream)) {
  validate();
}

CurriculumScheduler::CurriculumScheduler(ReducedSet reduced, SchedulerConfig config, BanditState state,
                                         Rng batch_rng)
    : reduced_(std::move(reduced)), config_(config), state_(std::move(state)), batch_rng_(std::move(batch_rng)) {
  validate();
}

void CurriculumScheduler::validate() const {
  require(reduced_.cluster_count() >= 1, "scheduler needs a manifest with at least one cluster");
  require(reduced_.cluster_count() == state_.arms(), "manifest cluster count does not match bandit arms");
  require(config_.batch_size >= 1, "batch size must be at least 1");
  for (std::size_t c = 0; c < reduced_.cluster_count(); ++c)
    require(!reduced_.clusters[c].empty(), "manifest cluster " + std::to_string(c) + " is empty");
}

BatchRequest CurriculumScheduler::next_batch() {
  if (pending_)
    throw ProtocolError("pending_report",
                        "step " + std::to_string(pending_->step) + " must be reported before the next batch");
  const std::size_t c = select_cluster(state_);
  pending_ = draw_batch(reduced_, c, config_.batch_size, batch_rng_, state_.step());
  return *pending_;
}

DecisionRecord CurriculumScheduler::report(std::uint64_t step, double r_avg) {
  if (!pending_ || step != pending_->step) {
    // The pending step, when present, always equals state_.step().
    if (step < state_.step())
      throw ProtocolError("already_reported", "step " + std::to_string(step) + " was already reported");
    throw ProtocolError("unknown_step", "step " + std::to_string(step) + " was never issued");
  }
  if (!(r_avg >= 0.0 && r_avg <= 1.0))
    throw ProtocolError("invalid_reward", "r_avg must lie in [0, 1]");

  const std::size_t c = pending_->cluster;
  update(state_, c, r_avg);
  pending_.reset();
  DecisionRecord rec;
  rec.t = step;
  rec.cluster = c;
  rec.r_avg = r_avg;
  rec.reward.assign(state_.reward().begin(), state_.reward().end());
  rec.pulls.assign(state_.pulls().begin(), state_.pulls().end());
  return rec;
}

std::string CurriculumScheduler::checkpoint() const {
  json j;
  j["format"] = "sparft.checkpoint";
  j["version"] = kCheckpointVersion;
  j["k"] = state_.arms();
  j["epsilon"] = state_.epsilon();
  j["batch_size"] = config_.batch_size;
  j["seed"] = config_.seed;
  j["step"] = state_.step();
  j["R"] = std::vector<double>(state_.reward().begin(), state_.reward().end());
  j["n"] = std::vector<std::uint64_t>(state_.pulls().begin(), state_.pulls().end());
  j["bandit_rng"] = rng_to_json(state_.rng());
  j["batch_rng"] = rng_to_json(batch_rng_);
  if (pending_)
    j["pending"] = {{"step", pending_->step}, {"cluster", pending_->cluster}, {"ids", pending_->ids}};
  else
    j["pending"] = nullptr;
  return j.dump() + "\n";
}

CurriculumScheduler CurriculumScheduler::restore(ReducedSet reduced, const std::string& artifact) {
  json j;
  try {
    j = json::parse(artifact);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::CorruptArtifact, std::string("checkpoint: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "sparft.checkpoint")
      fail(ErrorCode::CorruptArtifact, "not a scheduler checkpoint");
    if (j.at("version") != kCheckpointVersion)
      fail(ErrorCode::VersionMismatch, "checkpoint version " + j.at("version").dump() + " is not supported");
    SchedulerConfig config;
    config.batch_size = j.at("batch_size").get<std::size_t>();
    config.epsilon = j.at("epsilon").get<double>();
    config.seed = j.at("seed").get<std::uint64_t>();
    BanditState state(j.at("R").get<std::vector<double>>(), j.at("n").get<std::vector<std::uint64_t>>(),
                      config.epsilon, rng_from_json(j.at("bandit_rng")));
    if (state.step() != j.at("step").get<std::uint64_t>() || state.arms() != j.at("k").get<std::size_t>())
      fail(ErrorCode::CorruptArtifact, "checkpoint ledger is inconsistent");
    CurriculumScheduler s(std::move(reduced), config, std::move(state), rng_from_json(j.at("batch_rng")));
    if (const auto& p = j.at("pending"); !p.is_null()) {
      BatchRequest req{p.at("step").get<std::uint64_t>(), p.at("cluster").get<std::size_t>(),
                       p.at("ids").get<std::vector<std::string>>()};
      if (req.step != s.state_.step() || req.cluster >= s.state_.arms())
        fail(ErrorCode::CorruptArtifact, "checkpoint pending batch is inconsistent");
      s.pending_ = std::move(req);
    }
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptArtifact, std::string("checkpoint: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::CorruptArtifact, std::string("checkpoint: ") + e.what());
    throw;
  }
}

}  // namespace sparft
