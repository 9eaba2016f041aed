#include "learner_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "error.hpp"

namespace sparft {

using nlohmann::json;

namespace {

constexpr std::uint64_t kLearnerStream = 2;
constexpr std::uint64_t kPolicyStream = 3;
constexpr std::uint64_t kBatchStream = 1;
constexpr double kDriftSlack = 1e-12;

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class Policy {
 public:
  virtual ~Policy() = default;
  virtual BatchRequest next(std::span<const double> true_rates) = 0;
  virtual void report(std::uint64_t step, double r_avg) = 0;
};

class ThompsonPolicy final : public Policy {
 public:
  ThompsonPolicy(const ReducedSet& reduced, const SchedulerConfig& config) : scheduler_(reduced, config) {}
  BatchRequest next(std::span<const double>) override { return scheduler_.next_batch(); }
  void report(std::uint64_t step, double r_avg) override { scheduler_.report(step, r_avg); }

 private:
  CurriculumScheduler scheduler_;
};

class BaselinePolicy final : public Policy {
 public:
  BaselinePolicy(PolicyKind kind, const ReducedSet& reduced, const SchedulerConfig& config)
      : kind_(kind),
        reduced_(reduced),
        batch_size_(config.batch_size),
        rng_(derive_seed(config.seed, kPolicyStream)),
        batch_rng_(derive_seed(config.seed, kBatchStream)) {}

  BatchRequest next(std::span<const double> true_rates) override {
    const std::size_t k = reduced_.cluster_count();
    std::size_t c = 0;
    switch (kind_) {
      case PolicyKind::Uniform: c = static_cast<std::size_t>(rng_.index(k)); break;
      case PolicyKind::RoundRobin: c = static_cast<std::size_t>(step_ % k); break;
      case PolicyKind::Oracle:
        c = static_cast<std::size_t>(std::min_element(true_rates.begin(), true_rates.end()) - true_rates.begin());
        break;
      case PolicyKind::Thompson: fail(ErrorCode::Internal, "baseline policy cannot be thompson");
    }
    return draw_batch(reduced_, c, batch_size_, batch_rng_, step_);
  }

  void report(std::uint64_t, double) override { ++step_; }

 private:
  PolicyKind kind_;
  const ReducedSet& reduced_;
  std::size_t batch_size_;
  Rng rng_;
  Rng batch_rng_;
  std::uint64_t step_ = 0;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const ReducedSet& reduced, const SchedulerConfig& config) {
  if (kind == PolicyKind::Thompson) return std::make_unique<ThompsonPolicy>(reduced, config);
  return std::make_unique<BaselinePolicy>(kind, reduced, config);
}

json optional_grid(const std::vector<std::vector<std::optional<double>>>& grid) {
  json out = json::array();
  for (const auto& row : grid) {
    json r = json::array();
    for (const auto& v : row) r.push_back(v ? json(*v) : json(nullptr));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<std::optional<double>>> parse_optional_grid(const json& j) {
  std::vector<std::vector<std::optional<double>>> out;
  for (const auto& row : j) {
    std::vector<std::optional<double>> r;
    for (const auto& v : row) r.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::string_view to_string(LrShape s) {
  switch (s) {
    case LrShape::Cosine: return "cosine";
    case LrShape::InverseTime: return "inverse_time";
    case LrShape::Constant: return "constant";
  }
  return "cosine";
}

LrShape parse_lr_shape(std::string_view name) {
  if (name == "cosine") return LrShape::Cosine;
  if (name == "inverse_time") return LrShape::InverseTime;
  if (name == "constant") return LrShape::Constant;
  fail(ErrorCode::InvalidArgument,
       "unknown lr schedule '" + std::string(name) + "' (expected cosine, inverse_time or constant)");
}

std::uint64_t LrSchedule::warmup_steps() const {
  if (shape != LrShape::Cosine) return 0;
  return static_cast<std::uint64_t>(std::ceil(warmup_ratio * static_cast<double>(total_steps)));
}

double LrSchedule::at(std::uint64_t t) const {
  switch (shape) {
    case LrShape::Constant: return base_lr;
    case LrShape::InverseTime: return base_lr / static_cast<double>(t + 1);
    case LrShape::Cosine: {
      const std::uint64_t w = warmup_steps();
      if (t < w) return base_lr * static_cast<double>(t) / static_cast<double>(std::max<std::uint64_t>(1, w));
      if (t >= total_steps) return 0.0;
      const double progress =
          static_cast<double>(t - w) / static_cast<double>(std::max<std::uint64_t>(1, total_steps - w));
      return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    }
  }
  return 0.0;
}

void LearnerConfig::validate() const {
  require(!initial_solve_rate.empty(), "learner needs at least one cluster");
  require(gain.size() == initial_solve_rate.size(), "learner gain and solve-rate lists differ in length");
  for (double mu : initial_solve_rate) require(mu >= 0.0 && mu <= 1.0, "initial solve rates must lie in [0, 1]");
  for (double g : gain) require(g >= 0.0 && std::isfinite(g), "learner gains must be nonnegative");
  require(spillover >= 0.0 && spillover < 1.0, "spillover must lie in [0, 1)");
  require(lipschitz >= 0.0 && max_grad_norm >= 0.0, "H and G_max must be nonnegative");
  require(schedule.base_lr >= 0.0, "base learning rate must be nonnegative");
  require(schedule.warmup_ratio >= 0.0 && schedule.warmup_ratio <= 1.0, "warmup ratio must lie in [0, 1]");
  require(schedule.shape != LrShape::Cosine || schedule.total_steps >= 1, "cosine schedule needs total_steps >= 1");
}

StationaryLearner::StationaryLearner(std::vector<double> solve_rates, std::uint64_t seed)
    : mu_(std::move(solve_rates)), rng_(seed) {
  for (double mu : mu_) require(mu >= 0.0 && mu <= 1.0, "solve rates must lie in [0, 1]");
}

std::vector<std::uint8_t> StationaryLearner::answer_batch(std::span<const std::string> ids, std::size_t cluster) {
  std::vector<std::uint8_t> out(ids.size());
  for (auto& b : out) b = rng_.bernoulli(mu_.at(cluster)) ? 1 : 0;
  return out;
}

DriftingLearner::DriftingLearner(LearnerConfig config, std::uint64_t seed)
    : config_(std::move(config)), mu_(config_.initial_solve_rate), rng_(seed) {
  config_.validate();
}

std::vector<std::uint8_t> DriftingLearner::answer_batch(std::span<const std::string> ids, std::size_t cluster) {
  std::vector<std::uint8_t> out(ids.size());
  for (auto& b : out) b = rng_.bernoulli(mu_.at(cluster)) ? 1 : 0;
  return out;
}

double DriftingLearner::drift_cap(std::uint64_t step) const {
  return config_.lipschitz * config_.max_grad_norm * config_.schedule.at(step);
}

double DriftingLearner::drift_step(std::size_t trained, std::uint64_t step) {
  require(trained < mu_.size(), "trained cluster out of range");
  const double lr = config_.schedule.at(step);
  const double cap = drift_cap(step);
  const double delta = std::min(config_.gain[trained] * lr, cap);
  double largest = 0.0;
  for (std::size_t k = 0; k < mu_.size(); ++k) {
    const double step_k = k == trained ? delta : config_.spillover * delta;
    const double next = std::clamp(mu_[k] + step_k, 0.0, 1.0);
    largest = std::max(largest, std::abs(next - mu_[k]));
    mu_[k] = next;
  }
  return largest;
}

std::vector<double> measure_vt(const Matrix& trajectory) {
  std::vector<double> out(trajectory.rows(), 0.0);
  for (std::size_t t = 1; t < trajectory.rows(); ++t) {
    double m = 0.0;
    for (std::size_t k = 0; k < trajectory.cols(); ++k)
      m = std::max(m, std::abs(trajectory(t, k) - trajectory(t - 1, k)));
    out[t] = out[t - 1] + m;
  }
  return out;
}

std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::Thompson: return "thompson";
    case PolicyKind::Uniform: return "uniform";
    case PolicyKind::RoundRobin: return "round_robin";
    case PolicyKind::Oracle: return "oracle";
  }
  return "thompson";
}

PolicyKind parse_policy(std::string_view name) {
  if (name == "thompson") return PolicyKind::Thompson;
  if (name == "uniform") return PolicyKind::Uniform;
  if (name == "round_robin") return PolicyKind::RoundRobin;
  if (name == "oracle") return PolicyKind::Oracle;
  fail(ErrorCode::InvalidArgument,
       "unknown policy '" + std::string(name) + "' (expected thompson, uniform, round_robin or oracle)");
}

std::size_t RunMetrics::window_count() const {
  if (window == 0) return 0;
  return static_cast<std::size_t>((steps + window - 1) / window);
}

std::vector<std::vector<std::uint64_t>> RunMetrics::window_counts() const {
  std::vector<std::vector<std::uint64_t>> out(window_count(), std::vector<std::uint64_t>(arms, 0));
  for (std::size_t t = 0; t < selections.size(); ++t) ++out[t / window][selections[t]];
  return out;
}

std::vector<std::vector<double>> RunMetrics::window_solve_rates() const {
  std::vector<std::vector<double>> out(window_count(), std::vector<double>(arms, 0.0));
  for (std::size_t w = 0; w < out.size(); ++w) {
    const std::size_t from = w * window;
    const std::size_t to = std::min<std::size_t>(steps, from + window);
    for (std::size_t k = 0; k < arms; ++k) {
      double s = 0.0;
      for (std::size_t t = from; t < to; ++t) s += trajectory(t, k);
      out[w][k] = s / static_cast<double>(to - from);
    }
  }
  return out;
}

double RunMetrics::share(std::size_t arm, std::uint64_t from, std::uint64_t to) const {
  to = std::min<std::uint64_t>(to, selections.size());
  if (to <= from) return 0.0;
  std::uint64_t hits = 0;
  for (std::uint64_t t = from; t < to; ++t) hits += selections[t] == arm;
  return static_cast<double>(hits) / static_cast<double>(to - from);
}

RunMetrics run_episode(const EpisodeConfig& config, const ReducedSet& reduced) {
  DriftingLearner learner(config.learner, derive_seed(config.scheduler.seed, kLearnerStream));
  return run_episode(config, reduced, learner);
}

RunMetrics run_episode(const EpisodeConfig& config, const ReducedSet& reduced, Learner& learner) {
  require(config.steps >= 1, "episode needs at least one step");
  require(config.window >= 1, "window must be at least 1");
  const std::size_t k = reduced.cluster_count();
  require(k >= 1, "episode needs at least one cluster");
  require(learner.solve_rates().size() == k, "learner cluster count (" + std::to_string(learner.solve_rates().size()) +
                                                 ") does not match manifest (" + std::to_string(k) + ")");

  auto policy = make_policy(config.policy, reduced, config.scheduler);
  const auto* drifting = dynamic_cast<const DriftingLearner*>(&learner);

  RunMetrics m;
  m.policy = std::string(to_string(config.policy));
  m.seed = config.scheduler.seed;
  m.arms = k;
  m.steps = config.steps;
  m.window = config.window;
  m.trajectory = Matrix(config.steps + 1, k);
  m.selections.reserve(config.steps);
  m.r_avg.reserve(config.steps);
  m.vt.assign(1, 0.0);
  m.max_drift.reserve(config.steps);
  m.drift_cap.reserve(config.steps);
  m.regret.reserve(config.steps);

  std::vector<double> before(learner.solve_rates().begin(), learner.solve_rates().end());
  std::copy(before.begin(), before.end(), m.trajectory.row(0).begin());
  double regret = 0.0;

  for (std::uint64_t t = 0; t < config.steps; ++t) {
    const BatchRequest req = policy->next(before);
    const std::size_t c = req.cluster;
    regret += before[c] - *std::min_element(before.begin(), before.end());

    const auto bits = learner.answer_batch(req.ids, c);
    const double r = average_reward(bits);
    policy->report(t, r);
    learner.observe_training(c, t);

    auto after = learner.solve_rates();
    double drift = 0.0;
    for (std::size_t a = 0; a < k; ++a) drift = std::max(drift, std::abs(after[a] - before[a]));
    const double cap = drifting ? drifting->drift_cap(t) : 0.0;
    if (drift > cap + kDriftSlack)
      fail(ErrorCode::Internal, "drift " + fmt_double(drift) + " exceeds cap " + fmt_double(cap) + " at step " +
                                    std::to_string(t));

    m.selections.push_back(c);
    m.r_avg.push_back(r);
    m.max_drift.push_back(drift);
    m.drift_cap.push_back(cap);
    m.regret.push_back(regret);
    m.vt.push_back(m.vt.back() + drift);
    before.assign(after.begin(), after.end());
    std::copy(before.begin(), before.end(), m.trajectory.row(t + 1).begin());
  }
  return m;
}

std::vector<DecisionRecord> decision_log(const RunMetrics& metrics) {
  std::vector<DecisionRecord> out;
  out.reserve(metrics.selections.size());
  std::vector<double> reward(metrics.arms, 0.0);
  std::vector<std::uint64_t> pulls(metrics.arms, 0);
  for (std::size_t t = 0; t < metrics.selections.size(); ++t) {
    const std::size_t c = metrics.selections[t];
    reward[c] += metrics.r_avg[t];
    pulls[c] += 1;
    out.push_back({t, c, metrics.r_avg[t], reward, pulls});
  }
  return out;
}

Heatmap heatmap_from_metrics(const RunMetrics& metrics) {
  Heatmap h = heatmap_from_log(decision_log(metrics), metrics.window);
  h.arms = metrics.arms;
  h.steps = metrics.steps;
  const auto rates = metrics.window_solve_rates();
  h.solve_rate.assign(rates.size(), {});
  for (std::size_t w = 0; w < rates.size(); ++w)
    for (double v : rates[w]) h.solve_rate[w].push_back(v);
  return h;
}

Heatmap heatmap_from_log(std::span<const DecisionRecord> log, std::size_t window) {
  require(window >= 1, "heatmap window must be at least 1");
  Heatmap h;
  h.window = window;
  for (const auto& rec : log) {
    h.arms = std::max({h.arms, rec.cluster + 1, rec.pulls.size()});
    h.steps = std::max<std::uint64_t>(h.steps, rec.t + 1);
  }
  const std::size_t windows = static_cast<std::size_t>((h.steps + window - 1) / window);
  h.counts.assign(windows, std::vector<std::uint64_t>(h.arms, 0));
  std::vector<std::vector<double>> sums(windows, std::vector<double>(h.arms, 0.0));
  for (const auto& rec : log) {
    const std::size_t w = static_cast<std::size_t>(rec.t / window);
    ++h.counts[w][rec.cluster];
    sums[w][rec.cluster] += rec.r_avg;
  }
  h.observed_rate.assign(windows, std::vector<std::optional<double>>(h.arms));
  h.solve_rate.assign(windows, std::vector<std::optional<double>>(h.arms));
  for (std::size_t w = 0; w < windows; ++w)
    for (std::size_t k = 0; k < h.arms; ++k)
      if (h.counts[w][k] > 0) h.observed_rate[w][k] = sums[w][k] / static_cast<double>(h.counts[w][k]);
  return h;
}

std::string serialize_heatmap(const Heatmap& h) {
  json j;
  j["format"] = "sparft.heatmap";
  j["version"] = 1;
  j["window"] = h.window;
  j["arms"] = h.arms;
  j["steps"] = h.steps;
  j["counts"] = h.counts;
  j["solve_rate"] = optional_grid(h.solve_rate);
  j["observed_rate"] = optional_grid(h.observed_rate);
  return j.dump() + "\n";
}

Heatmap parse_heatmap(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "sparft.heatmap") fail(ErrorCode::CorruptArtifact, "not a heatmap artifact");
    Heatmap h;
    h.window = j.at("window").get<std::size_t>();
    h.arms = j.at("arms").get<std::size_t>();
    h.steps = j.at("steps").get<std::uint64_t>();
    h.counts = j.at("counts").get<std::vector<std::vector<std::uint64_t>>>();
    h.solve_rate = parse_optional_grid(j.at("solve_rate"));
    h.observed_rate = parse_optional_grid(j.at("observed_rate"));
    return h;
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptArtifact, std::string("heatmap: ") + e.what());
  }
}

void export_metrics(const RunMetrics& metrics, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::string decisions;
  for (const auto& rec : decision_log(metrics)) decisions += to_json_line(rec) + "\n";
  write_file(dir / "decisions.jsonl", decisions);

  std::string traj;
  for (std::size_t t = 0; t <= metrics.selections.size(); ++t) {
    json j;
    j["t"] = t;
    auto row = metrics.trajectory.row(t);
    j["mu"] = std::vector<double>(row.begin(), row.end());
    j["vt"] = metrics.vt[t];
    if (t < metrics.selections.size()) {
      j["cluster"] = metrics.selections[t];
      j["r_avg"] = metrics.r_avg[t];
      j["drift"] = metrics.max_drift[t];
      j["cap"] = metrics.drift_cap[t];
      j["regret"] = metrics.regret[t];
    }
    traj += j.dump() + "\n";
  }
  write_file(dir / "trajectory.jsonl", traj);

  write_file(dir / "heatmap.json", serialize_heatmap(heatmap_from_metrics(metrics)));

  ComparisonReport report;
  ComparisonRow row;
  row.policy = metrics.policy;
  row.seed = metrics.seed;
  row.cumulative_regret = metrics.final_regret();
  row.final_vt = metrics.vt.back();
  const std::uint64_t from = metrics.window_count() == 0 ? 0 : (metrics.window_count() - 1) * metrics.window;
  for (std::size_t k = 0; k < metrics.arms; ++k) row.last_window_share.push_back(metrics.share(k, from, metrics.steps));
  report.rows.push_back(std::move(row));
  write_file(dir / "summary.csv", report.csv());
}

std::vector<DecisionRecord> read_decision_log(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<DecisionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_decision_line(line));
  }
  return out;
}

std::string ComparisonReport::csv() const {
  std::size_t arms = 0;
  for (const auto& r : rows) arms = std::max(arms, r.last_window_share.size());
  std::string out = "policy,seed,cumulative_regret,final_vt";
  for (std::size_t k = 0; k < arms; ++k) out += ",last_window_share_" + std::to_string(k);
  out += "\n";
  for (const auto& r : rows) {
    out += r.policy + "," + std::to_string(r.seed) + "," + fmt_double(r.cumulative_regret) + "," + fmt_double(r.final_vt);
    for (std::size_t k = 0; k < arms; ++k)
      out += "," + (k < r.last_window_share.size() ? fmt_double(r.last_window_share[k]) : std::string());
    out += "\n";
  }
  return out;
}

ComparisonReport compare_schedulers(std::span<const PolicyKind> policies, const EpisodeConfig& base,
                                    const ReducedSet& reduced, std::span<const std::uint64_t> seeds) {
  ComparisonReport report;
  for (PolicyKind p : policies) {
    for (std::uint64_t seed : seeds) {
      EpisodeConfig cfg = base;
      cfg.policy = p;
      cfg.scheduler.seed = seed;
      RunMetrics m = run_episode(cfg, reduced);
      ComparisonRow row;
      row.policy = m.policy;
      row.seed = seed;
      row.cumulative_regret = m.final_regret();
      row.final_vt = m.vt.back();
      const std::uint64_t from = (m.window_count() - 1) * m.window;
      for (std::size_t k = 0; k < m.arms; ++k) row.last_window_share.push_back(m.share(k, from, m.steps));
      report.rows.push_back(std::move(row));
      report.runs.push_back(std::move(m));
    }
  }
  return report;
}

}  // namespace sparft
