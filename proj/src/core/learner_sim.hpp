#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matrix.hpp"
#include "reduction.hpp"
#include "rng.hpp"
#include "scheduler.hpp"

namespace sparft {

enum class LrShape { Cosine, InverseTime, Constant };

std::string_view to_string(LrShape s);
LrShape parse_lr_shape(std::string_view name);

// Learning-rate schedule indexed by 0-based training step.
//  cosine:       linear warmup from 0 over ceil(warmup_ratio * T) steps, then
//                half-cosine decay to 0 at step T
//  inverse_time: base_lr / (t + 1)
//  constant:     base_lr
struct LrSchedule {
  LrShape shape = LrShape::Cosine;
  double base_lr = 0.05;
  double warmup_ratio = 0.1;
  std::uint64_t total_steps = 1000;

  std::uint64_t warmup_steps() const;
  double at(std::uint64_t t) const;
};

struct LearnerConfig {
  std::vector<double> initial_solve_rate;  // one per cluster, in [0, 1]
  std::vector<double> gain;                // one per cluster, >= 0
  double spillover = 0.2;                  // fraction of the trained cluster's change applied elsewhere
  double lipschitz = 1.0;                  // H
  double max_grad_norm = 0.1;              // G_max
  LrSchedule schedule;

  std::size_t arms() const noexcept { return initial_solve_rate.size(); }
  void validate() const;
};

// Stand-in for the policy being trained.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::vector<std::uint8_t> answer_batch(std::span<const std::string> ids, std::size_t cluster) = 0;
  virtual void observe_training(std::size_t cluster, std::uint64_t step) = 0;
  virtual std::span<const double> solve_rates() const = 0;
};

class StationaryLearner final : public Learner {
 public:
  StationaryLearner(std::vector<double> solve_rates, std::uint64_t seed);

  std::vector<std::uint8_t> answer_batch(std::span<const std::string> ids, std::size_t cluster) override;
  void observe_training(std::size_t, std::uint64_t) override {}
  std::span<const double> solve_rates() const override { return mu_; }

 private:
  std::vector<double> mu_;
  Rng rng_;
};

// Solve rates that move with training: the trained cluster gains
// min(gain * lr_t, cap_t), every other cluster moves by spillover times that
// change, each change is bounded by cap_t = H * G_max * lr_t, and rates stay
// in [0, 1].
class DriftingLearner final : public Learner {
 public:
  DriftingLearner(LearnerConfig config, std::uint64_t seed);

  std::vector<std::uint8_t> answer_batch(std::span<const std::string> ids, std::size_t cluster) override;
  void observe_training(std::size_t cluster, std::uint64_t step) override { drift_step(cluster, step); }
  std::span<const double> solve_rates() const override { return mu_; }

  double drift_cap(std::uint64_t step) const;
  // Applies one training step; returns the largest per-cluster change.
  double drift_step(std::size_t trained, std::uint64_t step);

  const LearnerConfig& config() const noexcept { return config_; }

 private:
  LearnerConfig config_;
  std::vector<double> mu_;
  Rng rng_;
};

// V trace of a trajectory: out[0] = 0, out[t] = out[t-1] + max_k |x[t][k] - x[t-1][k]|.
std::vector<double> measure_vt(const Matrix& trajectory);

enum class PolicyKind { Thompson, Uniform, RoundRobin, Oracle };

std::string_view to_string(PolicyKind p);
PolicyKind parse_policy(std::string_view name);

struct EpisodeConfig {
  PolicyKind policy = PolicyKind::Thompson;
  SchedulerConfig scheduler;  // batch size, epsilon, seed
  LearnerConfig learner;
  std::uint64_t steps = 1000;
  std::size_t window = 200;
};

struct RunMetrics {
  std::string policy;
  std::uint64_t seed = 0;
  std::size_t arms = 0;
  std::uint64_t steps = 0;
  std::size_t window = 0;

  std::vector<std::size_t> selections;  // cluster per step
  std::vector<double> r_avg;            // observed batch reward per step
  Matrix trajectory;                    // (steps + 1) x arms true solve rates, before each step and final
  std::vector<double> vt;               // streaming V after each step (length steps + 1, vt[0] = 0)
  std::vector<double> max_drift;        // per step
  std::vector<double> drift_cap;        // per step
  std::vector<double> regret;           // cumulative pseudo-regret after each step

  std::size_t window_count() const;
  // counts[w][k]: selections of arm k in window w.
  std::vector<std::vector<std::uint64_t>> window_counts() const;
  // Mean true solve rate of each arm over the steps of each window.
  std::vector<std::vector<double>> window_solve_rates() const;
  // Share of selections of arm k among steps [from, to).
  double share(std::size_t arm, std::uint64_t from, std::uint64_t to) const;
  double final_regret() const { return regret.empty() ? 0.0 : regret.back(); }
};

// select -> answer -> update loop for config.steps steps. Thompson runs
// through CurriculumScheduler, so a service session driven by the same
// learner produces the same decisions.
RunMetrics run_episode(const EpisodeConfig& config, const ReducedSet& reduced);
RunMetrics run_episode(const EpisodeConfig& config, const ReducedSet& reduced, Learner& learner);

std::vector<DecisionRecord> decision_log(const RunMetrics& metrics);

struct Heatmap {
  std::size_t window = 0;
  std::size_t arms = 0;
  std::uint64_t steps = 0;
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::vector<std::optional<double>>> solve_rate;     // true rates when known
  std::vector<std::vector<std::optional<double>>> observed_rate;  // mean r_avg of selections
};

Heatmap heatmap_from_metrics(const RunMetrics& metrics);
// Re-derives the heatmap from a decision log (true rates are not recorded there).
Heatmap heatmap_from_log(std::span<const DecisionRecord> log, std::size_t window);
std::string serialize_heatmap(const Heatmap& h);
Heatmap parse_heatmap(const std::string& text);

// Writes decisions.jsonl, trajectory.jsonl, heatmap.json and summary.csv.
void export_metrics(const RunMetrics& metrics, const std::filesystem::path& dir);

std::vector<DecisionRecord> read_decision_log(const std::filesystem::path& path);

struct ComparisonRow {
  std::string policy;
  std::uint64_t seed = 0;
  double cumulative_regret = 0.0;
  double final_vt = 0.0;
  std::vector<double> last_window_share;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::vector<RunMetrics> runs;  // aligned with rows
  std::string csv() const;
};

ComparisonReport compare_schedulers(std::span<const PolicyKind> policies, const EpisodeConfig& base,
                                    const ReducedSet& reduced, std::span<const std::uint64_t> seeds);

}  // namespace sparft
