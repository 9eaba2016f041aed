#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reduction.hpp"
#include "rng.hpp"

namespace sparft {

inline constexpr double kDefaultEpsilon = 1e-6;
inline constexpr std::size_t kDefaultBatchSize = 8;

// Per-arm cumulative solve rate and pull count with the posterior sampler's
// generator. Invariants: sum(pulls) == step, 0 <= reward[k] <= pulls[k].
class BanditState {
 public:
  BanditState(std::size_t arms, double epsilon, std::uint64_t seed);
  BanditState(std::vector<double> reward, std::vector<std::uint64_t> pulls, double epsilon, Rng rng);

  std::size_t arms() const noexcept { return reward_.size(); }
  std::span<const double> reward() const noexcept { return reward_; }
  std::span<const std::uint64_t> pulls() const noexcept { return pulls_; }
  double epsilon() const noexcept { return epsilon_; }
  std::uint64_t step() const noexcept { return step_; }

  // Posterior mean -R_k / (n_k + eps) and variance 1 / (n_k + eps).
  double posterior_mean(std::size_t arm) const;
  double posterior_variance(std::size_t arm) const;

  Rng& rng() noexcept { return rng_; }
  const Rng& rng() const noexcept { return rng_; }

  void record(std::size_t arm, double r_avg);

  friend bool operator==(const BanditState&, const BanditState&) = default;

 private:
  std::vector<double> reward_;
  std::vector<std::uint64_t> pulls_;
  double epsilon_;
  std::uint64_t step_ = 0;
  Rng rng_;
};

// One Gaussian draw per arm, in arm order.
std::vector<double> sample_posteriors(BanditState& state);

// argmax of one round of posterior samples; ties go to the lowest arm.
std::size_t select_cluster(BanditState& state);

void update(BanditState& state, std::size_t arm, double r_avg);

double average_reward(std::span<const std::uint8_t> correct);

struct BatchRequest {
  std::uint64_t step = 0;
  std::size_t cluster = 0;
  std::vector<std::string> ids;
};

// B ids from cluster c: without replacement when the cluster holds at least B,
// otherwise with replacement.
BatchRequest draw_batch(const ReducedSet& reduced, std::size_t c, std::size_t batch_size, Rng& rng,
                        std::uint64_t step);

// One accepted report, as written to the decision log.
struct DecisionRecord {
  std::uint64_t t = 0;
  std::size_t cluster = 0;
  double r_avg = 0.0;
  std::vector<double> reward;
  std::vector<std::uint64_t> pulls;
};

std::string to_json_line(const DecisionRecord& rec);
DecisionRecord parse_decision_line(const std::string& line);

struct SchedulerConfig {
  std::size_t batch_size = kDefaultBatchSize;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
};

// Thompson-sampling curriculum over a reduced set with strict alternation:
// every issued batch must be reported before the next one is issued.
class CurriculumScheduler {
 public:
  CurriculumScheduler(ReducedSet reduced, SchedulerConfig config);

  BatchRequest next_batch();
  DecisionRecord report(std::uint64_t step, double r_avg);

  const std::optional<BatchRequest>& pending() const noexcept { return pending_; }
  const BanditState& state() const noexcept { return state_; }
  const ReducedSet& reduced() const noexcept { return reduced_; }
  const SchedulerConfig& config() const noexcept { return config_; }

  std::string checkpoint() const;
  static CurriculumScheduler restore(ReducedSet reduced, const std::string& artifact);

 private:
  CurriculumScheduler(ReducedSet reduced, SchedulerConfig config, BanditState state, Rng batch_rng);
  void validate() const;

  ReducedSet reduced_;
  SchedulerConfig config_;
  BanditState state_;
  Rng batch_rng_;
  std::optional<BatchRequest> pending_;
};

}  // namespace sparft
