#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipp/forest.hpp"
#include "ipp/planners.hpp"
#include "ipp/rng.hpp"
#include "ipp/world.hpp"

namespace ipp {

/// Everything a policy may look at when choosing the next node. `truth` is
/// the true-world coverage model; only the clairvoyant oracle reads it.
struct StepContext {
  const PathState& state;
  const Belief& belief;
  const BeliefSummary& summary;
  const NodeSet& nodes;
  const Budget& budget;
  const CoverageModel& truth;
};

class Policy {
 public:
  virtual ~Policy() = default;
  /// nullopt iff no action is feasible.
  virtual std::optional<NodeIndex> select(const StepContext& ctx, Rng& rng) const = 0;
  virtual std::string name() const = 0;
};

class OraclePolicy final : public Policy {
 public:
  std::optional<NodeIndex> select(const StepContext& ctx, Rng& rng) const override;
  std::string name() const override { return "oracle_gcb"; }
};

class HeuristicPolicy final : public Policy {
 public:
  explicit HeuristicPolicy(PolicyKind kind);
  std::optional<NodeIndex> select(const StepContext& ctx, Rng& rng) const override;
  std::string name() const override;

 private:
  PolicyKind kind_;
};

class RandomPolicy final : public Policy {
 public:
  std::optional<NodeIndex> select(const StepContext& ctx, Rng& rng) const override;
  std::string name() const override { return "random"; }
};

class ForestPolicy final : public Policy {
 public:
  explicit ForestPolicy(std::shared_ptr<const LearnedPolicy> learned) : learned_(std::move(learned)) {}
  std::optional<NodeIndex> select(const StepContext& ctx, Rng& rng) const override;
  std::string name() const override { return "learned"; }

 private:
  std::shared_ptr<const LearnedPolicy> learned_;
};

/// Per step: the oracle with probability beta, the learner otherwise. One
/// uniform draw is consumed every step.
class MixturePolicy final : public Policy {
 public:
  MixturePolicy(double beta, const Policy& oracle, const Policy& learner)
      : beta_(beta), oracle_(oracle), learner_(learner) {}
  std::optional<NodeIndex> select(const StepContext& ctx, Rng& rng) const override;
  std::string name() const override { return "mixture"; }

 private:
  double beta_;
  const Policy& oracle_;
  const Policy& learner_;
};

/// LEARNED requires `learned`; every other kind ignores it.
std::unique_ptr<Policy> make_policy(PolicyKind kind, std::shared_ptr<const LearnedPolicy> learned = nullptr);

enum class Termination { Horizon, NoFeasibleAction };
std::string_view termination_name(Termination t);

struct StepRecord {
  std::size_t t = 0;         // timestep of the decision (1-based)
  NodeIndex state_node = 0;  // node the robot was at
  NodeIndex action = 0;
  double reward = 0.0;
  double cumulative = 0.0;
  std::size_t belief_snapshot = 0;  // belief history length after the step
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  /// Cumulative reward after steps 1..T; held constant after early termination.
  std::vector<double> cumulative;
  Termination termination = Termination::Horizon;
  std::vector<NodeIndex> path;
  /// Evidence-grid dumps keyed by step (0 = after the start scan).
  std::map<int, std::string> snapshots;
};

/// Runs one episode from the start node. The start scan seeds the belief; each
/// step the policy picks a feasible node, the robot moves, scans and collects
/// reward(state, action).
EpisodeTrace run_episode(const Instance& instance, const CoverageModel& truth, const Policy& policy,
                         const Budget& budget, const SensorConfig& sensor, Rng& rng,
                         std::span<const int> snapshot_steps = {});

struct EvaluationSummary {
  /// Per step 1..T over episodes: mean and normal-approximation 95% CI.
  std::vector<double> mean, ci_lo, ci_hi;
  double final_mean() const { return mean.empty() ? 0.0 : mean.back(); }
  double final_lo() const { return ci_lo.empty() ? 0.0 : ci_lo.back(); }
  double final_hi() const { return ci_hi.empty() ? 0.0 : ci_hi.back(); }
};

struct MeanCi {
  double mean = 0.0, lo = 0.0, hi = 0.0;
};
/// mean +- 1.96 * s / sqrt(n) with the sample standard deviation.
MeanCi mean_ci95(std::span<const double> values);

struct Evaluation {
  std::vector<EpisodeTrace> episodes;
  EvaluationSummary summary;
};

struct EvaluateOptions {
  std::vector<int> snapshot_steps;
  std::size_t snapshot_episodes = 1;  // snapshots are kept for the first k episodes
};

/// Episode e runs on instances[e % |instances|] with the RNG stream
/// derive_seed(seed, e).
Evaluation evaluate(const Policy& policy, std::span<const Instance> instances, std::size_t episodes,
                    const Budget& budget, const SensorConfig& sensor, std::uint64_t seed,
                    const EvaluateOptions& options = {});

enum class BetaSchedule { Geometric, Indicator };

struct TrainConfig {
  int iterations = 100;  // N
  int datapoints = 100;  // m per iteration
  BetaSchedule schedule = BetaSchedule::Geometric;
  double beta_base = 0.9;  // geometric: beta_i = base^(i-1)
  Budget budget;
  SensorConfig sensor;
  ForestParams forest;
  std::uint64_t seed = 0;
  /// Label every feasible action at each sampled state instead of one.
  bool all_actions = false;
  /// Episodes per validation pass; 0 uses one per validation instance.
  std::size_t validation_episodes = 0;
  /// Roll-in attempts per datapoint before training is aborted.
  int max_resamples = 1000;
};

void validate(const TrainConfig& config);
double beta_for_iteration(const TrainConfig& config, int iteration);

struct IterationMetrics {
  int iteration = 0;
  double beta = 0.0;
  std::size_t new_points = 0;
  std::size_t dataset_size = 0;
  std::size_t resampled = 0;
  MeanCi validation;
};

struct TrainResult {
  std::shared_ptr<const LearnedPolicy> policy;  // best iterate on validation
  int best_iteration = 0;
  std::vector<IterationMetrics> metrics;
  std::vector<QDatapoint> dataset;
  /// dataset[offsets[i-1] .. offsets[i]) was collected in iteration i.
  std::vector<std::size_t> offsets;
};

/// Optional hooks: progress reporting, and a per-roll-in callback receiving
/// (iteration, datapoint, training instance, actions taken by the mixture).
/// on_rollin may be called from worker threads.
struct TrainHooks {
  std::function<void(const IterationMetrics&)> on_iteration;
  std::function<void(int, int, std::size_t, const std::vector<NodeIndex>&)> on_rollin;
};

/// Imitation learning of the clairvoyant oracle with dataset aggregation.
TrainResult train(const TrainConfig& config, std::span<const Instance> train_set,
                  std::span<const Instance> validation_set, const TrainHooks& hooks = {});

}  // namespace ipp
