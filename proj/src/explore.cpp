#include "ipp/explore.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ipp/errors.hpp"
#include "ipp/parallel.hpp"

namespace ipp {

std::optional<NodeIndex> OraclePolicy::select(const StepContext& ctx, Rng&) const {
  return oracle_action(ctx.truth, ctx.state, ctx.budget);
}

HeuristicPolicy::HeuristicPolicy(PolicyKind kind) : kind_(kind) {
  if (!is_heuristic(kind))
    throw ConfigError(fmt::format("'{}' is not a heuristic policy kind", policy_kind_name(kind)));
}

std::optional<NodeIndex> HeuristicPolicy::select(const StepContext& ctx, Rng&) const {
  return heuristic_select(kind_, ctx.summary, ctx.state, ctx.nodes, ctx.budget);
}

std::string HeuristicPolicy::name() const { return std::string(policy_kind_name(kind_)); }

std::optional<NodeIndex> RandomPolicy::select(const StepContext& ctx, Rng& rng) const {
  const std::vector<NodeIndex> feasible = feasible_actions(ctx.state, ctx.nodes, ctx.budget);
  if (feasible.empty()) return std::nullopt;
  return feasible[rng.below(feasible.size())];
}

std::optional<NodeIndex> ForestPolicy::select(const StepContext& ctx, Rng&) const {
  return learned_->select_action(ctx.state, ctx.summary, ctx.nodes, ctx.budget);
}

std::optional<NodeIndex> MixturePolicy::select(const StepContext& ctx, Rng& rng) const {
  const bool use_oracle = rng.bernoulli(beta_);
  return use_oracle ? oracle_.select(ctx, rng) : learner_.select(ctx, rng);
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, std::shared_ptr<const LearnedPolicy> learned) {
  switch (kind) {
    case PolicyKind::OracleGcb: return std::make_unique<OraclePolicy>();
    case PolicyKind::Random: return std::make_unique<RandomPolicy>();
    case PolicyKind::Learned:
      if (!learned) throw ConfigError("the learned policy needs a model");
      return std::make_unique<ForestPolicy>(std::move(learned));
    default: return std::make_unique<HeuristicPolicy>(kind);
  }
}

std::string_view termination_name(Termination t) {
  return t == Termination::Horizon ? "horizon" : "no_feasible_action";
}

namespace {

// Robot state while a policy is executed: path, belief and covered set on the
// true world.
class Walker {
 public:
  Walker(const Instance& instance, const CoverageModel& truth, const SensorConfig& sensor)
      : instance_(instance), truth_(truth), sensor_(sensor), state_(instance.nodes),
        belief_(instance.world.width(), instance.world.height()), tracker_(truth, state_.visited()) {
    const NodeIndex s = instance.nodes.start_index;
    belief_.update(s, s, raycast(instance.world, instance.nodes[s], sensor));
  }

  std::optional<NodeIndex> choose(const Policy& policy, const Budget& budget, Rng& rng) const {
    const BeliefSummary summary(belief_, sensor_);
    const StepContext ctx{state_, belief_, summary, instance_.nodes, budget, truth_};
    auto a = policy.select(ctx, rng);
    if (a && !is_feasible(state_, *a, instance_.nodes, budget))
      throw ContractViolation(fmt::format("policy '{}' chose infeasible node {}", policy.name(), *a));
    return a;
  }

  /// Moves to `action`, scans, and returns the reward.
  double step(NodeIndex action) {
    const double norm = truth_.full_coverage();
    const double r = norm > 0.0 ? tracker_.gain(action) / norm : 0.0;
    tracker_.add(action);
    const NodeIndex from = state_.last();
    state_.extend(action, instance_.nodes);
    belief_.update(from, action, raycast(instance_.world, instance_.nodes[action], sensor_));
    return r;
  }

  const PathState& state() const { return state_; }
  const Belief& belief() const { return belief_; }

 private:
  const Instance& instance_;
  const CoverageModel& truth_;
  const SensorConfig& sensor_;
  PathState state_;
  Belief belief_;
  CoverageTracker tracker_;
};

}  // namespace

EpisodeTrace run_episode(const Instance& instance, const CoverageModel& truth, const Policy& policy,
                         const Budget& budget, const SensorConfig& sensor, Rng& rng,
                         std::span<const int> snapshot_steps) {
  auto wants_snapshot = [&](int step) {
    return std::find(snapshot_steps.begin(), snapshot_steps.end(), step) != snapshot_steps.end();
  };
  Walker walker(instance, truth, sensor);
  EpisodeTrace trace;
  if (wants_snapshot(0)) trace.snapshots[0] = walker.belief().evidence().dump();
  double cumulative = 0.0;
  for (int t = 1; t <= budget.horizon; ++t) {
    const auto action = walker.choose(policy, budget, rng);
    if (!action) {
      trace.termination = Termination::NoFeasibleAction;
      break;
    }
    const NodeIndex from = walker.state().last();
    const double r = walker.step(*action);
    cumulative += r;
    trace.steps.push_back({static_cast<std::size_t>(t), from, *action, r, cumulative, walker.belief().history().size()});
    if (wants_snapshot(t)) trace.snapshots[t] = walker.belief().evidence().dump();
  }
  trace.cumulative.resize(static_cast<std::size_t>(budget.horizon), cumulative);
  for (std::size_t k = 0; k < trace.steps.size(); ++k) trace.cumulative[k] = trace.steps[k].cumulative;
  trace.path = walker.state().visited();
  ConstraintAudit::global().check(trace.path, instance.nodes, budget);
  return trace;
}

MeanCi mean_ci95(std::span<const double> values) {
  MeanCi out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  double half = 0.0;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  out.lo = out.mean - half;
  out.hi = out.mean + half;
  return out;
}

Evaluation evaluate(const Policy& policy, std::span<const Instance> instances, std::size_t episodes,
                    const Budget& budget, const SensorConfig& sensor, std::uint64_t seed,
                    const EvaluateOptions& options) {
  validate(budget);
  validate(sensor);
  Evaluation out;
  if (episodes == 0) return out;
  if (instances.empty()) throw DataError("evaluation needs at least one instance");
  out.episodes.resize(episodes);
  parallel_for(episodes, [&](std::size_t e) {
    const Instance& inst = instances[e % instances.size()];
    const CoverageModel truth(inst.world, inst.nodes, sensor);
    Rng rng(derive_seed(seed, e));
    const std::span<const int> snaps =
        e < options.snapshot_episodes ? std::span<const int>(options.snapshot_steps) : std::span<const int>{};
    out.episodes[e] = run_episode(inst, truth, policy, budget, sensor, rng, snaps);
  });
  const auto horizon = static_cast<std::size_t>(budget.horizon);
  std::vector<double> column(episodes);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t e = 0; e < episodes; ++e) column[e] = out.episodes[e].cumulative[k];
    const MeanCi ci = mean_ci95(column);
    out.summary.mean.push_back(ci.mean);
    out.summary.ci_lo.push_back(ci.lo);
    out.summary.ci_hi.push_back(ci.hi);
  }
  return out;
}

void validate(const TrainConfig& c) {
  if (c.iterations < 1) throw ConfigError("iterations N must be >= 1");
  if (c.datapoints < 1) throw ConfigError("datapoints m must be >= 1");
  if (c.schedule == BetaSchedule::Geometric && !(c.beta_base >= 0.0 && c.beta_base <= 1.0))
    throw ConfigError("beta base must lie in [0, 1]");
  if (c.max_resamples < 1) throw ConfigError("max_resamples must be >= 1");
  validate(c.budget);
  validate(c.sensor);
  validate(c.forest);
}

double beta_for_iteration(const TrainConfig& c, int iteration) {
  if (c.schedule == BetaSchedule::Indicator) return iteration == 1 ? 1.0 : 0.0;
  return std::pow(c.beta_base, iteration - 1);
}

namespace {

struct Collected {
  std::vector<QDatapoint> points;
  std::size_t resampled = 0;
};

Collected collect_datapoint(const TrainConfig& config, std::span<const Instance> train_set,
                            std::span<const CoverageModel> models, const Policy& rollin, int iteration,
                            int j, const TrainHooks& hooks) {
  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(j), 1));
  const Budget& budget = config.budget;
  Collected out;
  for (int attempt = 0; attempt < config.max_resamples; ++attempt) {
    const std::size_t w = rng.below(train_set.size());
    const Instance& inst = train_set[w];
    const CoverageModel& truth = models[w];
    const auto t = static_cast<int>(rng.between(1, budget.horizon));

    Walker walker(inst, truth, config.sensor);
    std::vector<NodeIndex> actions;
    bool stuck = false;
    for (int step = 1; step < t; ++step) {
      const auto a = walker.choose(rollin, budget, rng);
      if (!a) {
        stuck = true;
        break;
      }
      actions.push_back(*a);
      walker.step(*a);
    }
    std::vector<NodeIndex> feasible;
    if (!stuck) feasible = feasible_actions(walker.state(), inst.nodes, budget);
    ConstraintAudit::global().check(walker.state().visited(), inst.nodes, budget);
    if (feasible.empty()) {
      ++out.resampled;
      continue;
    }
    if (hooks.on_rollin) hooks.on_rollin(iteration, j, w, actions);

    const BeliefSummary summary(walker.belief(), config.sensor);
    std::vector<NodeIndex> labelled;
    if (config.all_actions) {
      labelled = feasible;
    } else {
      labelled.push_back(feasible[rng.below(feasible.size())]);
    }
    for (NodeIndex a : labelled) {
      QDatapoint d;
      d.features = extract(walker.state(), a, summary, inst.nodes, budget);
      d.q = oracle_value_to_go(truth, walker.state(), a, budget);
      d.t = walker.state().t();
      out.points.push_back(std::move(d));
    }
    return out;
  }
  throw TrainingError(fmt::format("iteration {} datapoint {}: no state with a feasible action after {} roll-ins",
                                  iteration, j, config.max_resamples));
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const Instance> train_set,
                  std::span<const Instance> validation_set, const TrainHooks& hooks) {
  validate(config);
  if (train_set.empty()) throw DataError("training set is empty");
  if (validation_set.empty()) throw DataError("validation set is empty");

  std::vector<CoverageModel> models;
  models.reserve(train_set.size());
  for (const Instance& inst : train_set) models.emplace_back(inst.world, inst.nodes, config.sensor);

  const OraclePolicy oracle;
  const RandomPolicy initial;
  std::shared_ptr<const LearnedPolicy> learner;  // null until the first fit
  std::shared_ptr<const LearnedPolicy> best;
  double best_value = -1.0;
  const std::size_t validation_episodes =
      config.validation_episodes > 0 ? config.validation_episodes : validation_set.size();

  TrainResult result;
  result.offsets.push_back(0);
  for (int i = 1; i <= config.iterations; ++i) {
    const double beta = beta_for_iteration(config, i);
    std::unique_ptr<Policy> learner_policy;
    if (learner) learner_policy = std::make_unique<ForestPolicy>(learner);
    const Policy& current = learner ? *learner_policy : static_cast<const Policy&>(initial);
    const MixturePolicy rollin(beta, oracle, current);

    std::vector<Collected> batch(static_cast<std::size_t>(config.datapoints));
    parallel_for(batch.size(), [&](std::size_t j) {
      batch[j] = collect_datapoint(config, train_set, models, rollin, i, static_cast<int>(j), hooks);
    });

    IterationMetrics m;
    m.iteration = i;
    m.beta = beta;
    for (Collected& c : batch) {
      m.resampled += c.resampled;
      m.new_points += c.points.size();
      for (QDatapoint& d : c.points) result.dataset.push_back(std::move(d));
    }
    m.dataset_size = result.dataset.size();
    result.offsets.push_back(result.dataset.size());

    learner = std::make_shared<const LearnedPolicy>(
        fit(result.dataset, config.forest, derive_seed(config.seed, static_cast<std::uint64_t>(i), 2)));
    const ForestPolicy candidate(learner);
    const Evaluation val = evaluate(candidate, validation_set, validation_episodes, config.budget, config.sensor,
                                    derive_seed(config.seed, static_cast<std::uint64_t>(i), 3));
    std::vector<double> finals;
    for (const EpisodeTrace& tr : val.episodes) finals.push_back(tr.cumulative.back());
    m.validation = mean_ci95(finals);
    if (m.validation.mean > best_value) {
      best_value = m.validation.mean;
      best = learner;
      result.best_iteration = i;
    }
    result.metrics.push_back(m);
    if (hooks.on_iteration) hooks.on_iteration(m);
  }
  result.policy = best;
  return result;
}

}  // namespace ipp
