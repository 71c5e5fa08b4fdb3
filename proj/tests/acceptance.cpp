// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "cli.hpp"
#include "fixtures.hpp"
#include "ipp/explore.hpp"
#include "ipp/rng.hpp"

using namespace ipp;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void progress(const std::string& msg) { std::cerr << "[acceptance] " << msg << std::endl; }

// Reduced-scale setting shared by criteria 4-6.
constexpr int kGrid = 100;
constexpr std::size_t kNodes = 50;
constexpr std::size_t kTestInstances = 20;
const Budget kBudget{1000.0, 10};
const SensorConfig kSensor{64, 30.0};
constexpr std::uint64_t kTestSeed = 7;
constexpr std::array<std::uint64_t, 3> kReversalSeeds{7, 11, 23};
// Forest settings of the acceptance training pipeline, also used for criterion 7.
const ForestParams kPipelineForest{50, 12, 5, 16};

std::vector<Instance> reduced_dataset(WorldFamily family, std::size_t worlds, std::uint64_t seed) {
  DatasetSpec s;
  s.family = family;
  s.world_count = worlds;
  s.nodes_per_world = kNodes;
  s.width = s.height = kGrid;
  s.seed = seed;
  return generate_dataset(s);
}

MeanCi final_reward(const Policy& policy, std::span<const Instance> data) {
  const Evaluation ev = evaluate(policy, data, data.size(), kBudget, kSensor, 1);
  return {ev.summary.final_mean(), ev.summary.final_lo(), ev.summary.final_hi()};
}

std::string show(const MeanCi& m) { return fmt::format("{:.3f} [{:.3f}, {:.3f}]", m.mean, m.lo, m.hi); }

Verdict submodularity() {
  const auto t0 = Clock::now();
  Rng rng(1);
  std::size_t triples = 0, violations = 0;
  for (std::uint64_t w = 0; triples < 1000; ++w) {
    DatasetSpec s;
    s.family = w % 2 ? WorldFamily::PerimeterBlocks : WorldFamily::ParallelLines;
    s.width = s.height = 60;
    s.nodes_per_world = 20;
    s.seed = 900 + w;
    const Instance inst = generate_dataset(s)[0];
    const CoverageModel model(inst.world, inst.nodes, {32, 15.0});
    for (int k = 0; k < 100; ++k, ++triples) {
      std::vector<NodeIndex> big, small;
      for (NodeIndex v = 0; v < inst.nodes.size(); ++v)
        if (rng.bernoulli(0.4)) {
          big.push_back(v);
          if (rng.bernoulli(0.5)) small.push_back(v);
        }
      const NodeIndex v = rng.below(inst.nodes.size());
      const double ga = model.marginal_gain(v, small), gb = model.marginal_gain(v, big);
      if (ga < gb - 1e-9 || gb < -1e-9) ++violations;
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 30.0,
          fmt::format("{} triples, {} violations, {:.1f}s", triples, violations, secs)};
}

Verdict oracle_quality() {
  const auto t0 = Clock::now();
  int above_singleton = 0, above_half = 0, count = 0;
  double worst = 1.0;
  for (const auto& f : test::load_small_fixtures()) {
    ++count;
    const CoverageModel model(f.instance.world, f.instance.nodes, test::kFixtureSensor);
    const PathState start(f.instance.nodes);
    const OraclePlan plan =
        gcb_solve(model, start, f.budget.travel, static_cast<std::size_t>(f.budget.horizon));
    double singleton = 0.0;
    for (NodeIndex v : feasible_actions(start, f.instance.nodes, f.budget))
      singleton = std::max(singleton, reward(start, model, v));
    const double utility = model.coverage(start.visited()) + plan.predicted_utility;
    const double optimum = brute_force_solve(model, f.budget).utility;
    const double ratio = optimum > 0 ? utility / optimum : 1.0;
    worst = std::min(worst, ratio);
    above_singleton += plan.predicted_utility >= singleton - 1e-12;
    above_half += ratio >= 0.5;
  }
  const double secs = seconds_since(t0);
  return {count == 20 && above_singleton == 20 && above_half == 20 && secs < 60.0,
          fmt::format("{}/{} >= best singleton, {}/{} >= 0.5 x optimum (worst ratio {:.3f}), {:.1f}s", above_singleton,
                      count, above_half, count, worst, secs)};
}

Verdict reversal() {
  const auto t0 = Clock::now();
  const HeuristicPolicy rsv(PolicyKind::RearSideVoxel), ae(PolicyKind::AverageEntropy);
  std::string detail;
  bool pass = true;
  for (WorldFamily family : {WorldFamily::ParallelLines, WorldFamily::PerimeterBlocks}) {
    const bool rsv_should_win = family == WorldFamily::ParallelLines;
    auto ordered = [&](const MeanCi& r, const MeanCi& a) { return rsv_should_win ? r.mean > a.mean : a.mean > r.mean; };
    const auto data = reduced_dataset(family, kTestInstances, kTestSeed);
    const MeanCi r = final_reward(rsv, data), a = final_reward(ae, data);
    const bool separated = rsv_should_win ? r.lo > a.hi : a.lo > r.hi;
    bool holds = ordered(r, a) && separated;
    std::string how = "non-overlapping CIs";
    if (!holds) {
      holds = true;
      for (std::uint64_t seed : kReversalSeeds) {
        const auto d = reduced_dataset(family, kTestInstances, seed);
        holds = holds && ordered(final_reward(rsv, d), final_reward(ae, d));
      }
      how = fmt::format("ordering on seed set {{{}}}", fmt::join(kReversalSeeds, ","));
    }
    pass = pass && holds;
    detail += fmt::format("{}: rear_side_voxel {} vs average_entropy {} ({}{}); ", family_name(family), show(r), show(a),
                          how, holds ? "" : " FAILED");
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 600.0, detail + fmt::format("{:.0f}s", secs)};
}

struct LearnerOutcome {
  Verdict adaptation, dominance;
};

LearnerOutcome learner_criteria() {
  const auto t0 = Clock::now();
  LearnerOutcome out{{true, ""}, {true, ""}};
  for (WorldFamily family : {WorldFamily::ParallelLines, WorldFamily::PerimeterBlocks}) {
    TrainConfig cfg;
    cfg.iterations = 10;
    cfg.datapoints = 100;
    cfg.budget = kBudget;
    cfg.sensor = kSensor;
    cfg.seed = 5;
    cfg.all_actions = true;
    cfg.forest = kPipelineForest;
    const auto train_set = reduced_dataset(family, 50, 100);
    const auto validation = reduced_dataset(family, 10, 200);
    const auto test_set = reduced_dataset(family, kTestInstances, kTestSeed);
    TrainHooks hooks;
    hooks.on_iteration = [&](const IterationMetrics& m) {
      progress(fmt::format("{} iteration {}: |D|={} validation {:.3f}", family_name(family), m.iteration,
                           m.dataset_size, m.validation.mean));
    };
    const TrainResult trained = train(cfg, train_set, validation, hooks);

    const MeanCi learned = final_reward(ForestPolicy(trained.policy), test_set);
    const MeanCi oracle = final_reward(OraclePolicy(), test_set);
    const MeanCi random = final_reward(RandomPolicy(), test_set);
    MeanCi best{-1, 0, 0};
    PolicyKind best_kind = PolicyKind::Random;
    for (PolicyKind k : {PolicyKind::AverageEntropy, PolicyKind::OcclusionAware, PolicyKind::RearSideVoxel,
                         PolicyKind::RearSideEntropy, PolicyKind::UnobservedVoxel, PolicyKind::ProximityCount}) {
      const MeanCi h = final_reward(HeuristicPolicy(k), test_set);
      if (h.mean > best.mean) {
        best = h;
        best_kind = k;
      }
    }
    const bool adapts = learned.mean >= 0.9 * best.mean;
    const bool ordered = oracle.mean >= learned.mean && learned.mean >= random.mean;
    out.adaptation.pass = out.adaptation.pass && adapts;
    out.dominance.pass = out.dominance.pass && ordered;
    out.adaptation.detail += fmt::format("{}: learned {} vs 0.9 x {} {:.3f} = {:.3f} (iteration {}); ",
                                         family_name(family), show(learned), policy_kind_name(best_kind), best.mean,
                                         0.9 * best.mean, trained.best_iteration);
    out.dominance.detail += fmt::format("{}: oracle {:.3f} >= learned {:.3f} >= random {:.3f}; ", family_name(family),
                                        oracle.mean, learned.mean, random.mean);
  }
  const double secs = seconds_since(t0);
  out.adaptation.pass = out.adaptation.pass && secs < 1800.0;
  out.adaptation.detail += fmt::format("{:.0f}s", secs);
  out.dominance.detail.resize(out.dominance.detail.size() - 2);
  return out;
}

Verdict forest_correctness() {
  auto synthetic = [](std::size_t n, std::uint64_t seed, bool constant) {
    Rng rng(seed);
    std::vector<QDatapoint> data(n);
    for (QDatapoint& d : data) {
      d.features.values.resize(kFeatureCount);
      for (double& v : d.features.values) v = rng.uniform();
      d.q = constant ? 0.42 : d.features.values[0];
    }
    return data;
  };
  const RegressionForest f = fit(synthetic(1000, 1, false), kPipelineForest, 3);
  double mae = 0.0;
  const auto held_out = synthetic(500, 2, false);
  for (const QDatapoint& d : held_out) mae += std::abs(f.predict(d.features) - d.q);
  mae /= static_cast<double>(held_out.size());

  const RegressionForest c = fit(synthetic(300, 3, true), {}, 3);
  bool constant_exact = true;
  for (const QDatapoint& d : held_out) constant_exact = constant_exact && c.predict(d.features) == 0.42;

  const fs::path path = fs::temp_directory_path() / "ipp_acceptance_model.ipf";
  save_model(path, f);
  const RegressionForest g = load_model(path);
  fs::remove(path);
  bool identical = g == f;
  for (const QDatapoint& d : held_out)
    identical = identical && std::bit_cast<std::uint64_t>(g.predict(d.features)) ==
                                 std::bit_cast<std::uint64_t>(f.predict(d.features));
  return {mae < 0.05 && constant_exact && identical,
          fmt::format("held-out MAE {:.4f} (feature_subsample {}), constant target exact: {}, round-trip bit-identical: {}", mae,
                      kPipelineForest.feature_subsample,
                      constant_exact ? "yes" : "no", identical ? "yes" : "no")};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

Verdict cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "ipp_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(root / name) << text;
    return (root / name).string();
  };
  auto invoke = [&](std::vector<std::string> args, const std::string& out) {
    args.push_back("--out");
    args.push_back((root / out).string());
    std::ostringstream o, e;
    const int code = cli::run(args, o, e);
    if (code != 0) throw std::runtime_error(e.str());
    std::string dir = o.str();
    return fs::path(dir.substr(0, dir.find('\n')));
  };

  const std::string common = R"("sensor": {"ray_count": 32, "max_range": 15}, "budget": {"B": 300, "T": 5}, "seed": 3)";
  const std::string gen_cfg = write("gen.json", R"({"dataset": {"family": "perimeter_blocks", "world_count": 3,
    "nodes_per_world": 20, "width": 50, "height": 50, "seed": 12}})");
  std::vector<std::pair<std::string, std::string>> runs;  // (command, config)
  runs.push_back({"gen-worlds", gen_cfg});

  const fs::path first = invoke({"gen-worlds", "--config", gen_cfg}, "seed-data");
  const std::string data = (first / "dataset.ipd").string();
  runs.push_back({"oracle-solve", write("solve.json", R"({"dataset_file": ")" + data + "\", " + common + "}")});
  const std::string train_cfg = write("train.json", R"({"dataset_file": ")" + data + R"(", "validation_dataset_file": ")" +
                                                        data + R"(", "train": {"iterations": 2, "datapoints": 10,
    "forest": {"tree_count": 5}}, )" + common + "}");
  runs.push_back({"train", train_cfg});
  const fs::path model = invoke({"train", "--config", train_cfg}, "seed-model") / "model.ipf";
  runs.push_back({"evaluate", write("eval.json", R"({"dataset_file": ")" + data + R"(", "policy": "learned", "model": ")" +
                                                     model.string() + R"(", "episodes": 6, "snapshot_steps": [0, 5], )" +
                                                     common + "}")});
  runs.push_back({"evaluate", write("eval_rsv.json", R"({"dataset_file": ")" + data +
                                                         R"(", "policy": "rear_side_voxel", "episodes": 6, )" + common +
                                                         "}")});

  std::size_t files = 0;
  std::vector<std::string> differing;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& [cmd, cfg] = runs[i];
    const fs::path a = invoke({cmd, "--config", cfg, "--jobs", "1"}, fmt::format("a{}", i));
    const fs::path b = invoke({cmd, "--config", cfg, "--jobs", "4"}, fmt::format("b{}", i));
    const auto fa = read_tree(a), fb = read_tree(b);
    files += fa.size();
    if (fa != fb) differing.push_back(cmd);
  }
  fs::remove_all(root);
  return {differing.empty() && files > 0,
          fmt::format("{} commands run twice, {} files compared, {} differing{}", runs.size(), files, differing.size(),
                      differing.empty() ? "" : fmt::format(" ({})", fmt::join(differing, ", ")))};
}

}  // namespace

int main() {
  ConstraintAudit::global().reset();
  std::map<int, Verdict> verdicts;
  auto guarded = [&](int id, auto&& fn) {
    progress(fmt::format("criterion {}", id));
    try {
      verdicts[id] = fn();
    } catch (const std::exception& e) {
      verdicts[id] = {false, fmt::format("exception: {}", e.what())};
    }
  };
  guarded(1, submodularity);
  guarded(3, oracle_quality);
  guarded(4, reversal);
  progress("criteria 5 and 6");
  try {
    const LearnerOutcome l = learner_criteria();
    verdicts[5] = l.adaptation;
    verdicts[6] = l.dominance;
  } catch (const std::exception& e) {
    verdicts[5] = verdicts[6] = {false, fmt::format("exception: {}", e.what())};
  }
  guarded(7, forest_correctness);
  guarded(8, cli_determinism);
  const auto& audit = ConstraintAudit::global();
  verdicts[2] = {audit.checked() > 0 && audit.violations() == 0,
                 fmt::format("{} trajectories audited, {} violations", audit.checked(), audit.violations())};

  bool all = true;
  for (const auto& [id, v] : verdicts) {
    std::cout << fmt::format("criterion {}: {} {}\n", id, v.pass ? "PASS" : "FAIL", v.detail);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
