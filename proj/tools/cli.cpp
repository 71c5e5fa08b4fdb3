#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ipp/errors.hpp"
#include "ipp/explore.hpp"
#include "ipp/parallel.hpp"
#include "ipp/text.hpp"

namespace ipp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Configuration

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("'{}.{}' has the wrong type", where, key));
  }
}

DatasetSpec parse_dataset_spec(const json& j, std::string_view where) {
  reject_unknown(j, where, {"family", "world_count", "nodes_per_world", "nodesets_per_world", "width", "height",
                            "seed", "block_count", "identity_transform"});
  DatasetSpec s;
  if (!j.contains("family")) throw ConfigError(fmt::format("{}.family is required", where));
  s.family = parse_family(get_or<std::string>(j, "family", "", where));
  s.world_count = get_or<std::size_t>(j, "world_count", s.world_count, where);
  s.nodes_per_world = get_or<std::size_t>(j, "nodes_per_world", s.nodes_per_world, where);
  s.nodesets_per_world = get_or<std::size_t>(j, "nodesets_per_world", s.nodesets_per_world, where);
  s.width = get_or<int>(j, "width", s.width, where);
  s.height = get_or<int>(j, "height", s.height, where);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed, where);
  s.block_count = get_or<int>(j, "block_count", s.block_count, where);
  s.identity_transform = get_or<bool>(j, "identity_transform", s.identity_transform, where);
  validate(s);
  return s;
}

json dataset_spec_json(const DatasetSpec& s) {
  return {{"family", family_name(s.family)},
          {"world_count", s.world_count},
          {"nodes_per_world", s.nodes_per_world},
          {"nodesets_per_world", s.nodesets_per_world},
          {"width", s.width},
          {"height", s.height},
          {"seed", s.seed},
          {"block_count", s.block_count},
          {"identity_transform", s.identity_transform}};
}

/// A dataset given inline (generated on the fly) or as a file.
struct DatasetSource {
  std::optional<DatasetSpec> spec;
  std::optional<fs::path> file;

  std::vector<Instance> load() const { return spec ? generate_dataset(*spec) : load_dataset(*file); }
};

struct RunConfig {
  json raw;  // effective configuration (after flag overrides), echoed into manifests
  fs::path base_dir;
  std::optional<DatasetSource> dataset;
  std::optional<DatasetSource> validation;
  SensorConfig sensor;
  Budget budget;
  TrainConfig train;
  std::optional<PolicyKind> policy;
  std::optional<fs::path> model;
  std::size_t episodes = 0;
  std::vector<int> snapshot_steps;
  std::size_t snapshot_episodes = 1;
  std::uint64_t seed = 0;
};

std::optional<DatasetSource> parse_source(const json& root, const char* inline_key, const char* file_key,
                                          const fs::path& base) {
  if (root.contains(inline_key) && root.contains(file_key))
    throw ConfigError(fmt::format("give either '{}' or '{}', not both", inline_key, file_key));
  if (root.contains(inline_key)) return DatasetSource{parse_dataset_spec(root.at(inline_key), inline_key), {}};
  if (root.contains(file_key)) {
    fs::path p = get_or<std::string>(root, file_key, "", "config");
    if (p.is_relative()) p = base / p;
    if (!fs::is_regular_file(p)) throw DataError(fmt::format("dataset file '{}' not found", p.string()));
    return DatasetSource{{}, p};
  }
  return std::nullopt;
}

RunConfig parse_config(json root, const fs::path& base) {
  reject_unknown(root, "config",
                 {"dataset", "dataset_file", "validation_dataset", "validation_dataset_file", "sensor", "budget",
                  "train", "policy", "model", "episodes", "snapshot_steps", "snapshot_episodes", "seed"});
  RunConfig c;
  c.base_dir = base;
  c.dataset = parse_source(root, "dataset", "dataset_file", base);
  c.validation = parse_source(root, "validation_dataset", "validation_dataset_file", base);

  if (root.contains("sensor")) {
    const json& s = root.at("sensor");
    reject_unknown(s, "sensor", {"ray_count", "max_range"});
    c.sensor.ray_count = get_or<int>(s, "ray_count", c.sensor.ray_count, "sensor");
    c.sensor.max_range = get_or<double>(s, "max_range", c.sensor.max_range, "sensor");
  }
  validate(c.sensor);
  if (root.contains("budget")) {
    const json& b = root.at("budget");
    reject_unknown(b, "budget", {"B", "T"});
    c.budget.travel = get_or<double>(b, "B", c.budget.travel, "budget");
    c.budget.horizon = get_or<int>(b, "T", c.budget.horizon, "budget");
  }
  validate(c.budget);

  c.seed = get_or<std::uint64_t>(root, "seed", 0, "config");
  TrainConfig& t = c.train;
  if (root.contains("train")) {
    const json& tr = root.at("train");
    reject_unknown(tr, "train", {"iterations", "datapoints", "beta_schedule", "beta_base", "all_actions",
                                 "validation_episodes", "max_resamples", "forest"});
    t.iterations = get_or<int>(tr, "iterations", t.iterations, "train");
    t.datapoints = get_or<int>(tr, "datapoints", t.datapoints, "train");
    const std::string schedule = get_or<std::string>(tr, "beta_schedule", "geometric", "train");
    if (schedule == "geometric") {
      t.schedule = BetaSchedule::Geometric;
    } else if (schedule == "indicator") {
      t.schedule = BetaSchedule::Indicator;
    } else {
      throw ConfigError(fmt::format("unknown beta_schedule '{}'", schedule));
    }
    t.beta_base = get_or<double>(tr, "beta_base", t.beta_base, "train");
    t.all_actions = get_or<bool>(tr, "all_actions", t.all_actions, "train");
    t.validation_episodes = get_or<std::size_t>(tr, "validation_episodes", t.validation_episodes, "train");
    t.max_resamples = get_or<int>(tr, "max_resamples", t.max_resamples, "train");
    if (tr.contains("forest")) {
      const json& f = tr.at("forest");
      reject_unknown(f, "train.forest", {"tree_count", "max_depth", "min_leaf", "feature_subsample"});
      t.forest.tree_count = get_or<int>(f, "tree_count", t.forest.tree_count, "train.forest");
      t.forest.max_depth = get_or<int>(f, "max_depth", t.forest.max_depth, "train.forest");
      t.forest.min_leaf = get_or<int>(f, "min_leaf", t.forest.min_leaf, "train.forest");
      t.forest.feature_subsample = get_or<int>(f, "feature_subsample", t.forest.feature_subsample, "train.forest");
    }
  }
  t.budget = c.budget;
  t.sensor = c.sensor;
  t.seed = c.seed;
  validate(t);

  if (root.contains("policy")) c.policy = parse_policy_kind(get_or<std::string>(root, "policy", "", "config"));
  if (root.contains("model")) {
    fs::path p = get_or<std::string>(root, "model", "", "config");
    if (p.is_relative()) p = base / p;
    if (!fs::is_regular_file(p)) throw DataError(fmt::format("model file '{}' not found", p.string()));
    c.model = p;
  }
  const std::int64_t episodes = get_or<std::int64_t>(root, "episodes", 0, "config");
  if (episodes < 0) throw ConfigError("episodes must be >= 0");
  c.episodes = static_cast<std::size_t>(episodes);
  c.snapshot_steps = get_or<std::vector<int>>(root, "snapshot_steps", {}, "config");
  for (int s : c.snapshot_steps)
    if (s < 0 || s > c.budget.horizon) throw ConfigError(fmt::format("snapshot step {} outside [0, T]", s));
  c.snapshot_episodes = get_or<std::size_t>(root, "snapshot_episodes", 1, "config");
  c.raw = std::move(root);
  return c;
}

// ---------------------------------------------------------------------------
// Output

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", p.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class OutputDir {
 public:
  OutputDir(const fs::path& base, std::string_view command, const json& config) {
    const std::string canonical = std::string(command) + "\n" + config.dump();
    dir_ = base / fmt::format("{}-{}", command, text::hex64(text::fnv1a64(canonical)));
    if (fs::exists(dir_)) throw DataError(fmt::format("output directory '{}' already exists", dir_.string()));
  }

  const fs::path& path() const { return dir_; }

  void write(const fs::path& rel, std::string_view content) {
    const fs::path p = dir_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write '{}'", p.string()));
    out << content;
    if (!out) throw DataError(fmt::format("write to '{}' failed", p.string()));
  }

 private:
  fs::path dir_;
};

std::string dataset_hash(std::span<const Instance> instances) {
  return text::hex64(text::fnv1a64(serialize_dataset(instances)));
}

json base_manifest(std::string_view command, const RunConfig& c) {
  return {{"command", command}, {"config", c.raw}, {"seed", c.seed}, {"feature_schema_version", kFeatureSchemaVersion}};
}

std::vector<Instance> require_dataset(const RunConfig& c, std::string_view command) {
  if (!c.dataset) throw ConfigError(fmt::format("{} needs 'dataset' or 'dataset_file'", command));
  return c.dataset->load();
}

// ---------------------------------------------------------------------------
// Commands

void cmd_gen_worlds(const RunConfig& c, OutputDir& out, std::ostream& log) {
  if (!c.dataset || !c.dataset->spec) throw ConfigError("gen-worlds needs an inline 'dataset' spec");
  const std::vector<Instance> data = generate_dataset(*c.dataset->spec);
  const std::string text = serialize_dataset(data);
  out.write("dataset.ipd", text);
  json manifest = base_manifest("gen-worlds", c);
  manifest["dataset_spec"] = dataset_spec_json(*c.dataset->spec);
  manifest["instances"] = data.size();
  manifest["dataset_hash"] = text::hex64(text::fnv1a64(text));
  out.write("manifest.json", manifest.dump(2) + "\n");
  log << fmt::format("wrote {} instances to {}\n", data.size(), (out.path() / "dataset.ipd").string());
}

void cmd_oracle_solve(const RunConfig& c, OutputDir& out, std::ostream& log) {
  const std::vector<Instance> data = require_dataset(c, "oracle-solve");
  struct Row {
    OraclePlan plan;
    double start_coverage = 0.0;
    bool feasible = true;
  };
  std::vector<Row> rows(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const CoverageModel model(data[i].world, data[i].nodes, c.sensor);
    const PathState start(data[i].nodes);
    rows[i].plan = gcb_solve(model, start, c.budget.travel, static_cast<std::size_t>(c.budget.horizon));
    rows[i].start_coverage = model.coverage(start.visited());
    std::vector<NodeIndex> full = start.visited();
    full.insert(full.end(), rows[i].plan.path.begin(), rows[i].plan.path.end());
    rows[i].feasible = ConstraintAudit::global().check(full, data[i].nodes, c.budget);
  });
  std::string plans = "instance,world_id,length,predicted_utility,predicted_cost,total_coverage,path\n";
  double sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const OraclePlan& p = rows[i].plan;
    std::string path;
    for (NodeIndex v : p.path) path += (path.empty() ? "" : " ") + std::to_string(v);
    const double total = rows[i].start_coverage + p.predicted_utility;
    sum += total;
    plans += fmt::format("{},{},{},{},{},{},{}\n", i, data[i].world.id(), p.path.size(),
                         text::format_double(p.predicted_utility), text::format_double(p.predicted_cost),
                         text::format_double(total), path);
  }
  out.write("plans.csv", plans);
  json manifest = base_manifest("oracle-solve", c);
  manifest["dataset_hash"] = dataset_hash(data);
  manifest["instances"] = data.size();
  manifest["mean_total_coverage"] = data.empty() ? 0.0 : sum / static_cast<double>(data.size());
  out.write("manifest.json", manifest.dump(2) + "\n");
  log << fmt::format("solved {} instances, mean coverage {:.4f}\n", data.size(),
                     data.empty() ? 0.0 : sum / static_cast<double>(data.size()));
}

json feature_manifest() {
  json features = json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    features.push_back({{"index", i}, {"name", feature_schema()[i].name}, {"normalizer", feature_schema()[i].normalizer}});
  return {{"schema_version", kFeatureSchemaVersion}, {"feature_count", kFeatureCount}, {"features", features}};
}

void cmd_train(const RunConfig& c, OutputDir& out, std::ostream& log) {
  const std::vector<Instance> train_set = require_dataset(c, "train");
  if (!c.validation) throw ConfigError("train needs 'validation_dataset' or 'validation_dataset_file'");
  const std::vector<Instance> validation_set = c.validation->load();

  TrainHooks hooks;
  hooks.on_iteration = [&](const IterationMetrics& m) {
    log << fmt::format("iteration {}/{}: beta={:.3f} |D|={} validation={:.4f}\n", m.iteration, c.train.iterations,
                       m.beta, m.dataset_size, m.validation.mean);
  };
  const TrainResult result = train(c.train, train_set, validation_set, hooks);

  std::string metrics =
      "iteration,beta,new_points,dataset_size,resampled,validation_mean,validation_ci_lo,validation_ci_hi,selected\n";
  for (const IterationMetrics& m : result.metrics)
    metrics += fmt::format("{},{},{},{},{},{},{},{},{}\n", m.iteration, text::format_double(m.beta), m.new_points,
                           m.dataset_size, m.resampled, text::format_double(m.validation.mean),
                           text::format_double(m.validation.lo), text::format_double(m.validation.hi),
                           m.iteration == result.best_iteration ? 1 : 0);
  out.write("model.ipf", serialize_forest(result.policy->forest()));
  out.write("metrics.csv", metrics);
  out.write("features.json", feature_manifest().dump(2) + "\n");
  json manifest = base_manifest("train", c);
  manifest["train_dataset_hash"] = dataset_hash(train_set);
  manifest["validation_dataset_hash"] = dataset_hash(validation_set);
  manifest["best_iteration"] = result.best_iteration;
  manifest["dataset_size"] = result.dataset.size();
  out.write("manifest.json", manifest.dump(2) + "\n");
  log << fmt::format("selected iteration {}; model written to {}\n", result.best_iteration,
                     (out.path() / "model.ipf").string());
}

void cmd_evaluate(const RunConfig& c, OutputDir& out, std::ostream& log) {
  if (!c.policy) throw ConfigError("evaluate needs 'policy' (config key or --policy)");
  std::shared_ptr<const LearnedPolicy> learned;
  if (*c.policy == PolicyKind::Learned) {
    if (!c.model) throw ConfigError("the learned policy needs 'model'");
    learned = std::make_shared<const LearnedPolicy>(load_model(*c.model));
  }
  const std::unique_ptr<Policy> policy = make_policy(*c.policy, learned);
  const std::vector<Instance> data = require_dataset(c, "evaluate");

  EvaluateOptions options;
  options.snapshot_steps = c.snapshot_steps;
  options.snapshot_episodes = c.snapshot_episodes;
  const Evaluation ev = evaluate(*policy, data, c.episodes, c.budget, c.sensor, c.seed, options);

  std::string episodes = "episode,step,cumulative_reward\n";
  for (std::size_t e = 0; e < ev.episodes.size(); ++e)
    for (std::size_t k = 0; k < ev.episodes[e].cumulative.size(); ++k)
      episodes += fmt::format("{},{},{}\n", e, k + 1, text::format_double(ev.episodes[e].cumulative[k]));
  std::string summary = "step,mean,ci_lo,ci_hi\n";
  for (std::size_t k = 0; k < ev.summary.mean.size(); ++k)
    summary += fmt::format("{},{},{},{}\n", k + 1, text::format_double(ev.summary.mean[k]),
                           text::format_double(ev.summary.ci_lo[k]), text::format_double(ev.summary.ci_hi[k]));
  out.write("episodes.csv", episodes);
  out.write("summary.csv", summary);
  for (std::size_t e = 0; e < ev.episodes.size(); ++e)
    for (const auto& [step, grid] : ev.episodes[e].snapshots)
      out.write(fs::path("snapshots") / fmt::format("episode{}_step{}.txt", e, step), grid);
  json manifest = base_manifest("evaluate", c);
  manifest["dataset_hash"] = dataset_hash(data);
  manifest["policy"] = policy->name();
  manifest["episodes"] = c.episodes;
  if (c.model) manifest["model_hash"] = text::hex64(text::fnv1a64(read_file(*c.model)));
  out.write("manifest.json", manifest.dump(2) + "\n");
  log << fmt::format("{} episodes of {}: final mean {:.4f} [{:.4f}, {:.4f}]\n", c.episodes, policy->name(),
                     ev.summary.final_mean(), ev.summary.final_lo(), ev.summary.final_hi());
}

std::string one_line(std::string s) {
  for (char& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out;
}

int report(std::ostream& err, std::string_view kind, int code, const std::string& message) {
  err << fmt::format("error kind={} exit={} message=\"{}\"\n", kind, code, one_line(message));
  return code;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Budgeted information gathering workbench", "ipp"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", policy_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::int64_t> episodes_override;
  unsigned jobs = 0;
  for (const char* name : {"gen-worlds", "oracle-solve", "train", "evaluate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed_override, "override the configured seed");
    sub->add_option("--out", out_dir, "base output directory");
    sub->add_option("--policy", policy_override, "policy kind (evaluate)");
    sub->add_option("--episodes", episodes_override, "episode count (evaluate)");
    sub->add_option("--jobs", jobs, "worker threads (capped by IPP_MAX_JOBS)");
  }

  std::vector<std::string> argv_storage{"ipp"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report(err, "config_error", kConfigError, e.what());
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (jobs > 0) set_max_jobs(jobs);
    const fs::path cfg_path(config_path);
    if (!fs::is_regular_file(cfg_path)) throw DataError(fmt::format("config file '{}' not found", config_path));
    json root;
    try {
      root = json::parse(read_file(cfg_path));
    } catch (const json::parse_error& e) {
      throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    if (seed_override) root["seed"] = *seed_override;
    if (!policy_override.empty()) root["policy"] = policy_override;
    if (episodes_override) root["episodes"] = *episodes_override;
    const RunConfig config = parse_config(root, cfg_path.parent_path());

    OutputDir output(out_dir, command, config.raw);
    if (command == "gen-worlds") {
      cmd_gen_worlds(config, output, err);
    } else if (command == "oracle-solve") {
      cmd_oracle_solve(config, output, err);
    } else if (command == "train") {
      cmd_train(config, output, err);
    } else {
      cmd_evaluate(config, output, err);
    }
    out << output.path().string() << "\n";
    return kOk;
  } catch (const ConfigError& e) {
    return report(err, e.kind(), kConfigError, e.what());
  } catch (const DataError& e) {
    return report(err, e.kind(), kDataError, e.what());
  } catch (const Error& e) {
    return report(err, e.kind(), kInternalError, e.what());
  } catch (const std::exception& e) {
    return report(err, "internal_error", kInternalError, e.what());
  }
}

}  // namespace ipp::cli
