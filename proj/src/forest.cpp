#include "ipp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "ipp/errors.hpp"
#include "ipp/rng.hpp"
#include "ipp/text.hpp"

namespace ipp {

void validate(const ForestParams& p) {
  if (p.tree_count < 1) throw ConfigError("tree_count must be >= 1");
  if (p.max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (p.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (p.feature_subsample < 1) throw ConfigError("feature_subsample must be >= 1");
}

double RegressionTree::predict(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes[i].feature >= 0) {
    const Node& n = nodes[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

RegressionForest::RegressionForest(std::vector<RegressionTree> trees, ForestParams params,
                                   std::uint64_t train_seed, int schema_version, std::size_t feature_count)
    : trees_(std::move(trees)), params_(params), train_seed_(train_seed), schema_version_(schema_version),
      feature_count_(feature_count) {
  if (trees_.empty()) throw ContractViolation("forest needs at least one tree");
  for (const RegressionTree& t : trees_) {
    if (t.nodes.empty()) throw ContractViolation("tree has no nodes");
    const auto n = static_cast<std::int32_t>(t.nodes.size());
    for (const auto& node : t.nodes) {
      if (node.feature >= 0 && (static_cast<std::size_t>(node.feature) >= feature_count ||
                                node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n))
        throw ContractViolation("tree node references are out of range");
    }
  }
}

double RegressionForest::predict(const FeatureVector& f) const {
  if (f.schema_version != schema_version_)
    throw ContractViolation(fmt::format("feature schema v{} does not match model schema v{}", f.schema_version,
                                        schema_version_));
  if (f.values.size() != feature_count_)
    throw ContractViolation(fmt::format("expected {} features, got {}", feature_count_, f.values.size()));
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const RegressionTree& t : trees_) {
    const double p = t.predict(f.values);
    sum += p;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  // Rounding in the sum must not push the mean outside the tree predictions.
  return std::clamp(sum / static_cast<double>(trees_.size()), lo, hi);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const QDatapoint> data, const ForestParams& params, std::size_t feature_count, Rng& rng)
      : data_(data), params_(params), feature_count_(feature_count), rng_(rng) {}

  RegressionTree build(std::vector<std::size_t> sample) {
    sample_ = std::move(sample);
    tree_.nodes.clear();
    grow(0, sample_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double improvement = 0.0;
  };

  std::int32_t grow(std::size_t lo, std::size_t hi, int depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double w = 0.0, s = 0.0;
    double qmin = std::numeric_limits<double>::infinity(), qmax = -qmin;
    for (std::size_t k = lo; k < hi; ++k) {
      const QDatapoint& d = data_[sample_[k]];
      w += d.weight;
      s += d.weight * d.q;
      qmin = std::min(qmin, d.q);
      qmax = std::max(qmax, d.q);
    }
    // Clamp guards the mean against rounding outside the target range.
    tree_.nodes[id].value = std::clamp(s / w, qmin, qmax);

    const std::size_t count = hi - lo;
    if (depth >= params_.max_depth || count < 2 * static_cast<std::size_t>(params_.min_leaf) || qmin == qmax)
      return id;
    const Split split = best_split(lo, hi, w, s);
    if (split.feature < 0) return id;

    auto mid_it = std::stable_partition(sample_.begin() + static_cast<std::ptrdiff_t>(lo),
                                        sample_.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t i) {
                                          return data_[i].features.values[split.feature] <= split.threshold;
                                        });
    const auto mid = static_cast<std::size_t>(mid_it - sample_.begin());
    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    const std::int32_t left = grow(lo, mid, depth + 1);
    const std::int32_t right = grow(mid, hi, depth + 1);
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  Split best_split(std::size_t lo, std::size_t hi, double w_total, double s_total) {
    std::vector<int> order(feature_count_);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k + 1 < order.size(); ++k)
      std::swap(order[k], order[k + rng_.below(order.size() - k)]);

    struct Row {
      double x, q, w;
    };
    std::vector<Row> rows(hi - lo);
    Split best;
    const double parent = s_total * s_total / w_total;
    const std::size_t min_leaf = static_cast<std::size_t>(params_.min_leaf);
    int tried = 0;
    for (int f : order) {
      if (tried >= params_.feature_subsample) break;
      for (std::size_t k = lo; k < hi; ++k) {
        const QDatapoint& d = data_[sample_[k]];
        rows[k - lo] = {d.features.values[f], d.q, d.weight};
      }
      std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.x < b.x; });
      if (rows.front().x == rows.back().x) continue;  // constant here; does not count as tried
      ++tried;
      double wl = 0.0, sl = 0.0;
      for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        wl += rows[k].w;
        sl += rows[k].w * rows[k].q;
        if (rows[k].x == rows[k + 1].x) continue;
        if (k + 1 < min_leaf || rows.size() - (k + 1) < min_leaf) continue;
        const double wr = w_total - wl, sr = s_total - sl;
        if (!(wl > 0.0) || !(wr > 0.0)) continue;
        const double improvement = sl * sl / wl + sr * sr / wr - parent;
        if (improvement > best.improvement + 1e-15) {
          double threshold = 0.5 * (rows[k].x + rows[k + 1].x);
          if (!(threshold < rows[k + 1].x)) threshold = rows[k].x;
          best = {f, threshold, improvement};
        }
      }
    }
    return best;
  }

  std::span<const QDatapoint> data_;
  const ForestParams& params_;
  std::size_t feature_count_;
  Rng& rng_;
  std::vector<std::size_t> sample_;
  RegressionTree tree_;
};

}  // namespace

RegressionForest fit(std::span<const QDatapoint> data, const ForestParams& params, std::uint64_t seed) {
  validate(params);
  if (data.empty()) throw TrainingError("cannot fit a forest on an empty dataset");
  const int schema = data.front().features.schema_version;
  const std::size_t feature_count = data.front().features.values.size();
  if (feature_count == 0) throw TrainingError("datapoints carry no features");
  for (const QDatapoint& d : data) {
    if (d.features.schema_version != schema) throw TrainingError("datapoints mix feature schema versions");
    if (d.features.values.size() != feature_count) throw TrainingError("datapoints have inconsistent feature counts");
    if (!std::isfinite(d.q)) throw TrainingError("non-finite target value");
    if (!(d.weight > 0.0) || !std::isfinite(d.weight)) throw TrainingError("datapoint weight must be positive");
    for (double v : d.features.values)
      if (!std::isfinite(v)) throw TrainingError("non-finite feature value");
  }

  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.tree_count));
  for (int k = 0; k < params.tree_count; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::vector<std::size_t> sample(data.size());
    for (auto& i : sample) i = rng.below(data.size());
    TreeBuilder builder(data, params, feature_count, rng);
    trees.push_back(builder.build(std::move(sample)));
  }
  return RegressionForest(std::move(trees), params, seed, schema, feature_count);
}

// Format:
//   ipp-forest 1
//   schema <version> features <count>
//   params <tree_count> <max_depth> <min_leaf> <feature_subsample>
//   seed <train_seed>
//   trees <count>
//   tree <node_count>
//   <feature> <threshold> <left> <right> <value>      (node_count lines)
//   ...
//   end
std::string serialize_forest(const RegressionForest& forest) {
  const ForestParams& p = forest.params();
  std::string out = fmt::format("ipp-forest 1\nschema {} features {}\nparams {} {} {} {}\nseed {}\ntrees {}\n",
                                forest.schema_version(), forest.feature_count(), p.tree_count, p.max_depth,
                                p.min_leaf, p.feature_subsample, forest.train_seed(), forest.trees().size());
  for (const RegressionTree& t : forest.trees()) {
    out += fmt::format("tree {}\n", t.nodes.size());
    for (const auto& n : t.nodes)
      out += fmt::format("{} {} {} {} {}\n", n.feature, text::format_double(n.threshold), n.left, n.right,
                         text::format_double(n.value));
  }
  out += "end\n";
  return out;
}

namespace {

class ForestParser {
 public:
  explicit ForestParser(std::string_view text) : reader_(text) {}

  RegressionForest run(int expected_schema) {
    auto head = line("ipp-forest", 2);
    if (head[1] != "1") fail(fmt::format("unsupported model file version '{}'", head[1]));
    auto schema = line("schema", 4);
    const int version = static_cast<int>(as_int(schema[1]));
    if (schema[2] != "features") fail("expected 'features'");
    const std::int64_t features = as_int(schema[3]);
    if (features <= 0) fail("feature count must be positive");
    if (version != expected_schema)
      throw IncompatibleModel(fmt::format("model uses feature schema v{}, this build expects v{}", version,
                                          expected_schema));
    auto params_line = line("params", 5);
    ForestParams p{static_cast<int>(as_int(params_line[1])), static_cast<int>(as_int(params_line[2])),
                   static_cast<int>(as_int(params_line[3])), static_cast<int>(as_int(params_line[4]))};
    auto seed_line = line("seed", 2);
    std::uint64_t seed;
    if (!text::parse_uint(seed_line[1], seed)) fail("bad seed");
    auto trees_line = line("trees", 2);
    const std::int64_t tree_count = as_int(trees_line[1]);
    if (tree_count <= 0) fail("tree count must be positive");
    std::vector<RegressionTree> trees;
    for (std::int64_t k = 0; k < tree_count; ++k) {
      auto tree_head = line("tree", 2);
      const std::int64_t n = as_int(tree_head[1]);
      if (n <= 0) fail("tree must have nodes");
      RegressionTree tree;
      for (std::int64_t j = 0; j < n; ++j) {
        auto tok = tokens();
        if (tok.size() != 5) fail("tree node line must have 5 fields");
        RegressionTree::Node node;
        node.feature = static_cast<int>(as_int(tok[0]));
        node.threshold = as_double(tok[1]);
        node.left = static_cast<std::int32_t>(as_int(tok[2]));
        node.right = static_cast<std::int32_t>(as_int(tok[3]));
        node.value = as_double(tok[4]);
        if (node.feature >= features) fail("split feature out of range");
        tree.nodes.push_back(node);
      }
      trees.push_back(std::move(tree));
    }
    line("end", 1);
    try {
      return RegressionForest(std::move(trees), p, seed, version, static_cast<std::size_t>(features));
    } catch (const ContractViolation& e) {
      fail(e.what());
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, reader_.line_number()); }

  std::vector<std::string_view> tokens() {
    std::string_view l;
    if (!reader_.next(l)) throw ParseError("unexpected end of file", reader_.line_number() + 1);
    return text::split_ws(l);
  }

  std::vector<std::string_view> line(std::string_view keyword, std::size_t min_tokens) {
    auto tok = tokens();
    if (tok.empty() || tok[0] != keyword) fail(fmt::format("expected '{}'", keyword));
    if (tok.size() < min_tokens) fail(fmt::format("'{}' line is missing fields", keyword));
    return tok;
  }

  std::int64_t as_int(std::string_view t) const {
    std::int64_t v;
    if (!text::parse_int(t, v)) fail(fmt::format("expected integer, got '{}'", t));
    return v;
  }

  double as_double(std::string_view t) const {
    double v;
    if (!text::parse_double(t, v) || !std::isfinite(v)) fail(fmt::format("expected number, got '{}'", t));
    return v;
  }

  text::LineReader reader_;
};

}  // namespace

RegressionForest parse_forest(std::string_view text, int expected_schema) {
  return ForestParser(text).run(expected_schema);
}

void save_model(const std::filesystem::path& path, const RegressionForest& forest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << serialize_forest(forest);
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

RegressionForest load_model(const std::filesystem::path& path, int expected_schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open model '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_forest(buf.str(), expected_schema);
}

LearnedPolicy::LearnedPolicy(RegressionForest forest) : forest_(std::move(forest)) {}

std::optional<NodeIndex> LearnedPolicy::select_action(const PathState& state, const BeliefSummary& summary,
                                                      const NodeSet& nodes, const Budget& budget) const {
  const std::vector<NodeIndex> feasible = feasible_actions(state, nodes, budget);
  if (feasible.empty()) return std::nullopt;
  if (feasible.size() == 1) return feasible.front();
  NodeIndex best = feasible.front();
  double best_q = -std::numeric_limits<double>::infinity();
  for (NodeIndex v : feasible) {
    const double q = forest_.predict(extract(state, v, summary, nodes, budget));
    if (q > best_q) {
      best_q = q;
      best = v;
    }
  }
  return best;
}

std::optional<NodeIndex> LearnedPolicy::select_action(const PathState& state, const Belief& belief,
                                                      const NodeSet& nodes, const Budget& budget,
                                                      const SensorConfig& sensor) const {
  return select_action(state, BeliefSummary(belief, sensor), nodes, budget);
}

}  // namespace ipp
