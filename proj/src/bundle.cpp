#include "slimshap/bundle.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "json.hpp"

namespace slimshap {

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "slimshap-bundle";

json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vec(const json& j) {
  const auto s = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

json basis_json(const SplineBasis1D& b) { return json{{"knots", b.knots}}; }

SplineBasis1D json_basis(const json& j) {
  SplineBasis1D b;
  b.knots = j.at("knots").get<std::vector<double>>();
  return b;
}

json gamfit_json(const SubsetGamFit& f) {
  return json{{"beta", vec_json(f.beta)},
              {"col_map", f.col_map},
              {"ridge_fallback", f.ridge_fallback},
              {"intercept_only", f.intercept_only},
              {"weighted_rss", f.weighted_rss},
              {"weight_total", f.weight_total},
              {"positive_rows", f.positive_rows}};
}

SubsetGamFit json_gamfit(const json& j) {
  SubsetGamFit f;
  f.beta = json_vec(j.at("beta"));
  f.col_map = j.at("col_map").get<std::vector<std::int32_t>>();
  f.ridge_fallback = j.at("ridge_fallback").get<bool>();
  f.intercept_only = j.at("intercept_only").get<bool>();
  f.weighted_rss = j.at("weighted_rss").get<double>();
  f.weight_total = j.at("weight_total").get<double>();
  f.positive_rows = j.at("positive_rows").get<int>();
  return f;
}

// Forest trees as parallel arrays: node objects would triple the file size.
json ctree_json(const ClassificationTree& t) {
  const std::size_t n = t.nodes.size();
  std::vector<int> feature(n), left(n), right(n);
  std::vector<double> threshold(n), value(n);
  for (std::size_t i = 0; i < n; ++i) {
    feature[i] = t.nodes[i].feature;
    threshold[i] = t.nodes[i].threshold;
    left[i] = t.nodes[i].left;
    right[i] = t.nodes[i].right;
    value[i] = t.nodes[i].value;
  }
  return json{{"feature", feature},
              {"threshold", threshold},
              {"left", left},
              {"right", right},
              {"value", value}};
}

ClassificationTree json_ctree(const json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  if (threshold.size() != feature.size() || left.size() != feature.size() ||
      right.size() != feature.size() || value.size() != feature.size())
    throw std::runtime_error("bundle: inconsistent tree node arrays");
  ClassificationTree t;
  t.nodes.resize(feature.size());
  for (std::size_t i = 0; i < feature.size(); ++i) {
    t.nodes[i].feature = feature[i];
    t.nodes[i].threshold = threshold[i];
    t.nodes[i].left = left[i];
    t.nodes[i].right = right[i];
    t.nodes[i].value = value[i];
  }
  return t;
}

json forest_config_json(const ForestConfig& c) {
  return json{{"n_trees", c.n_trees},
              {"max_depth", c.max_depth},
              {"max_features", c.max_features},
              {"min_leaf", c.min_leaf},
              {"seed", c.seed}};
}

ForestConfig json_forest_config(const json& j) {
  ForestConfig c;
  c.n_trees = j.at("n_trees").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.max_features = j.at("max_features").get<int>();
  c.min_leaf = j.at("min_leaf").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json forest_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(ctree_json(t));
  return json{{"trees", std::move(trees)},
              {"d", m.d},
              {"config", forest_config_json(m.config)},
              {"constant", m.constant},
              {"constant_value", m.constant_value},
              {"raw_importance", m.raw_importance}};
}

ForestModel json_forest(const json& j) {
  ForestModel m;
  for (const auto& t : j.at("trees")) m.trees.push_back(json_ctree(t));
  m.d = j.at("d").get<int>();
  m.config = json_forest_config(j.at("config"));
  m.constant = j.at("constant").get<bool>();
  m.constant_value = j.at("constant_value").get<double>();
  m.raw_importance = j.at("raw_importance").get<std::vector<double>>();
  return m;
}

json slim_node_json(const SlimNode& n) {
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", n.left},
              {"right", n.right},
              {"parent", n.parent},
              {"depth", n.depth},
              {"count", n.count},
              {"left_count", n.left_count},
              {"terminal_index", n.terminal_index},
              {"gam", gamfit_json(n.gam)}};
}

SlimNode json_slim_node(const json& j) {
  SlimNode n;
  n.feature = j.at("feature").get<int>();
  n.threshold = j.at("threshold").get<double>();
  n.left = j.at("left").get<int>();
  n.right = j.at("right").get<int>();
  n.parent = j.at("parent").get<int>();
  n.depth = j.at("depth").get<int>();
  n.count = j.at("count").get<int>();
  n.left_count = j.at("left_count").get<int>();
  n.terminal_index = j.at("terminal_index").get<int>();
  n.gam = json_gamfit(j.at("gam"));
  return n;
}

json slim_tree_json(const SlimTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) nodes.push_back(slim_node_json(n));
  json basis = json::array();
  for (const auto& b : t.basis) basis.push_back(basis_json(b));
  return json{{"nodes", std::move(nodes)},
              {"terminals", t.terminals},
              {"basis", std::move(basis)},
              {"p", t.p},
              {"depth", t.depth},
              {"train_mse", t.train_mse},
              {"train_r2", t.train_r2}};
}

SlimTree json_slim_tree(const json& j) {
  SlimTree t;
  for (const auto& n : j.at("nodes")) t.nodes.push_back(json_slim_node(n));
  t.terminals = j.at("terminals").get<std::vector<int>>();
  for (const auto& b : j.at("basis")) t.basis.push_back(json_basis(b));
  t.p = j.at("p").get<int>();
  t.depth = j.at("depth").get<int>();
  t.train_mse = j.at("train_mse").get<double>();
  t.train_r2 = j.at("train_r2").get<double>();
  return t;
}

json node_models_json(const NodeModels& m) {
  json event = json::array();  // stored from mask 1; slot 0 is never populated
  for (std::size_t s = 1; s < m.event.size(); ++s) event.push_back(forest_json(m.event[s]));
  return json{{"top_vars", m.top_vars},
              {"selector_importance", vec_json(m.selector_importance)},
              {"empirical_left", m.empirical_left},
              {"event", std::move(event)}};
}

NodeModels json_node_models(const json& j) {
  NodeModels m;
  m.top_vars = j.at("top_vars").get<std::vector<int>>();
  m.selector_importance = json_vec(j.at("selector_importance"));
  m.empirical_left = j.at("empirical_left").get<double>();
  const json& event = j.at("event");
  if (!event.empty()) {
    m.event.resize(event.size() + 1);
    for (std::size_t s = 0; s < event.size(); ++s) m.event[s + 1] = json_forest(event[s]);
  }
  return m;
}

json slim_config_json(const SlimConfig& c) {
  return json{{"max_depth", c.max_depth},
              {"min_node_size", c.min_node_size},
              {"n_knots", c.n_knots},
              {"candidate_quantiles", c.candidate_quantiles},
              {"min_rel_improvement", c.min_rel_improvement},
              {"ridge", c.ridge}};
}

SlimConfig json_slim_config(const json& j) {
  SlimConfig c;
  c.max_depth = j.at("max_depth").get<int>();
  c.min_node_size = j.at("min_node_size").get<int>();
  c.n_knots = j.at("n_knots").get<int>();
  c.candidate_quantiles = j.at("candidate_quantiles").get<int>();
  c.min_rel_improvement = j.at("min_rel_improvement").get<double>();
  c.ridge = j.at("ridge").get<double>();
  return c;
}

json path_config_json(const PathProbConfig& c) {
  return json{{"top_vars", c.top_vars},
              {"forest", forest_config_json(c.forest)},
              {"clip", c.clip}};
}

PathProbConfig json_path_config(const json& j) {
  PathProbConfig c;
  c.top_vars = j.at("top_vars").get<int>();
  c.forest = json_forest_config(j.at("forest"));
  c.clip = j.at("clip").get<double>();
  return c;
}

json pipeline_config_json(const PipelineConfig& c) {
  return json{{"slim", slim_config_json(c.slim)},
              {"path", path_config_json(c.path)},
              {"gamma", c.gamma},
              {"seed", c.seed},
              {"threads", c.threads},
              {"tune_depth", c.tune_depth},
              {"min_success_fraction", c.min_success_fraction}};
}

PipelineConfig json_pipeline_config(const json& j) {
  PipelineConfig c;
  c.slim = json_slim_config(j.at("slim"));
  c.path = json_path_config(j.at("path"));
  c.gamma = j.at("gamma").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  c.tune_depth = j.at("tune_depth").get<bool>();
  c.min_success_fraction = j.at("min_success_fraction").get<double>();
  return c;
}

json dataset_json(const Dataset& d) {
  return json{{"feature_names", d.feature_names},
              {"n", d.n()},
              {"p", d.p()},
              {"X", std::vector<double>(d.X.data(), d.X.data() + d.X.size())},  // column-major
              {"predictions", vec_json(d.predictions)}};
}

Dataset json_dataset(const json& j) {
  const int n = j.at("n").get<int>();
  const int p = j.at("p").get<int>();
  const auto flat = j.at("X").get<std::vector<double>>();
  if (static_cast<std::size_t>(n) * static_cast<std::size_t>(p) != flat.size())
    throw std::runtime_error("bundle: training matrix size mismatch");
  Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(flat.data(), n, p);
  Eigen::VectorXd pred = json_vec(j.at("predictions"));
  auto names = j.at("feature_names").get<std::vector<std::string>>();
  if (pred.size() == 0) return Dataset::from_matrix(std::move(X), std::move(names));
  return Dataset::from_matrix(std::move(X), std::move(pred), std::move(names));
}

}  // namespace

std::string bundle_to_json(const FittedPipeline& pipe) {
  json bank_nodes = json::array();
  for (const auto& m : pipe.bank.nodes) bank_nodes.push_back(node_models_json(m));
  json j{{"format", kFormatName},
         {"version", kBundleVersion},
         {"config", pipeline_config_json(pipe.config)},
         {"train", dataset_json(pipe.train)},
         {"tuned",
          json{{"tree", slim_tree_json(pipe.tuned.tree)},
               {"chosen_depth", pipe.tuned.chosen_depth},
               {"holdout_r2", pipe.tuned.holdout_r2}}},
         {"bank", json{{"nodes", std::move(bank_nodes)},
                       {"config", path_config_json(pipe.bank.config)},
                       {"seed", pipe.bank.seed},
                       {"n_split_nodes", pipe.bank.n_split_nodes},
                       {"n_event_models", pipe.bank.n_event_models}}},
         {"base_value", pipe.base_value}};
  return j.dump();
}

FittedPipeline bundle_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bundle: not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", std::string()) != kFormatName)
    throw std::runtime_error("bundle: unrecognized file format");
  const int version = j.value("version", -1);
  if (version != kBundleVersion)
    throw std::runtime_error("bundle: unsupported version " + std::to_string(version));

  FittedPipeline pipe;
  pipe.config = json_pipeline_config(j.at("config"));
  pipe.train = json_dataset(j.at("train"));
  const json& tuned = j.at("tuned");
  pipe.tuned.tree = json_slim_tree(tuned.at("tree"));
  pipe.tuned.chosen_depth = tuned.at("chosen_depth").get<int>();
  pipe.tuned.holdout_r2 = tuned.at("holdout_r2").get<std::vector<double>>();
  const json& bank = j.at("bank");
  for (const auto& m : bank.at("nodes")) pipe.bank.nodes.push_back(json_node_models(m));
  pipe.bank.config = json_path_config(bank.at("config"));
  pipe.bank.seed = bank.at("seed").get<std::uint64_t>();
  pipe.bank.n_split_nodes = bank.at("n_split_nodes").get<int>();
  pipe.bank.n_event_models = bank.at("n_event_models").get<int>();

  if (pipe.bank.nodes.size() != pipe.tuned.tree.nodes.size())
    throw std::runtime_error("bundle: probability models do not match the tree");
  if (!pipe.train.has_predictions())
    throw std::runtime_error("bundle: training block lacks model predictions");

  rebuild_derived(pipe);
  return pipe;
}

void save_bundle(const FittedPipeline& pipe, const std::string& path) {
  atomic_write_text(path, bundle_to_json(pipe) + "\n");
}

FittedPipeline load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open bundle file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return bundle_from_json(ss.str());
}

}  // namespace slimshap
