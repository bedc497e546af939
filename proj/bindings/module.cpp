#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "slimshap/bundle.hpp"
#include "slimshap/oracle.hpp"
#include "slimshap/scenario.hpp"
#include "slimshap/shapley.hpp"

namespace py = pybind11;
using namespace slimshap;

namespace {

std::shared_ptr<FittedPipeline> fit_py(const Eigen::MatrixXd& X, const Eigen::VectorXd& predictions,
                                       std::vector<std::string> feature_names, int gamma,
                                       std::uint64_t seed, int threads, int max_depth, int knots,
                                       int top_vars, int min_node_size, bool tune_depth) {
  PipelineConfig pc;
  pc.gamma = gamma;
  pc.seed = seed;
  pc.threads = threads;
  pc.slim.max_depth = max_depth;
  pc.slim.n_knots = knots;
  pc.slim.min_node_size = min_node_size;
  pc.path.top_vars = top_vars;
  pc.tune_depth = tune_depth;
  const Dataset data = Dataset::from_matrix(X, predictions, std::move(feature_names));
  return std::make_shared<FittedPipeline>(fit_pipeline(data, pc));
}

py::dict global_py(FittedPipeline& pipe, int gamma) {
  if (gamma >= 0) pipe.config.gamma = gamma;
  const GlobalAttribution att = compute_global_shapley(pipe);
  py::dict out;
  out["phi"] = att.phi;
  out["share_pct"] = att.share_pct;
  out["total"] = att.total;
  out["degenerate"] = att.degenerate;
  out["gamma"] = att.gamma;
  out["n_subsets"] = att.n_subsets;
  return out;
}

py::dict shap_py(FittedPipeline& pipe, const Eigen::MatrixXd& X, int gamma) {
  if (gamma >= 0) pipe.config.gamma = gamma;
  const ShapResult res = compute_shap(pipe, X);
  py::dict out;
  out["phi"] = res.phi;
  out["base_value"] = res.base_value;
  out["reconstruction"] = res.reconstruction;
  out["gamma"] = res.gamma;
  out["n_subsets"] = res.n_subsets;
  return out;
}

std::vector<std::vector<int>> subsets_py(int p, int gamma) {
  std::vector<std::vector<int>> out;
  for (const auto& u : threshold_subsets(p, gamma)) out.push_back(u.members());
  return out;
}

Eigen::VectorXd solve_wls_py(const std::vector<std::vector<int>>& subsets,
                             const Eigen::VectorXd& values, int p) {
  std::vector<FeatureSubset> family;
  family.reserve(subsets.size());
  for (const auto& members : subsets) family.push_back(FeatureSubset::from_members(members, p));
  return solve_wls(family, values, p);
}

py::dict scenario_py(const std::string& kind, double rho, int n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.kind = parse_scenario_kind(kind);
  spec.rho = rho;
  spec.n = n;
  spec.seed = seed;
  const Scenario scen = generate_scenario(spec);
  py::dict out;
  out["X"] = scen.data.X;
  out["predictions"] = scen.data.predictions;
  out["feature_names"] = scen.data.feature_names;
  out["sigma"] = scen.sigma;
  out["beta"] = scen.beta;
  out["oracle_share_pct"] = scen.oracle_share_pct;
  return out;
}

}  // namespace

PYBIND11_MODULE(_slimshap, m) {
  m.doc() = "conditional-expectation attribution for black-box regression models";

  py::class_<FittedPipeline, std::shared_ptr<FittedPipeline>>(m, "Pipeline")
      .def_property_readonly("p", &FittedPipeline::p)
      .def_property_readonly("depth", [](const FittedPipeline& s) { return s.tree().depth; })
      .def_property_readonly(
          "n_terminals", [](const FittedPipeline& s) { return s.tree().terminals.size(); })
      .def_property_readonly("base_value", [](const FittedPipeline& s) { return s.base_value; })
      .def_property_readonly("feature_names",
                             [](const FittedPipeline& s) { return s.train.feature_names; })
      .def_property_readonly("fidelity_r2",
                             [](const FittedPipeline& s) { return s.tree().train_r2; })
      .def_property_readonly("gamma", &FittedPipeline::effective_gamma)
      .def("predict",
           [](const FittedPipeline& s, const Eigen::MatrixXd& X) {
             return predict_slim(s.tree(), X);
           },
           py::arg("X"), "surrogate predictions")
      .def("global_shapley", &global_py, py::arg("gamma") = -1,
           "global attribution; phi sums to the explained variance")
      .def("shap", &shap_py, py::arg("X"), py::arg("gamma") = -1,
           "per-instance attributions of prediction minus base value")
      .def("conditional_expectation",
           [](const FittedPipeline& s, const std::vector<int>& members, const Eigen::MatrixXd& X) {
             return conditional_expectation(s, FeatureSubset::from_members(members, s.p()), X);
           },
           py::arg("features"), py::arg("X"),
           "estimated conditional expectation of the surrogate given the listed features")
      .def("save", [](const FittedPipeline& s, const std::string& path) { save_bundle(s, path); },
           py::arg("path"));

  m.def("fit", &fit_py, py::arg("X"), py::arg("predictions"),
        py::arg("feature_names") = std::vector<std::string>{}, py::arg("gamma") = 0,
        py::arg("seed") = 1, py::arg("threads") = 1, py::arg("max_depth") = 5,
        py::arg("knots") = 10, py::arg("top_vars") = 3, py::arg("min_node_size") = 30,
        py::arg("tune_depth") = true,
        "fit the surrogate tree and its probability models against model predictions");
  m.def("load", [](const std::string& path) {
          return std::make_shared<FittedPipeline>(load_bundle(path));
        },
        py::arg("path"), "reload a saved pipeline; attributions match bit for bit");

  m.def("threshold_subsets", &subsets_py, py::arg("p"), py::arg("gamma"),
        "coalitions with |u| or |complement| within the threshold, ordered by (size, members)");
  m.def("max_gamma", &max_gamma, py::arg("p"));
  m.def("solve_wls", &solve_wls_py, py::arg("subsets"), py::arg("values"), py::arg("p"),
        "attributions from (coalition, value) samples; exact on the exhaustive family");
  m.def("exact_shapley", &exact_shapley_brute, py::arg("values"), py::arg("p"),
        "direct summation over all coalitions; values follow threshold_subsets(p, max_gamma(p))");
  m.def("linear_oracle_shares", &linear_oracle_shares, py::arg("beta"), py::arg("sigma"),
        "analytic global shares for a linear model on Gaussian features");
  m.def("generate_scenario", &scenario_py, py::arg("kind"), py::arg("rho") = 0.0,
        py::arg("n") = 2000, py::arg("seed") = 1,
        "synthetic benchmark scenario with its analytic reference");
}
