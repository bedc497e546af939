#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slimshap/bench.hpp"
#include "slimshap/bundle.hpp"
#include "slimshap/rng.hpp"
#include "slimshap/svg_plot.hpp"

using namespace slimshap;

namespace {

// piecewise-linear response: the surrogate must split, so serialization covers
// a populated probability-model bank
Dataset regime_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) X(i, j) = rng.gauss();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y(i) = X(i, 0) < 0.0 ? 2.0 + X(i, 1) : -1.0 + 0.5 * X(i, 1);
  return Dataset::from_matrix(X, y);
}

FittedPipeline fit_regime_pipeline() {
  PipelineConfig pc;
  pc.seed = 5;
  pc.slim.max_depth = 2;
  return fit_pipeline(regime_data(400, 11), pc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::string temp_path(const char* name) {
  return std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/" + name;
}

BenchConfig tiny_bench() {
  BenchConfig bc;
  bc.rhos = {0.0, 0.5};
  bc.n_linear = 160;
  bc.n_binary = 120;
  bc.n_interaction = 160;
  bc.gamma_13 = 1;
  bc.n_explain = 60;
  bc.n_marginal_instances = 80;
  bc.n_kernel_instances = 60;
  bc.seed = 31;
  return bc;
}

}  // namespace

TEST_CASE("bundle json round trip preserves every artifact bit for bit") {
  const FittedPipeline pipe = fit_regime_pipeline();
  REQUIRE(pipe.tree().terminals.size() > 1);  // bank is non-trivial
  REQUIRE(pipe.bank.n_split_nodes > 0);

  const std::string text = bundle_to_json(pipe);
  const FittedPipeline back = bundle_from_json(text);

  CHECK(back.tree().nodes.size() == pipe.tree().nodes.size());
  CHECK(back.tree().depth == pipe.tree().depth);
  CHECK(back.tuned.chosen_depth == pipe.tuned.chosen_depth);
  CHECK(back.bank.n_split_nodes == pipe.bank.n_split_nodes);
  CHECK(back.bank.n_event_models == pipe.bank.n_event_models);
  CHECK(back.base_value == pipe.base_value);
  for (std::size_t i = 0; i < pipe.tree().nodes.size(); ++i) {
    const auto& a = pipe.tree().nodes[i];
    const auto& b = back.tree().nodes[i];
    CHECK(a.feature == b.feature);
    CHECK(a.threshold == b.threshold);  // exact: shortest round-trip doubles
    REQUIRE(a.gam.beta.size() == b.gam.beta.size());
    CHECK((a.gam.beta - b.gam.beta).cwiseAbs().maxCoeff() == 0.0);
  }

  // serializing the reloaded pipeline reproduces the byte stream
  CHECK(bundle_to_json(back) == text);
}

TEST_CASE("attributions from a reloaded bundle match the original exactly") {
  const FittedPipeline pipe = fit_regime_pipeline();
  const std::string text = bundle_to_json(pipe);
  const FittedPipeline back = bundle_from_json(text);

  const GlobalAttribution g1 = compute_global_shapley(pipe);
  const GlobalAttribution g2 = compute_global_shapley(back);
  REQUIRE(g1.share_pct.size() == g2.share_pct.size());
  CHECK((g1.share_pct - g2.share_pct).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd explain = pipe.train.X.topRows(25);
  const ShapResult s1 = compute_shap(pipe, explain);
  const ShapResult s2 = compute_shap(back, explain);
  CHECK((s1.phi - s2.phi).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s1.base_value == s2.base_value);
}

TEST_CASE("bundle file round trip and load failures") {
  const FittedPipeline pipe = fit_regime_pipeline();
  const std::string path = temp_path("bundle_roundtrip.json");
  save_bundle(pipe, path);
  const std::string text = slurp(path);
  CHECK(text.back() == '\n');

  const FittedPipeline back = load_bundle(path);
  CHECK(bundle_to_json(back) + "\n" == text);
  std::remove(path.c_str());

  CHECK_THROWS_WITH_AS(load_bundle("/nonexistent/bundle.json"), doctest::Contains("cannot open"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(bundle_from_json("not json at all"), doctest::Contains("not valid JSON"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(bundle_from_json("{\"format\":\"something-else\",\"version\":1}"),
                       doctest::Contains("unrecognized"), std::runtime_error);
  std::string wrong = bundle_to_json(pipe);
  const auto pos = wrong.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  wrong.replace(pos, std::string("\"version\":1").size(), "\"version\":99");
  CHECK_THROWS_WITH_AS(bundle_from_json(wrong), doctest::Contains("unsupported version"),
                       std::runtime_error);
}

TEST_CASE("accuracy benchmark covers every scenario, correlation and method") {
  const BenchConfig bc = tiny_bench();
  const AccuracyReport report = run_accuracy_benchmark(bc);

  // 4 scenarios x 2 correlations x {oracle, conditional, mean_abs, marginal, kernel}
  REQUIRE(report.cells.size() == 4 * 2 * 5);
  CHECK(report.feature_names_13.size() == 13);
  CHECK(report.feature_names_6.size() == 6);
  for (const auto& cell : report.cells) {
    INFO(cell.scenario, " rho=", cell.rho, " ", cell.method);
    CHECK(!cell.failed);
    CHECK(cell.share_pct.sum() == doctest::Approx(100.0).epsilon(1e-6));
    CHECK(std::isfinite(cell.error));
    CHECK(cell.wall_ms >= 0.0);
  }

  // at this tiny sample the estimate is rough, but a broken estimator lands
  // near or above 1; full-scale accuracy is gated elsewhere
  for (const auto& cell : report.cells)
    if (cell.method == "conditional" && cell.scenario == "linear") CHECK(cell.error < 0.5);

  const std::string path = temp_path("accuracy.csv");
  write_accuracy_csv(report, path);
  const auto lines = split_lines(slurp(path));
  REQUIRE(lines.size() == 1 + (3 * 13 + 1 * 6) * 2 * 5);
  CHECK(lines[0] == "scenario,rho,method,feature,share_pct,error,wall_ms");
  int conditional_rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream ss(lines[i]);
    std::string scenario, rho, method, feature, share, error, wall;
    std::getline(ss, scenario, ',');
    std::getline(ss, rho, ',');
    std::getline(ss, method, ',');
    std::getline(ss, feature, ',');
    std::getline(ss, share, ',');
    std::getline(ss, error, ',');
    std::getline(ss, wall, ',');
    CHECK(std::isfinite(std::stod(share)));
    CHECK(std::isfinite(std::stod(wall)));
    if (method == "conditional") ++conditional_rows;
  }
  CHECK(conditional_rows == (3 * 13 + 6) * 2);
  std::remove(path.c_str());

  const std::string stem = temp_path("accuracy_plot");
  write_accuracy_plots(report, stem);
  for (const char* kind : {"linear", "nonlinear", "interaction", "binary"}) {
    const std::string svg = slurp(stem + "_" + kind + ".svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("conditional") != std::string::npos);
    std::remove((stem + "_" + kind + ".svg").c_str());
  }
}

TEST_CASE("gamma sweep walks every threshold and ends at the exhaustive family") {
  BenchConfig bc = tiny_bench();
  bc.n_interaction = 200;
  const GammaReport report = run_gamma_sweep(ScenarioKind::interaction, 0.4, bc);

  REQUIRE(report.rows.size() == 3);  // ceil((6+1)/2)
  CHECK(report.rows[0].n_subsets == 14);
  CHECK(report.rows[1].n_subsets == 44);
  CHECK(report.rows[2].n_subsets == 64);
  CHECK(report.rows[2].error_vs_full == 0.0);  // compared against itself
  for (const auto& row : report.rows) {
    CHECK(row.share_pct.sum() == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(std::isfinite(row.error_vs_oracle));
    CHECK(row.wall_ms > 0.0);
  }

  const std::string path = temp_path("gamma.csv");
  write_gamma_csv(report, path);
  const auto lines = split_lines(slurp(path));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "gamma,n_subsets,wall_ms,error_vs_full,error_vs_oracle");
  CHECK(lines[1].rfind("1,14,", 0) == 0);
  CHECK(lines[3].rfind("3,64,", 0) == 0);
  std::remove(path.c_str());

  const std::string svg_path = temp_path("gamma.svg");
  write_gamma_plot(report, svg_path);
  const std::string svg = slurp(svg_path);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("vs exhaustive") != std::string::npos);
  std::remove(svg_path.c_str());
}

TEST_CASE("per-instance benchmark correlates with the exact reference") {
  BenchConfig bc = tiny_bench();
  bc.rhos = {0.0};
  bc.n_interaction = 300;
  const ShapReport report = run_shap_benchmark(bc, 80);

  REQUIRE(report.cells.size() == 6);
  REQUIRE(report.pairs.size() == 6 * 80);
  for (const auto& cell : report.cells) {
    INFO("feature ", cell.feature);
    CHECK(std::isfinite(cell.rmse));
    // features with real attribution mass must track the reference; the two
    // null features may have near-constant reference columns
    if (cell.feature == 0 || cell.feature == 1) {
      REQUIRE(std::isfinite(cell.pearson));
      CHECK(cell.pearson > 0.6);
    }
  }

  const std::string path = temp_path("shap.csv");
  write_shap_csv(report, path);
  auto lines = split_lines(slurp(path));
  REQUIRE(lines.size() == 1 + 6);
  CHECK(lines[0] == "rho,feature,pearson,rmse");
  std::remove(path.c_str());

  const std::string scatter_path = temp_path("shap_scatter.csv");
  write_shap_scatter_csv(report, scatter_path);
  lines = split_lines(slurp(scatter_path));
  REQUIRE(lines.size() == 1 + 6 * 80);
  CHECK(lines[0] == "rho,feature,theoretical,estimated");
  std::remove(scatter_path.c_str());

  const std::string svg_path = temp_path("shap.svg");
  write_shap_plot(report, 0.0, svg_path);
  const std::string svg = slurp(svg_path);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("exact = estimated") != std::string::npos);
  std::remove(svg_path.c_str());
}

TEST_CASE("svg renderer survives awkward inputs") {
  PlotSpec spec;
  spec.title = "a < b & c";
  spec.x_label = "x";
  spec.y_label = "y";
  PlotSeries s;
  s.label = "series";
  s.x = {0.0, 1.0, 2.0, 3.0};
  s.y = {1.0, std::nan(""), 2.0, 3.0};  // line must break, not vanish
  spec.series.push_back(s);
  const std::string svg = render_svg(spec);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);

  PlotSpec empty;
  empty.title = "empty";
  CHECK(render_svg(empty).rfind("<svg", 0) == 0);  // no series, still a valid file

  PlotSpec flat;
  PlotSeries fs;
  fs.x = {1.0, 2.0};
  fs.y = {5.0, 5.0};  // zero vertical span must not divide by zero
  flat.series.push_back(fs);
  const std::string fsvg = render_svg(flat);
  CHECK(fsvg.find("</svg>") != std::string::npos);
  CHECK(fsvg.find("nan") == std::string::npos);
}

TEST_CASE("scenario shapes drive the pipeline defaults") {
  BenchConfig bc;
  bc.gamma_13 = 2;
  CHECK(bench_pipeline_config(ScenarioKind::linear, bc).gamma == 2);
  CHECK(bench_pipeline_config(ScenarioKind::nonlinear, bc).gamma == 2);
  CHECK(bench_pipeline_config(ScenarioKind::binary, bc).gamma == 2);
  CHECK(bench_pipeline_config(ScenarioKind::interaction, bc).gamma == 0);
}
