#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slimshap/bench.hpp"
#include "slimshap/bundle.hpp"
#include "slimshap/shapley.hpp"

using namespace slimshap;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct FitFlags {
  std::string data, pred_col, out;
  int gamma = 0;  // 0: exhaustive enumeration at query time
  int top_vars = 3;
  int knots = 10;
  int max_depth = 5;
  int min_node_size = 30;
  std::uint64_t seed = 1;
  int threads = 1;
};

PipelineConfig to_config(const FitFlags& f) {
  PipelineConfig pc;
  pc.gamma = f.gamma;
  pc.path.top_vars = f.top_vars;
  pc.slim.n_knots = f.knots;
  pc.slim.max_depth = f.max_depth;
  pc.slim.min_node_size = f.min_node_size;
  pc.seed = f.seed;
  pc.threads = f.threads;
  return pc;
}

int run_fit(const FitFlags& flags) {
  const auto t0 = Clock::now();
  const Dataset data = load_dataset(flags.data, flags.pred_col);
  const FittedPipeline pipe = fit_pipeline(data, to_config(flags));
  save_bundle(pipe, flags.out);
  const FidelityReport fid = evaluate_fidelity(pipe.tree(), data);
  std::cout << "fitted surrogate: depth " << pipe.tree().depth << ", "
            << pipe.tree().terminals.size() << " terminal(s), " << pipe.bank.n_split_nodes
            << " split node(s), fidelity R^2 " << fid.r2_fidelity << "\n"
            << "bundle written to " << flags.out << " (" << ms_since(t0) << " ms)\n";
  return 0;
}

// '# key=value ...' metadata line; the CSV loader skips it on re-read
std::string meta_line(const FittedPipeline& pipe, int n_subsets, double wall_ms,
                      std::optional<double> base = std::nullopt) {
  std::ostringstream out;
  out << "# gamma=" << pipe.effective_gamma() << " n_subsets=" << n_subsets
      << " seed=" << pipe.config.seed;
  if (base) out << " base=" << format_double(*base);
  out << " wall_ms=" << format_double(wall_ms) << '\n';
  return out.str();
}

int run_global(const std::string& bundle_path, const std::string& out, int gamma_override,
               int threads) {
  const auto t0 = Clock::now();
  FittedPipeline pipe = load_bundle(bundle_path);
  if (gamma_override >= 0) pipe.config.gamma = gamma_override;
  if (threads > 0) pipe.config.threads = threads;
  const GlobalAttribution att = compute_global_shapley(pipe);
  if (att.degenerate)
    std::cerr << "warning: constant surrogate, shares reported as zero\n";

  std::ostringstream csv;
  csv << meta_line(pipe, att.n_subsets, ms_since(t0));
  csv << "feature,phi,share_pct\n";
  for (int j = 0; j < pipe.p(); ++j)
    csv << pipe.train.feature_names[static_cast<std::size_t>(j)] << ','
        << format_double(att.phi(j)) << ',' << format_double(att.share_pct(j)) << '\n';
  atomic_write_text(out, csv.str());
  std::cout << "global attribution over " << att.n_subsets << " coalitions written to " << out
            << "\n";
  return 0;
}

int run_shap(const std::string& bundle_path, const std::string& data_path, const std::string& out,
             int gamma_override, int threads) {
  const auto t0 = Clock::now();
  FittedPipeline pipe = load_bundle(bundle_path);
  if (gamma_override >= 0) pipe.config.gamma = gamma_override;
  if (threads > 0) pipe.config.threads = threads;
  const Dataset explain = load_dataset(data_path);
  if (explain.p() != pipe.p())
    throw std::runtime_error("explain data has " + std::to_string(explain.p()) +
                             " features, the model expects " + std::to_string(pipe.p()));
  const ShapResult res = compute_shap(pipe, explain.X);

  std::ostringstream csv;
  csv << meta_line(pipe, res.n_subsets, ms_since(t0), res.base_value);
  for (int j = 0; j < pipe.p(); ++j)
    csv << pipe.train.feature_names[static_cast<std::size_t>(j)] << ',';
  csv << "reconstruction\n";
  for (Eigen::Index i = 0; i < res.phi.rows(); ++i) {
    for (int j = 0; j < pipe.p(); ++j) csv << format_double(res.phi(i, j)) << ',';
    csv << format_double(res.reconstruction(i)) << '\n';
  }
  atomic_write_text(out, csv.str());
  std::cout << "per-instance attributions for " << res.phi.rows() << " row(s) written to " << out
            << "\n";
  return 0;
}

int run_oracle(const std::string& scenario, double rho, std::uint64_t seed,
               const std::string& out) {
  ScenarioSpec spec;
  spec.kind = parse_scenario_kind(scenario);
  spec.rho = rho;
  spec.n = 10;  // shares depend on the model and covariance only
  spec.seed = seed;
  const Scenario scen = generate_scenario(spec);
  std::ostringstream csv;
  csv << "# scenario=" << scenario << " rho=" << format_double(rho) << '\n';
  csv << "feature,share_pct\n";
  for (int j = 0; j < scen.p; ++j)
    csv << scen.data.feature_names[static_cast<std::size_t>(j)] << ','
        << format_double(scen.oracle_share_pct(j)) << '\n';
  atomic_write_text(out, csv.str());
  std::cout << "analytic shares for " << scenario << " (rho=" << rho << ") written to " << out
            << "\n";
  return 0;
}

std::string strip_csv_suffix(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
    return path.substr(0, path.size() - 4);
  return path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditional-expectation attribution for black-box regression models"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "fit the surrogate and probability models");
  fit->add_option("--data", fit_flags.data, "training CSV with a prediction column")->required();
  fit->add_option("--pred-col", fit_flags.pred_col, "name of the model-prediction column")
      ->required();
  fit->add_option("--out", fit_flags.out, "bundle file to write")->required();
  fit->add_option("--gamma", fit_flags.gamma, "coalition size threshold (0: exhaustive)");
  fit->add_option("--top-vars", fit_flags.top_vars, "conditioning variables per split node");
  fit->add_option("--knots", fit_flags.knots, "spline knots per feature");
  fit->add_option("--max-depth", fit_flags.max_depth, "surrogate depth cap");
  fit->add_option("--min-node-size", fit_flags.min_node_size, "row floor for split children");
  fit->add_option("--seed", fit_flags.seed, "rng seed");
  fit->add_option("--threads", fit_flags.threads, "worker threads");

  std::string bundle_path, data_path, out_path;
  int gamma_override = -1, threads = 0;
  auto* global = app.add_subcommand("global", "global attribution shares from a fitted bundle");
  global->add_option("--bundle", bundle_path, "fitted bundle")->required();
  global->add_option("--out", out_path, "output CSV")->required();
  global->add_option("--gamma", gamma_override, "override the stored coalition threshold");
  global->add_option("--threads", threads, "worker threads");

  auto* shap = app.add_subcommand("shap", "per-instance attributions from a fitted bundle");
  shap->add_option("--bundle", bundle_path, "fitted bundle")->required();
  shap->add_option("--data", data_path, "CSV of rows to explain")->required();
  shap->add_option("--out", out_path, "output CSV")->required();
  shap->add_option("--gamma", gamma_override, "override the stored coalition threshold");
  shap->add_option("--threads", threads, "worker threads");

  std::string scenario = "linear";
  double rho = 0.0;
  std::uint64_t seed = 1;
  auto* oracle = app.add_subcommand("oracle", "analytic attribution shares for a scenario");
  oracle->add_option("--scenario", scenario, "linear | nonlinear | interaction | binary")
      ->required();
  oracle->add_option("--rho", rho, "within-block correlation in [0,1)");
  oracle->add_option("--seed", seed, "rng seed");
  oracle->add_option("--out", out_path, "output CSV")->required();

  BenchConfig bench;
  auto add_bench_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "output CSV")->required();
    cmd->add_option("--seed", bench.seed, "rng seed");
    cmd->add_option("--threads", bench.threads, "worker threads");
  };
  auto* bench_acc = app.add_subcommand("bench-accuracy",
                                       "attribution error of every method across scenarios");
  add_bench_common(bench_acc);
  bench_acc->add_option("--n", bench.n_linear, "rows for the 13-feature scenarios");
  bench_acc->add_option("--gamma", bench.gamma_13, "threshold for the 13-feature scenarios");

  double bench_rho = 0.5;
  auto* bench_gamma = app.add_subcommand("bench-gamma",
                                         "accuracy/cost trade-off of the coalition threshold");
  add_bench_common(bench_gamma);
  bench_gamma->add_option("--scenario", scenario, "scenario kind");
  bench_gamma->add_option("--rho", bench_rho, "within-block correlation");

  int n_explain = 1000;
  std::string scatter_out;
  auto* bench_shap = app.add_subcommand("bench-shap",
                                        "per-instance attribution quality on the interaction scenario");
  add_bench_common(bench_shap);
  bench_shap->add_option("--n-explain", n_explain, "explained rows per correlation");
  bench_shap->add_option("--scatter-out", scatter_out, "per-pair CSV (default <out>_scatter.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // clean help/version exits keep 0
  }

  try {
    if (fit->parsed()) return run_fit(fit_flags);
    if (global->parsed()) return run_global(bundle_path, out_path, gamma_override, threads);
    if (shap->parsed()) return run_shap(bundle_path, data_path, out_path, gamma_override, threads);
    if (oracle->parsed()) return run_oracle(scenario, rho, seed, out_path);
    if (bench_acc->parsed()) {
      bench.n_binary = std::min(bench.n_binary, bench.n_linear);
      const AccuracyReport report = run_accuracy_benchmark(bench);
      write_accuracy_csv(report, out_path);
      write_accuracy_plots(report, strip_csv_suffix(out_path));
      std::cout << "accuracy benchmark (" << report.cells.size() << " cells, "
                << report.total_seconds << " s) written to " << out_path << "\n";
      return 0;
    }
    if (bench_gamma->parsed()) {
      const GammaReport report = run_gamma_sweep(parse_scenario_kind(scenario), bench_rho, bench);
      write_gamma_csv(report, out_path);
      write_gamma_plot(report, strip_csv_suffix(out_path) + ".svg");
      std::cout << "threshold sweep (" << report.rows.size() << " levels) written to " << out_path
                << "\n";
      return 0;
    }
    if (bench_shap->parsed()) {
      const ShapReport report = run_shap_benchmark(bench, n_explain);
      write_shap_csv(report, out_path);
      if (scatter_out.empty()) scatter_out = strip_csv_suffix(out_path) + "_scatter.csv";
      write_shap_scatter_csv(report, scatter_out);
      double mid_rho = bench.rhos[bench.rhos.size() / 2];
      write_shap_plot(report, mid_rho, strip_csv_suffix(out_path) + ".svg");
      std::cout << "per-instance benchmark written to " << out_path << " and " << scatter_out
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
