#include "slimshap/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "slimshap/baselines.hpp"
#include "slimshap/rng.hpp"
#include "slimshap/shapley.hpp"
#include "slimshap/svg_plot.hpp"

namespace slimshap {

namespace {

constexpr std::uint64_t kScenarioTag = 0x7363656eu;
constexpr std::uint64_t kMarginalTag = 0x6d617267u;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Eigen::VectorXd to_share_pct(const Eigen::VectorXd& phi) {
  const double total = phi.sum();
  if (!(std::abs(total) > 1e-12 * std::max(1.0, phi.cwiseAbs().maxCoeff())))
    throw std::runtime_error("attribution total vanishes; shares undefined");
  return phi * (100.0 / total);
}

std::uint64_t scenario_seed(const BenchConfig& config, int kind_idx, int rho_idx) {
  return Rng(config.seed).derive(kScenarioTag, kind_idx, rho_idx).seed();
}

int scenario_rows(ScenarioKind kind, const BenchConfig& config) {
  switch (kind) {
    case ScenarioKind::binary: return config.n_binary;
    case ScenarioKind::interaction: return config.n_interaction;
    default: return config.n_linear;
  }
}

}  // namespace

PipelineConfig bench_pipeline_config(ScenarioKind kind, const BenchConfig& config) {
  PipelineConfig pc;
  pc.gamma = kind == ScenarioKind::interaction ? 0 : config.gamma_13;  // 0: exhaustive
  pc.threads = config.threads;
  pc.seed = config.seed;
  return pc;
}

AccuracyReport run_accuracy_benchmark(const BenchConfig& config) {
  const auto bench_t0 = Clock::now();
  AccuracyReport report;
  const ScenarioKind kinds[] = {ScenarioKind::linear, ScenarioKind::nonlinear,
                                ScenarioKind::interaction, ScenarioKind::binary};
  for (int ki = 0; ki < 4; ++ki) {
    const ScenarioKind kind = kinds[ki];
    const std::string kind_name = to_string(kind);
    for (std::size_t ri = 0; ri < config.rhos.size(); ++ri) {
      const double rho = config.rhos[ri];
      Eigen::VectorXd oracle;  // set once the scenario exists
      auto add_cell = [&](const std::string& method, auto&& body, double shared_ms = -1.0) {
        AccuracyCell cell;
        cell.scenario = kind_name;
        cell.rho = rho;
        cell.method = method;
        const auto t0 = Clock::now();
        try {
          cell.share_pct = body();
          cell.error = method == "oracle" ? 0.0 : relative_error(cell.share_pct, oracle);
        } catch (const std::exception&) {
          cell.failed = true;
          cell.error = kNan;
        }
        cell.wall_ms = shared_ms >= 0.0 ? shared_ms : ms_since(t0);
        report.cells.push_back(std::move(cell));
      };

      // scenario + analytic reference
      ScenarioSpec spec;
      spec.kind = kind;
      spec.rho = rho;
      spec.n = scenario_rows(kind, config);
      spec.seed = scenario_seed(config, ki, static_cast<int>(ri));
      const auto scen_t0 = Clock::now();
      Scenario scen;
      try {
        scen = generate_scenario(spec);
      } catch (const std::exception&) {
        AccuracyCell cell;
        cell.scenario = kind_name, cell.rho = rho, cell.method = "oracle";
        cell.failed = true, cell.error = kNan;
        report.cells.push_back(std::move(cell));
        continue;
      }
      const double scen_ms = ms_since(scen_t0);
      auto& names = kind == ScenarioKind::interaction ? report.feature_names_6
                                                      : report.feature_names_13;
      if (names.empty()) names = scen.data.feature_names;
      oracle = scen.oracle_share_pct;
      add_cell("oracle", [&] { return oracle; }, scen_ms);

      // surrogate + conditional values; per-instance attributions ride along
      const int n_exp = std::min(config.n_explain, scen.data.n());
      const Eigen::MatrixXd explain = scen.data.X.topRows(n_exp);
      AttributionResult att;
      bool cond_ok = false;
      {
        AccuracyCell cell;
        cell.scenario = kind_name, cell.rho = rho, cell.method = "conditional";
        const auto t0 = Clock::now();
        try {
          const FittedPipeline pipe = fit_pipeline(scen.data, bench_pipeline_config(kind, config));
          att = compute_attributions(pipe, explain);
          if (att.global.degenerate) throw std::runtime_error("degenerate attribution");
          cell.share_pct = att.global.share_pct;
          cell.error = relative_error(cell.share_pct, oracle);
          cond_ok = true;
        } catch (const std::exception&) {
          cell.failed = true;
          cell.error = kNan;
        }
        cell.wall_ms = ms_since(t0);
        report.cells.push_back(std::move(cell));
      }
      {
        // readout of the same sweep: mean absolute per-instance attribution
        AccuracyCell cell;
        cell.scenario = kind_name, cell.rho = rho, cell.method = "mean_abs";
        cell.wall_ms = report.cells.back().wall_ms;  // shares the conditional computation
        if (cond_ok) {
          cell.share_pct = mean_abs_shares(att.shap.phi);
          cell.error = relative_error(cell.share_pct, oracle);
        } else {
          cell.failed = true;
          cell.error = kNan;
        }
        report.cells.push_back(std::move(cell));
      }

      const auto family = threshold_subsets(
          scen.p, kind == ScenarioKind::interaction ? max_gamma(scen.p) : config.gamma_13);
      const ModelFn model = [&scen](const Eigen::MatrixXd& rows) { return scen.predict(rows); };

      add_cell("marginal", [&] {
        MarginalConfig mc;
        mc.seed = Rng(config.seed).derive(kMarginalTag, ki, static_cast<int>(ri)).seed();
        MarginalValues mv(model, scen.data.X, mc);
        const int n_inst = std::min(config.n_marginal_instances, scen.data.n());
        return to_share_pct(marginal_global_phi(mv, family, scen.data.X.topRows(n_inst), scen.p,
                                                config.threads));
      });

      add_cell("kernel", [&] {
        KernelCE kce(scen.data.X, scen.data.predictions, KernelCEConfig{});
        const int n_inst = std::min(config.n_kernel_instances, scen.data.n());
        return to_share_pct(kernel_global_phi(kce, family, scen.data.X.topRows(n_inst), scen.p,
                                              config.threads));
      });
    }
  }
  report.total_seconds = ms_since(bench_t0) / 1000.0;
  return report;
}

void write_accuracy_csv(const AccuracyReport& report, const std::string& path) {
  std::ostringstream out;
  out << "scenario,rho,method,feature,share_pct,error,wall_ms\n";
  for (const auto& cell : report.cells) {
    const auto& names = cell.scenario == "interaction" ? report.feature_names_6
                                                       : report.feature_names_13;
    const int p = static_cast<int>(names.size());
    // p == 0 only when generating the scenario itself failed: keep one row
    for (int j = 0; j < std::max(p, 1); ++j) {
      out << cell.scenario << ',' << format_double(cell.rho) << ',' << cell.method << ','
          << (p > 0 ? names[static_cast<std::size_t>(j)] : std::string("all")) << ',';
      if (cell.failed || cell.share_pct.size() != p) out << "nan";
      else out << format_double(cell.share_pct(j));
      out << ',';
      if (std::isnan(cell.error)) out << "nan";
      else out << format_double(cell.error);
      out << ',' << format_double(cell.wall_ms) << '\n';
    }
  }
  atomic_write_text(path, out.str());
}

void write_accuracy_plots(const AccuracyReport& report, const std::string& stem) {
  const char* methods[] = {"conditional", "mean_abs", "marginal", "kernel"};
  for (const std::string scenario : {"linear", "nonlinear", "interaction", "binary"}) {
    PlotSpec spec;
    spec.title = "attribution error vs correlation — " + scenario;
    spec.x_label = "rho";
    spec.y_label = "relative squared error";
    for (const char* m : methods) {
      PlotSeries s;
      s.label = m;
      for (const auto& cell : report.cells)
        if (cell.scenario == scenario && cell.method == m) {
          s.x.push_back(cell.rho);
          s.y.push_back(cell.failed ? kNan : cell.error);
        }
      if (!s.x.empty()) spec.series.push_back(std::move(s));
    }
    if (!spec.series.empty()) write_svg(spec, stem + "_" + scenario + ".svg");
  }
}

GammaReport run_gamma_sweep(ScenarioKind kind, double rho, const BenchConfig& config) {
  GammaReport report;
  report.scenario = to_string(kind);
  report.rho = rho;

  ScenarioSpec spec;
  spec.kind = kind;
  spec.rho = rho;
  spec.n = scenario_rows(kind, config);
  spec.seed = scenario_seed(config, 900, 0);
  const Scenario scen = generate_scenario(spec);

  PipelineConfig pc = bench_pipeline_config(kind, config);
  pc.gamma = 0;
  FittedPipeline pipe = fit_pipeline(scen.data, pc);  // refit once, swept per threshold
  const Eigen::MatrixXd no_explain(0, scen.p);

  const int g_max = max_gamma(scen.p);
  std::vector<Eigen::VectorXd> shares(static_cast<std::size_t>(g_max) + 1);
  for (int g = 1; g <= g_max; ++g) {
    GammaRow row;
    row.gamma = g;
    pipe.config.gamma = g;
    const auto t0 = Clock::now();
    const AttributionResult att = compute_attributions(pipe, no_explain);
    row.wall_ms = ms_since(t0);
    row.n_subsets = att.global.n_subsets;
    row.share_pct = att.global.share_pct;
    shares[static_cast<std::size_t>(g)] = row.share_pct;
    row.error_vs_oracle = relative_error(row.share_pct, scen.oracle_share_pct);
    report.rows.push_back(std::move(row));
  }
  for (auto& row : report.rows)
    row.error_vs_full = relative_error(row.share_pct, shares[static_cast<std::size_t>(g_max)]);
  return report;
}

void write_gamma_csv(const GammaReport& report, const std::string& path) {
  std::ostringstream out;
  out << "gamma,n_subsets,wall_ms,error_vs_full,error_vs_oracle\n";
  for (const auto& row : report.rows)
    out << row.gamma << ',' << row.n_subsets << ',' << format_double(row.wall_ms) << ','
        << format_double(row.error_vs_full) << ',' << format_double(row.error_vs_oracle) << '\n';
  atomic_write_text(path, out.str());
}

void write_gamma_plot(const GammaReport& report, const std::string& path) {
  PlotSpec spec;
  spec.title = "coalition threshold trade-off — " + report.scenario;
  spec.x_label = "gamma";
  spec.y_label = "relative squared error";
  PlotSeries vs_full{"vs exhaustive", {}, {}, false}, vs_oracle{"vs analytic", {}, {}, false};
  for (const auto& row : report.rows) {
    vs_full.x.push_back(row.gamma), vs_full.y.push_back(row.error_vs_full);
    vs_oracle.x.push_back(row.gamma), vs_oracle.y.push_back(row.error_vs_oracle);
  }
  spec.series = {std::move(vs_full), std::move(vs_oracle)};
  write_svg(spec, path);
}

ShapReport run_shap_benchmark(const BenchConfig& config, int n_explain) {
  ShapReport report;
  for (std::size_t ri = 0; ri < config.rhos.size(); ++ri) {
    const double rho = config.rhos[ri];
    ScenarioSpec spec;
    spec.kind = ScenarioKind::interaction;
    spec.rho = rho;
    spec.n = config.n_interaction;
    spec.seed = scenario_seed(config, 901, static_cast<int>(ri));
    const Scenario scen = generate_scenario(spec);

    const int n_exp = std::min(n_explain, scen.data.n());
    report.n_explain = n_exp;
    const Eigen::MatrixXd explain = scen.data.X.topRows(n_exp);

    const FittedPipeline pipe =
        fit_pipeline(scen.data, bench_pipeline_config(ScenarioKind::interaction, config));
    const ShapResult est = compute_shap(pipe, explain);
    const Eigen::MatrixXd theo = theoretical_shap(scen.quad, scen.sigma, explain);

    for (int j = 0; j < scen.p; ++j) {
      ShapCell cell;
      cell.rho = rho;
      cell.feature = j;
      const Eigen::VectorXd a = theo.col(j), b = est.phi.col(j);
      const Eigen::VectorXd ca = (a.array() - a.mean()).matrix();
      const Eigen::VectorXd cb = (b.array() - b.mean()).matrix();
      const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
      cell.pearson = denom > 1e-12 ? ca.dot(cb) / denom : kNan;
      cell.rmse = std::sqrt((a - b).squaredNorm() / static_cast<double>(n_exp));
      report.cells.push_back(cell);
      for (int i = 0; i < n_exp; ++i)
        report.pairs.push_back({rho, j, theo(i, j), est.phi(i, j)});
    }
  }
  return report;
}

void write_shap_csv(const ShapReport& report, const std::string& path) {
  std::ostringstream out;
  out << "rho,feature,pearson,rmse\n";
  for (const auto& cell : report.cells) {
    out << format_double(cell.rho) << ',' << cell.feature << ',';
    if (std::isnan(cell.pearson)) out << "nan";
    else out << format_double(cell.pearson);
    out << ',' << format_double(cell.rmse) << '\n';
  }
  atomic_write_text(path, out.str());
}

void write_shap_scatter_csv(const ShapReport& report, const std::string& path) {
  std::ostringstream out;
  out << "rho,feature,theoretical,estimated\n";
  for (const auto& pr : report.pairs)
    out << format_double(pr.rho) << ',' << pr.feature << ',' << format_double(pr.theoretical)
        << ',' << format_double(pr.estimated) << '\n';
  atomic_write_text(path, out.str());
}

void write_shap_plot(const ShapReport& report, double rho, const std::string& path) {
  PlotSpec spec;
  std::ostringstream title;
  title << "per-instance attributions, estimated vs exact (rho = " << rho << ")";
  spec.title = title.str();
  spec.x_label = "exact attribution";
  spec.y_label = "estimated attribution";
  int p = 0;
  for (const auto& pr : report.pairs) p = std::max(p, pr.feature + 1);
  double lo = 0.0, hi = 0.0;
  for (int j = 0; j < p; ++j) {
    PlotSeries s;
    s.label = "x" + std::to_string(j + 1);
    s.points_only = true;
    for (const auto& pr : report.pairs) {
      if (pr.rho != rho || pr.feature != j) continue;
      s.x.push_back(pr.theoretical), s.y.push_back(pr.estimated);
      lo = std::min({lo, pr.theoretical, pr.estimated});
      hi = std::max({hi, pr.theoretical, pr.estimated});
    }
    if (!s.x.empty()) spec.series.push_back(std::move(s));
  }
  PlotSeries diag{"exact = estimated", {lo, hi}, {lo, hi}, false};
  spec.series.push_back(std::move(diag));
  write_svg(spec, path);
}

}  // namespace slimshap
