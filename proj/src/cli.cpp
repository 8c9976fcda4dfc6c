#include "socse/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <random>
#include <sstream>

#include "socse/envelope.hpp"
#include "socse/errors.hpp"
#include "socse/polynomial.hpp"

namespace socse {

namespace {

using Json = nlohmann::ordered_json;

// Uniform in [-1, 1) from the raw 64-bit stream, so output does not depend on
// the standard library's distribution implementation.
double uniform_pm1(std::mt19937_64& gen) {
  return 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

Json report_json(const SolveReport& r) {
  return {{"status", std::string(to_string(r.status))},
          {"iterations", r.iterations},
          {"qp_iterations", r.qp_iterations},
          {"elastic_steps", r.elastic_steps},
          {"bfgs_resets", r.bfgs_resets},
          {"hessian_refreshes", r.hessian_refreshes},
          {"objective", r.objective},
          {"max_eq_residual", r.max_eq_residual},
          {"max_ineq_violation", r.max_ineq_violation},
          {"stationarity", r.stationarity},
          {"complementarity", r.complementarity},
          {"wall_time_s", r.wall_time_s}};
}

std::string resolve_method(const std::string& method, int degree, int nodes) {
  std::string label = method.empty() ? "SOCSE" : method;
  if (label == "SOCSE" || label == "SOC" || label == "PS") {
    label += "-O" + std::to_string(degree > 0 ? degree : 5);
  } else if (degree > 0 && label.rfind("MS-", 0) != 0) {
    const auto o = label.find("-O");
    if (o == std::string::npos) throw ConfigError("cannot apply --degree to method '" + label + "'");
    auto end = label.find('-', o + 2);
    label = label.substr(0, o) + "-O" + std::to_string(degree) + (end == std::string::npos ? "" : label.substr(end));
  }
  if (nodes > 0) {
    if (label.rfind("MS-", 0) == 0) throw ConfigError("--nodes does not apply to multiple shooting");
    label += "-N" + std::to_string(nodes);
  }
  return label;
}

}  // namespace

void cmd_nodes(int n, OutputFormat fmt, std::ostream& out) {
  const SpectralGrid g = lgl_grid(n);
  double sum = 0.0;
  for (double w : g.weights) sum += w;
  if (fmt == OutputFormat::kJson) {
    Json j = {{"n", n}, {"nodes", g.nodes}, {"weights", g.weights}, {"weight_sum", sum}};
    out << j.dump(2) << '\n';
    return;
  }
  out << std::setprecision(17);
  out << "i,tau,weight\n";
  for (int i = 0; i < n; ++i) out << i << ',' << g.nodes[i] << ',' << g.weights[i] << '\n';
  out << "sum,," << sum << '\n';
}

void cmd_envelope_demo(int degree, int count, std::uint64_t seed, int samples, OutputFormat fmt,
                       std::ostream& out) {
  if (degree < 1 || degree > kMaxDegree) throw DomainError("degree must lie in [1, 32]");
  if (count < 0) throw DomainError("count must be non-negative");
  if (samples < 2) throw DomainError("samples must be >= 2");
  const LegendreBasisMatrix basis(degree);
  const EnvelopeMatrices env = envelope_matrix(degree, basis);
  std::mt19937_64 gen(seed);

  Json rows = Json::array();
  if (fmt == OutputFormat::kCsv) {
    out << std::setprecision(12);
    out << "spline,degree,true_min,true_max,bound_min,bound_max,gap_min,gap_max\n";
  }
  for (int k = 0; k < count; ++k) {
    Mat alpha(degree + 1, 1);
    for (int j = 0; j <= degree; ++j) alpha(j, 0) = uniform_pm1(gen);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < samples; ++i) {
      const double tau = -1.0 + 2.0 * i / (samples - 1);
      const double v = eval_spline(alpha, basis, tau)[0];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const ChannelBounds b = spline_bounds(alpha, env);
    const double gmin = lo - b.lower[0];
    const double gmax = b.upper[0] - hi;
    if (fmt == OutputFormat::kCsv) {
      out << k << ',' << degree << ',' << lo << ',' << hi << ',' << b.lower[0] << ',' << b.upper[0]
          << ',' << gmin << ',' << gmax << '\n';
    } else {
      Json coeffs = Json::array();
      for (int j = 0; j <= degree; ++j) coeffs.push_back(alpha(j, 0));
      rows.push_back({{"spline", k},
                      {"coefficients", coeffs},
                      {"true_min", lo},
                      {"true_max", hi},
                      {"bound_min", b.lower[0]},
                      {"bound_max", b.upper[0]},
                      {"gap_min", gmin},
                      {"gap_max", gmax}});
    }
  }
  if (fmt == OutputFormat::kJson) {
    Json j = {{"degree", degree}, {"count", count}, {"seed", seed}, {"samples", samples}, {"splines", rows}};
    out << j.dump(2) << '\n';
  }
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  const OcpProblem ocp = make_problem(cfg);
  const MethodSpec spec = parse_method(cfg.method.empty() ? "SOCSE-O5" : cfg.method, cfg.shooting_substeps);
  const MethodResult res = solve_method(ocp, spec, cfg.sqp);

  Json j;
  j["problem"] = cfg.problem;
  j["method"] = spec.label;
  j["report"] = report_json(res.sqp.report);
  if (res.spline) {
    const SplineSolution& s = *res.spline;
    j["degree"] = s.degree();
    j["nodes"] = s.grid().n;
    Json segs = Json::array();
    for (const auto& seg : s.segments()) {
      segs.push_back({{"t0", seg.time.t0()},
                      {"tf", seg.time.tf()},
                      {"alpha_x", mat_json(seg.alpha_x)},
                      {"alpha_u", mat_json(seg.alpha_u)},
                      {"x_envelope", {{"lower", vec_json(seg.x_bounds.lower)}, {"upper", vec_json(seg.x_bounds.upper)}}},
                      {"u_envelope", {{"lower", vec_json(seg.u_bounds.lower)}, {"upper", vec_json(seg.u_bounds.upper)}}}});
    }
    j["segments"] = segs;
  } else {
    const auto& sh = static_cast<const ShootingSolution&>(*res.trajectory);
    j["x_nodes"] = mat_json(sh.x_nodes().transpose());
    j["u_steps"] = mat_json(sh.u_steps().transpose());
  }
  j["bounds"] = {{"x_lower", vec_json(ocp.x_lower)},
                 {"x_upper", vec_json(ocp.x_upper)},
                 {"u_lower", vec_json(ocp.u_lower)},
                 {"u_upper", vec_json(ocp.u_upper)}};

  const int n = 1000;
  Json t = Json::array(), xs = Json::array(), us = Json::array();
  const Trajectory& tr = *res.trajectory;
  for (int i = 0; i < n; ++i) {
    const double ti = tr.t0() + (tr.tf() - tr.t0()) * i / (n - 1);
    t.push_back(ti);
    xs.push_back(vec_json(tr.state(ti)));
    us.push_back(vec_json(tr.control(ti)));
  }
  j["samples"] = {{"t", t}, {"x", xs}, {"u", us}};
  const ViolationScan scan = dense_violation_scan(tr, ocp, std::max(cfg.samples, 1000));
  j["dense_violation"] = {{"x", vec_json(scan.x)}, {"u", vec_json(scan.u)}, {"max", scan.max()}};
  j["config"] = Json::parse(dump_config(cfg));
  out << j.dump(2) << '\n';
  return res.sqp.report.status == SolveStatus::kConverged ? kExitOk : kExitSolverFailure;
}

std::vector<std::string> default_methods(const std::string& problem) {
  if (problem == "academic") return {"MS-50", "PS-O5", "PS-O8", "SOCSE-O5", "SOCSE-O8"};
  if (problem == "avp") return {"MS-50", "SOC-O3", "SOCSE-O3", "SOCSE-O5", "SOCSE-O8"};
  throw ConfigError("unknown problem id '" + problem + "' (expected academic or avp)");
}

int cmd_bench(const RunConfig& cfg, OutputFormat fmt, std::ostream& out) {
  const OcpProblem ocp = make_problem(cfg);
  BenchmarkConfig bc;
  bc.problem = cfg.problem;
  bc.methods = cfg.methods;
  bc.sqp = cfg.sqp;
  bc.reference = cfg.reference;
  bc.samples = cfg.samples;
  bc.rollout_dt = cfg.rollout_dt;
  bc.shooting_substeps = cfg.shooting_substeps;
  const BenchmarkTable table = run_benchmark(ocp, bc);

  bool failed = false;
  for (const auto& r : table.rows) failed = failed || r.status != to_string(SolveStatus::kConverged);

  if (fmt == OutputFormat::kCsv) {
    write_csv(table, out);
  } else {
    Json rows = Json::array();
    for (const auto& r : table.rows) {
      rows.push_back({{"method", r.method},
                      {"solve_time_s", finite_or_null(r.solve_time_s)},
                      {"cost_dev_pct", finite_or_null(r.cost_dev_pct)},
                      {"ode_err", finite_or_null(r.ode_err)},
                      {"max_violation", finite_or_null(r.max_violation)},
                      {"ctrl_dev", finite_or_null(r.ctrl_dev)},
                      {"status", r.status},
                      {"cost", finite_or_null(r.cost)},
                      {"error", r.error}});
    }
    Json j = {{"problem", cfg.problem},
              {"reference_cost", table.reference_cost},
              {"reference_converged", table.reference_converged},
              {"rows", rows},
              {"config", Json::parse(dump_config(cfg))}};
    out << j.dump(2) << '\n';
  }
  return failed ? kExitSolverFailure : kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Legendre-spline collocation with Bernstein safety envelopes"};
  app.require_subcommand(1);

  std::string config_path, problem, method, out_path, format = "csv";
  int degree = 0, nodes = 0, samples = 0, count = 1000;
  std::uint64_t seed = 1;

  auto* nodes_cmd = app.add_subcommand("nodes", "Legendre-Gauss-Lobatto nodes and weights");
  nodes_cmd->add_option("--nodes,-n", nodes, "number of nodes N (>= 2)")->required();

  auto* env_cmd = app.add_subcommand("envelope-demo", "random splines against their Bernstein bounds");
  env_cmd->add_option("--degree,-m", degree, "spline degree M (>= 1)")->required();
  env_cmd->add_option("--count", count, "number of random splines")->check(CLI::NonNegativeNumber);
  env_cmd->add_option("--seed", seed, "generator seed");

  auto* solve_cmd = app.add_subcommand("solve", "solve one problem with one method");
  auto* bench_cmd = app.add_subcommand("bench", "benchmark table against the fine-grid reference");
  for (auto* c : {solve_cmd, bench_cmd}) {
    c->add_option("--problem", problem, "academic | avp");
    c->add_option("--method", method, "MS-<K>, SOCSE-O<M>, SOC-O<M>, PS-O<M>; bench accepts a comma list");
    c->add_option("--degree", degree, "spline degree M");
    c->add_option("--nodes", nodes, "collocation nodes N");
    c->add_option("--config", config_path, "YAML configuration file");
    c->add_option("--seed", seed, "unused by deterministic solves; echoed");
  }
  for (auto* c : {nodes_cmd, env_cmd, solve_cmd, bench_cmd}) {
    c->add_option("--out", out_path, "output path (default stdout)");
    c->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  }
  for (auto* c : {env_cmd, solve_cmd, bench_cmd}) {
    c->add_option("--samples", samples, "dense sampling density");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const OutputFormat fmt = format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      err << "error: cannot open output file '" << out_path << "'\n";
      return kExitUsage;
    }
  }
  std::ostream& sink = out_path.empty() ? out : file;

  try {
    if (*nodes_cmd) {
      if (nodes < 2) {
        err << "error: --nodes must be >= 2\n";
        return kExitUsage;
      }
      cmd_nodes(nodes, fmt, sink);
      return kExitOk;
    }
    if (*env_cmd) {
      if (degree < 1 || degree > kMaxDegree) {
        err << "error: --degree must lie in [1, " << kMaxDegree << "]\n";
        return kExitUsage;
      }
      cmd_envelope_demo(degree, count, seed, samples > 0 ? samples : 10000, fmt, sink);
      return kExitOk;
    }

    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!problem.empty()) cfg.problem = problem;
    if (samples > 0) cfg.samples = samples;
    if (cfg.samples < 1000) throw ConfigError("--samples must be >= 1000");
    make_problem(cfg);  // rejects an unknown problem id before any solve

    if (*solve_cmd) {
      cfg.method = resolve_method(method.empty() ? cfg.method : method, degree, nodes);
      parse_method(cfg.method);
      const int code = cmd_solve(cfg, sink);
      if (code != kExitOk) err << "solver did not converge; report written\n";
      return code;
    }
    if (!method.empty()) {
      cfg.methods.clear();
      std::stringstream ss(method);
      for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) cfg.methods.push_back(resolve_method(item, degree, nodes));
      }
    } else if (cfg.methods.empty()) {
      cfg.methods = default_methods(cfg.problem);
    }
    for (const auto& m : cfg.methods) parse_method(m);
    return cmd_bench(cfg, fmt, sink);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DofViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
}

}  // namespace socse
