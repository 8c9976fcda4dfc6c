#include "socse/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>
#include <regex>

#include "socse/errors.hpp"

namespace socse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Condensed reference problem.

struct StateBound {
  int k;
  int c;
  double lo;
  double hi;
};

class Condensed {
 public:
  Condensed(const OcpProblem& ocp, const ReferenceOptions& opts)
      : ocp_(ocp), K_(opts.steps), sub_(opts.substeps), dt_((ocp.tf - ocp.t0) / opts.steps) {
    const int nx = ocp.nx;
    aug_.nx = nx + 1;
    aug_.nu = ocp.nu;
    aug_.dynamics = [&ocp, nx](const Vec& xq, const Vec& u) {
      Vec d(nx + 1);
      const Vec x = xq.head(nx);
      d.head(nx) = ocp.dynamics(x, u);
      d[nx] = ocp.stage_cost(x, u);
      return d;
    };
    aug_.dynamics_jacobians = [&ocp, nx](const Vec& xq, const Vec& u) {
      const Vec x = xq.head(nx);
      const auto J = ocp.jacobians(x, u);
      const auto g = ocp.cost_gradient(x, u);
      DynamicsJacobians out{Mat::Zero(nx + 1, nx + 1), Mat::Zero(nx + 1, u.size())};
      out.dfdx.topLeftCorner(nx, nx) = J.dfdx;
      out.dfdx.block(nx, 0, 1, nx) = g.dx.transpose();
      out.dfdu.topRows(nx) = J.dfdu;
      out.dfdu.row(nx) = g.du.transpose();
      return out;
    };
    for (int k = 1; k <= K_; ++k) {
      for (int c = 0; c < nx; ++c) {
        if (std::isfinite(ocp.x_lower[c]) || std::isfinite(ocp.x_upper[c])) {
          bounds_.push_back({k, c, ocp.x_lower[c], ocp.x_upper[c]});
        }
      }
    }
    mu_lo_ = Vec::Zero(bounds_.size());
    mu_hi_ = Vec::Zero(bounds_.size());
    rho_ = opts.penalty;
  }

  int steps() const { return K_; }
  double dt() const { return dt_; }
  double& rho() { return rho_; }

  Mat project(const Mat& U) const {
    Mat P = U;
    for (int k = 0; k < K_; ++k) {
      P.col(k) = P.col(k).cwiseMax(ocp_.u_lower).cwiseMin(ocp_.u_upper);
    }
    return P;
  }

  // Augmented-Lagrangian objective; fills the node states and, if requested,
  // the gradient with respect to U by the discrete adjoint.
  double evaluate(const Mat& U, Mat& X, double& cost, Mat* grad) const {
    const int nx = ocp_.nx;
    X.resize(nx + 1, K_ + 1);
    X.col(0) << ocp_.x0, 0.0;
    std::vector<Mat> Ax;
    std::vector<Mat> Au;
    if (grad) {
      Ax.resize(K_);
      Au.resize(K_);
    }
    for (int k = 0; k < K_; ++k) {
      if (grad) {
        auto s = rk4_sensitivity(aug_, X.col(k), U.col(k), dt_, sub_);
        X.col(k + 1) = s.x_next;
        Ax[k] = std::move(s.dx);
        Au[k] = std::move(s.du);
      } else {
        Vec x = X.col(k);
        for (int i = 0; i < sub_; ++i) x = rk4_step(aug_, x, U.col(k), dt_ / sub_);
        X.col(k + 1) = x;
      }
    }
    const Vec xK = X.col(K_).head(nx);
    cost = X(nx, K_) + ocp_.terminal(xK);

    double J = cost;
    Mat node_grad;
    if (grad) node_grad = Mat::Zero(nx + 1, K_ + 1);
    for (std::size_t b = 0; b < bounds_.size(); ++b) {
      const auto& sb = bounds_[b];
      const double x = X(sb.c, sb.k);
      if (std::isfinite(sb.hi)) {
        const double t = std::max(0.0, mu_hi_[b] + rho_ * (x - sb.hi));
        J += (t * t - mu_hi_[b] * mu_hi_[b]) / (2.0 * rho_);
        if (grad) node_grad(sb.c, sb.k) += t;
      }
      if (std::isfinite(sb.lo)) {
        const double t = std::max(0.0, mu_lo_[b] + rho_ * (sb.lo - x));
        J += (t * t - mu_lo_[b] * mu_lo_[b]) / (2.0 * rho_);
        if (grad) node_grad(sb.c, sb.k) -= t;
      }
    }
    if (grad) {
      grad->resize(ocp_.nu, K_);
      Vec lam = node_grad.col(K_);
      lam.head(nx) += ocp_.terminal_gradient(xK);
      lam[nx] += 1.0;
      for (int k = K_ - 1; k >= 0; --k) {
        grad->col(k) = Au[k].transpose() * lam;
        lam = Ax[k].transpose() * lam + node_grad.col(k);
      }
    }
    return J;
  }

  double max_violation(const Mat& X) const {
    double v = 0.0;
    for (const auto& sb : bounds_) v = std::max(v, box_violation(X(sb.c, sb.k), sb.lo, sb.hi));
    return v;
  }

  void update_multipliers(const Mat& X) {
    for (std::size_t b = 0; b < bounds_.size(); ++b) {
      const auto& sb = bounds_[b];
      const double x = X(sb.c, sb.k);
      if (std::isfinite(sb.hi)) mu_hi_[b] = std::max(0.0, mu_hi_[b] + rho_ * (x - sb.hi));
      if (std::isfinite(sb.lo)) mu_lo_[b] = std::max(0.0, mu_lo_[b] + rho_ * (sb.lo - x));
    }
  }

  bool has_state_bounds() const { return !bounds_.empty(); }

 private:
  const OcpProblem& ocp_;
  OcpProblem aug_;
  int K_;
  int sub_;
  double dt_;
  std::vector<StateBound> bounds_;
  Vec mu_lo_;
  Vec mu_hi_;
  double rho_;
};

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

struct InnerResult {
  double pg = 0.0;
  int iterations = 0;
};

// Spectral projected gradient with a nonmonotone Armijo search. The gradient is
// divided by dt so the stationarity measure is per unit time.
InnerResult spg(Condensed& prob, Mat& U, const ReferenceOptions& opts) {
  const double inv_dt = 1.0 / prob.dt();
  Mat X;
  double cost = 0.0;
  Mat G;
  double f = prob.evaluate(U, X, cost, &G);
  G *= inv_dt;
  std::deque<double> history{f};
  double alpha = 1.0 / std::max(1.0, max_abs(G));
  InnerResult out;
  for (int it = 0; it < opts.max_iters; ++it) {
    out.iterations = it;
    out.pg = max_abs(prob.project(U - G) - U);
    if (out.pg <= opts.gradient_tol) return out;

    const Mat D = prob.project(U - alpha * G) - U;
    const double slope = (G.array() * D.array()).sum() * prob.dt();
    const double f_ref = *std::max_element(history.begin(), history.end());
    double lambda = 1.0;
    Mat U_new;
    Mat G_new;
    double f_new = 0.0;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      U_new = U + lambda * D;
      f_new = prob.evaluate(U_new, X, cost, nullptr);
      if (f_new <= f_ref + 1e-4 * lambda * slope) {
        ok = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!ok) break;
    prob.evaluate(U_new, X, cost, &G_new);
    G_new *= inv_dt;
    const Mat s = U_new - U;
    const Mat y = G_new - G;
    const double sy = (s.array() * y.array()).sum();
    const double ss = s.squaredNorm();
    alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : 1e10;
    alpha = std::min(alpha, 1e10);
    U = std::move(U_new);
    G = std::move(G_new);
    f = f_new;
    history.push_back(f);
    if (history.size() > 10) history.pop_front();
    if (ss == 0.0) break;
  }
  out.pg = max_abs(prob.project(U - G) - U);
  return out;
}

// Gauss-Legendre nodes/weights on [-1, 1] by the Golub-Welsch eigenproblem.
struct GaussRule {
  Vec nodes;
  Vec weights;
};

const GaussRule& gauss8() {
  static const GaussRule rule = [] {
    const int n = 8;
    Mat T = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      const double b = i / std::sqrt(4.0 * i * i - 1.0);
      T(i, i - 1) = b;
      T(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(T);
    GaussRule r;
    r.nodes = es.eigenvalues();
    r.weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    return r;
  }();
  return rule;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6e", v);
  return buf;
}

}  // namespace

ReferenceSolution quasi_optimal_reference(const OcpProblem& ocp, const ReferenceOptions& opts) {
  ocp.validate();
  if (opts.steps < 1000) throw DomainError("reference needs at least 1000 steps");
  if (opts.substeps < 1) throw DomainError("substeps must be >= 1");

  Condensed prob(ocp, opts);
  Mat U = prob.project(Mat::Zero(ocp.nu, opts.steps));
  ReferenceSolution ref;
  Mat X;
  double cost = 0.0;
  double last_violation = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    const InnerResult inner = spg(prob, U, opts);
    ref.iterations += inner.iterations;
    ref.projected_gradient = inner.pg;
    prob.evaluate(U, X, cost, nullptr);
    const double viol = prob.max_violation(X);
    ref.state_violation = viol;
    if (!prob.has_state_bounds() || viol <= opts.constraint_tol) {
      ref.converged = inner.pg <= opts.gradient_tol;
      break;
    }
    prob.update_multipliers(X);
    if (viol > 0.25 * last_violation) prob.rho() *= 10.0;
    last_violation = viol;
  }

  auto traj = std::make_shared<ShootingSolution>(ocp, X.topRows(ocp.nx), U, opts.substeps, cost);
  ref.cost = integrate_cost(*traj, ocp);
  ref.trajectory = std::move(traj);
  return ref;
}

double ode_rollout_error(const Trajectory& traj, const OcpProblem& ocp, double dt) {
  if (!(dt > 0.0 && dt <= 1e-3)) throw DomainError("rollout step must lie in (0, 1e-3]");
  const auto bp = traj.breakpoints();
  Vec x = ocp.x0;
  double worst = (x - traj.state(traj.t0())).lpNorm<Eigen::Infinity>();
  for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
    const double a = bp[p];
    const double b = bp[p + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / dt - 1e-9)));
    const double h = (b - a) / n;
    const double eps = 1e-10 * (b - a);
    auto u_at = [&](double t) { return traj.control(std::clamp(t, a + eps, b - eps)); };
    for (int i = 0; i < n; ++i) {
      const double t = a + i * h;
      const Vec u0 = u_at(t);
      const Vec um = u_at(t + 0.5 * h);
      const Vec u1 = u_at(t + h);
      const Vec k1 = ocp.dynamics(x, u0);
      const Vec k2 = ocp.dynamics(x + 0.5 * h * k1, um);
      const Vec k3 = ocp.dynamics(x + 0.5 * h * k2, um);
      const Vec k4 = ocp.dynamics(x + h * k3, u1);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double te = i + 1 == n ? b : a + (i + 1) * h;
      worst = std::max(worst, (x - traj.state(te)).lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

double ViolationScan::max() const {
  double m = 0.0;
  if (x.size()) m = std::max(m, x.maxCoeff());
  if (u.size()) m = std::max(m, u.maxCoeff());
  return m;
}

ViolationScan dense_violation_scan(const Trajectory& traj, const OcpProblem& ocp, int samples) {
  if (samples < 1000) throw DomainError("dense scan needs at least 1000 samples");
  ViolationScan out{Vec::Zero(ocp.nx), Vec::Zero(ocp.nu)};
  const double t0 = traj.t0();
  const double tf = traj.tf();
  for (int i = 0; i < samples; ++i) {
    const double t = i + 1 == samples ? tf : t0 + (tf - t0) * i / (samples - 1);
    const Vec x = traj.state(t);
    const Vec u = traj.control(t);
    for (int c = 0; c < ocp.nx; ++c) {
      out.x[c] = std::max(out.x[c], box_violation(x[c], ocp.x_lower[c], ocp.x_upper[c]));
    }
    for (int c = 0; c < ocp.nu; ++c) {
      out.u[c] = std::max(out.u[c], box_violation(u[c], ocp.u_lower[c], ocp.u_upper[c]));
    }
  }
  return out;
}

double integrate_cost(const Trajectory& traj, const OcpProblem& ocp, int min_panels) {
  const auto& rule = gauss8();
  const auto bp = traj.breakpoints();
  const int pieces = static_cast<int>(bp.size()) - 1;
  const int per = std::max(1, (std::max(1, min_panels) + pieces - 1) / pieces);
  double J = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double len = (bp[p + 1] - bp[p]) / per;
    for (int q = 0; q < per; ++q) {
      const double a = bp[p] + q * len;
      double acc = 0.0;
      for (int i = 0; i < rule.nodes.size(); ++i) {
        const double t = a + 0.5 * len * (rule.nodes[i] + 1.0);
        acc += rule.weights[i] * ocp.stage_cost(traj.state(t), traj.control(t));
      }
      J += 0.5 * len * acc;
    }
  }
  return J + ocp.terminal(traj.state(traj.tf()));
}

double control_deviation(const Trajectory& traj, const Trajectory& ref, int samples) {
  if (samples < 1) throw DomainError("samples must be positive");
  const double t0 = std::max(traj.t0(), ref.t0());
  const double tf = std::min(traj.tf(), ref.tf());
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = t0 + (tf - t0) * (i + 0.5) / samples;
    worst = std::max(worst, (traj.control(t) - ref.control(t)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

MethodSpec parse_method(const std::string& label, int shooting_substeps) {
  static const std::regex ms(R"(MS-(\d+))");
  static const std::regex col(R"((SOCSE|SOC|PS)-O(\d+)(?:-N(\d+))?(?:-S(\d+))?)");
  std::smatch m;
  MethodSpec spec;
  spec.label = label;
  if (std::regex_match(label, m, ms)) {
    spec.kind = MethodSpec::Kind::kShooting;
    spec.shooting.steps = std::stoi(m[1]);
    spec.shooting.substeps = shooting_substeps;
    if (spec.shooting.steps < 1) throw ConfigError("MS needs at least one step: " + label);
    return spec;
  }
  if (std::regex_match(label, m, col)) {
    spec.kind = MethodSpec::Kind::kCollocation;
    const std::string mode = m[1];
    spec.collocation.mode = mode == "SOCSE" ? CollocationMode::kSocse
                            : mode == "SOC" ? CollocationMode::kSoc
                                            : CollocationMode::kPseudospectral;
    spec.collocation.degree = std::stoi(m[2]);
    if (m[3].matched) spec.collocation.nodes = std::stoi(m[3]);
    if (m[4].matched) spec.collocation.segments = std::stoi(m[4]);
    return spec;
  }
  throw ConfigError("unknown method label '" + label + "'");
}

MethodResult solve_method(const OcpProblem& ocp, const MethodSpec& spec, const SqpOptions& opts,
                          const Eigen::VectorXd* z0) {
  const auto start = std::chrono::steady_clock::now();
  MethodResult res;
  res.spec = spec;
  const NlpProblem nlp = spec.kind == MethodSpec::Kind::kShooting
                             ? transcribe_multiple_shooting(ocp, spec.shooting)
                             : transcribe_collocation(ocp, spec.collocation);
  const Eigen::VectorXd zs = z0 ? *z0 : Eigen::VectorXd::Zero(nlp.n_vars);
  res.sqp = solve_sqp(nlp, zs, opts);
  res.solve_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (spec.kind == MethodSpec::Kind::kShooting) {
    res.trajectory = std::make_shared<ShootingSolution>(decode_shooting(res.sqp.z, ocp, spec.shooting));
  } else {
    res.spline.emplace(decode(res.sqp.z, ocp, spec.collocation));
    res.trajectory = std::make_shared<SplineSolution>(*res.spline);
  }
  return res;
}

BenchmarkTable run_benchmark(const OcpProblem& ocp, const BenchmarkConfig& cfg) {
  if (cfg.methods.empty()) return {};
  return run_benchmark(ocp, cfg, quasi_optimal_reference(ocp, cfg.reference));
}

BenchmarkTable run_benchmark(const OcpProblem& ocp, const BenchmarkConfig& cfg,
                             const ReferenceSolution& ref) {
  BenchmarkTable table;
  table.reference_cost = ref.cost;
  table.reference_converged = ref.converged;
  for (const auto& label : cfg.methods) {
    BenchmarkRow row;
    row.method = label;
    try {
      const MethodSpec spec = parse_method(label, cfg.shooting_substeps);
      const MethodResult res = solve_method(ocp, spec, cfg.sqp);
      row.solve_time_s = res.solve_time_s;
      row.status = std::string(to_string(res.sqp.report.status));
      row.cost = integrate_cost(*res.trajectory, ocp);
      row.cost_dev_pct = 100.0 * (row.cost - ref.cost) / ref.cost;
      row.ode_err = ode_rollout_error(*res.trajectory, ocp, cfg.rollout_dt);
      row.max_violation = dense_violation_scan(*res.trajectory, ocp, cfg.samples).max();
      row.ctrl_dev = control_deviation(*res.trajectory, *ref.trajectory, cfg.samples);
    } catch (const std::exception& e) {
      row.status = "error";
      row.error = e.what();
      row.cost = row.cost_dev_pct = row.ode_err = row.max_violation = row.ctrl_dev = kNaN;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const BenchmarkTable& table, std::ostream& os) {
  os << "method,solve_time_s,cost_dev_pct,ode_err,max_violation,ctrl_dev\n";
  for (const auto& r : table.rows) {
    os << r.method << ',' << format_number(r.solve_time_s) << ',' << format_number(r.cost_dev_pct)
       << ',' << format_number(r.ode_err) << ',' << format_number(r.max_violation) << ','
       << format_number(r.ctrl_dev) << '\n';
  }
}

}  // namespace socse
