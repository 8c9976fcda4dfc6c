#include "socse/sqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "socse/errors.hpp"
#include "socse/fd.hpp"

namespace socse {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Function values and derivatives at one iterate.
struct Eval {
  double f = 0.0;
  VectorXd grad;
  VectorXd c;
  MatrixXd Jc;
  VectorXd g;
  MatrixXd Jg;
  VectorXd Az;
};

class Model {
 public:
  Model(const NlpProblem& nlp, double fd_step) : nlp_(nlp), h_(fd_step) {}

  double f(const VectorXd& z) const { return nlp_.objective(z); }

  VectorXd c(const VectorXd& z) const {
    return nlp_.n_eq > 0 ? nlp_.eq_constraints(z) : VectorXd(0);
  }

  VectorXd g(const VectorXd& z) const {
    return nlp_.n_nl_ineq > 0 ? nlp_.nl_ineq_constraints(z) : VectorXd(0);
  }

  VectorXd Az(const VectorXd& z) const {
    return nlp_.A_ineq.rows() > 0 ? VectorXd(nlp_.A_ineq * z) : VectorXd(0);
  }

  Eval values(const VectorXd& z) const {
    Eval e;
    e.f = f(z);
    e.c = c(z);
    e.g = g(z);
    e.Az = Az(z);
    return e;
  }

  VectorXd gradient(const VectorXd& z) const {
    return nlp_.objective_gradient ? nlp_.objective_gradient(z) : fd_gradient(nlp_.objective, z, h_);
  }

  void derivatives(const VectorXd& z, Eval& e) const {
    const int n = nlp_.n_vars;
    e.grad = gradient(z);
    if (nlp_.n_eq > 0) {
      e.Jc = nlp_.eq_jacobian ? nlp_.eq_jacobian(z) : fd_jacobian(nlp_.eq_constraints, z, h_);
    } else {
      e.Jc.resize(0, n);
    }
    if (nlp_.n_nl_ineq > 0) {
      e.Jg = nlp_.nl_ineq_jacobian ? nlp_.nl_ineq_jacobian(z)
                                   : fd_jacobian(nlp_.nl_ineq_constraints, z, h_);
    } else {
      e.Jg.resize(0, n);
    }
    if (e.grad.size() != n || e.Jc.rows() != nlp_.n_eq || e.Jc.cols() != n ||
        e.Jg.rows() != nlp_.n_nl_ineq || e.Jg.cols() != n) {
      throw DimensionMismatch("NLP derivative callback returned the wrong shape");
    }
  }

  const NlpProblem& nlp() const { return nlp_; }

 private:
  const NlpProblem& nlp_;
  double h_;
};

double linear_violation(const VectorXd& Az, const VectorXd& lo, const VectorXd& hi, bool sum) {
  double acc = 0.0;
  for (int i = 0; i < Az.size(); ++i) {
    const double v = std::max({0.0, lo[i] - Az[i], Az[i] - hi[i]});
    acc = sum ? acc + v : std::max(acc, v);
  }
  return acc;
}

double positive_part(const VectorXd& g, bool sum) {
  double acc = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double v = std::max(0.0, g[i]);
    acc = sum ? acc + v : std::max(acc, v);
  }
  return acc;
}

// l1 constraint violation used by the merit function.
double theta(const Eval& e, const NlpProblem& nlp) {
  return e.c.lpNorm<1>() + linear_violation(e.Az, nlp.lo, nlp.hi, true) +
         positive_part(e.g, true);
}

double max_ineq_violation(const Eval& e, const NlpProblem& nlp) {
  return std::max(linear_violation(e.Az, nlp.lo, nlp.hi, false), positive_part(e.g, false));
}

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

VectorXd lagrangian_gradient(const Eval& e, const NlpProblem& nlp, const Multipliers& m) {
  VectorXd r = e.grad;
  if (e.Jc.rows()) r.noalias() += e.Jc.transpose() * m.eq;
  if (nlp.A_ineq.rows()) r.noalias() += nlp.A_ineq.transpose() * m.linear;
  if (e.Jg.rows()) r.noalias() += e.Jg.transpose() * m.nonlinear;
  return r;
}

double complementarity(const VectorXd& Az, const VectorXd& g, const NlpProblem& nlp,
                       const Multipliers& m) {
  double worst = 0.0;
  for (int i = 0; i < Az.size(); ++i) {
    const double mu = m.linear[i];
    if (mu > 0.0) worst = std::max(worst, mu * std::abs(nlp.hi[i] - Az[i]));
    if (mu < 0.0) worst = std::max(worst, -mu * std::abs(Az[i] - nlp.lo[i]));
  }
  for (int i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(m.nonlinear[i] * g[i]));
  return worst;
}

struct Step {
  bool ok = false;
  QpStatus status = QpStatus::kInfeasible;
  bool elastic = false;
  VectorXd d;
  Multipliers m;
  ActiveSet active;
  int iterations = 0;
};

// Standard SQP subproblem. Rows: linear inequalities first, then linearised g.
QpProblem build_qp(const MatrixXd& B, const Eval& e, const NlpProblem& nlp, const VectorXd& ceq) {
  const int n = nlp.n_vars;
  const int ml = static_cast<int>(nlp.A_ineq.rows());
  const int mg = static_cast<int>(e.Jg.rows());
  QpProblem qp;
  qp.H = B;
  qp.g = e.grad;
  qp.A_eq = e.Jc;
  qp.b_eq = -ceq;
  qp.A_ineq.resize(ml + mg, n);
  qp.lo.resize(ml + mg);
  qp.hi.resize(ml + mg);
  if (ml) {
    qp.A_ineq.topRows(ml) = nlp.A_ineq;
    qp.lo.head(ml) = nlp.lo - e.Az;
    qp.hi.head(ml) = nlp.hi - e.Az;
  }
  if (mg) {
    qp.A_ineq.bottomRows(mg) = e.Jg;
    qp.lo.segment(ml, mg).setConstant(-kInf);
    qp.hi.segment(ml, mg) = -e.g;
  }
  return qp;
}

Step unpack(const QpSolution& sol, int n, int n_eq, int ml, int mg) {
  Step s;
  s.ok = sol.status == QpStatus::kOptimal;
  s.status = sol.status;
  s.d = sol.d.head(n);
  s.m.eq = sol.lambda_eq.head(n_eq);
  s.m.linear = sol.mu_ineq.head(ml);
  s.m.nonlinear = sol.mu_ineq.segment(ml, mg);
  s.active = sol.active;
  s.iterations = sol.iterations;
  return s;
}

// Elastic subproblem used when the linearisation is inconsistent:
//   Jc d + s+ - s- = -c,  Jg d - t <= -g,  s+, s-, t >= 0,
// with l1 weight rho and a small quadratic term that keeps H positive definite.
Step elastic_step(const MatrixXd& B, const Eval& e, const NlpProblem& nlp, double rho) {
  const int n = nlp.n_vars;
  const int me = static_cast<int>(e.Jc.rows());
  const int ml = static_cast<int>(nlp.A_ineq.rows());
  const int mg = static_cast<int>(e.Jg.rows());
  const int ns = 2 * me + mg;
  const int nt = n + ns;
  const double eps = 1e-8 * std::max(1.0, B.diagonal().cwiseAbs().maxCoeff());

  QpProblem qp;
  qp.H = MatrixXd::Zero(nt, nt);
  qp.H.topLeftCorner(n, n) = B;
  qp.H.bottomRightCorner(ns, ns).diagonal().setConstant(eps);
  qp.g = VectorXd::Constant(nt, rho);
  qp.g.head(n) = e.grad;

  qp.A_eq = MatrixXd::Zero(me, nt);
  qp.A_eq.leftCols(n) = e.Jc;
  qp.A_eq.block(0, n, me, me).setIdentity();
  qp.A_eq.block(0, n + me, me, me) = -MatrixXd::Identity(me, me);
  qp.b_eq = -e.c;

  const int rows = ml + mg + ns;
  qp.A_ineq = MatrixXd::Zero(rows, nt);
  qp.lo.resize(rows);
  qp.hi.resize(rows);
  if (ml) {
    qp.A_ineq.topLeftCorner(ml, n) = nlp.A_ineq;
    qp.lo.head(ml) = nlp.lo - e.Az;
    qp.hi.head(ml) = nlp.hi - e.Az;
  }
  if (mg) {
    qp.A_ineq.block(ml, 0, mg, n) = e.Jg;
    qp.A_ineq.block(ml, n + 2 * me, mg, mg) = -MatrixXd::Identity(mg, mg);
    qp.lo.segment(ml, mg).setConstant(-kInf);
    qp.hi.segment(ml, mg) = -e.g;
  }
  qp.A_ineq.block(ml + mg, n, ns, ns).setIdentity();
  qp.lo.tail(ns).setZero();
  qp.hi.tail(ns).setConstant(kInf);

  const QpSolution sol = qp_active_set(qp);
  Step s;
  s.ok = sol.status == QpStatus::kOptimal;
  s.status = sol.status;
  s.elastic = true;
  s.iterations = sol.iterations;
  if (!s.ok) return s;
  s.d = sol.d.head(n);
  s.m.eq = sol.lambda_eq;
  s.m.linear = sol.mu_ineq.head(ml);
  s.m.nonlinear = sol.mu_ineq.segment(ml, mg);
  s.active.assign(sol.active.begin(), sol.active.begin() + ml + mg);
  return s;
}

// Predicted l1 violation after the linearised step d.
double theta_linearised(const Eval& e, const NlpProblem& nlp, const VectorXd& d) {
  double t = 0.0;
  if (e.c.size()) t += (e.c + e.Jc * d).lpNorm<1>();
  if (e.Az.size()) {
    const VectorXd Azd = e.Az + nlp.A_ineq * d;
    t += linear_violation(Azd, nlp.lo, nlp.hi, true);
  }
  if (e.g.size()) t += positive_part(e.g + e.Jg * d, true);
  return t;
}

// Symmetrised central-difference Jacobian of `grad` with eigenvalue magnitudes
// raised to `rel_floor` times the largest one.
template <class Gradient>
MatrixXd convexified_hessian(const VectorXd& z, double h, double rel_floor, Gradient&& grad) {
  const int n = static_cast<int>(z.size());
  MatrixXd H(n, n);
  for (int j = 0; j < n; ++j) {
    VectorXd zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    H.col(j) = (grad(zp) - grad(zm)) / (2.0 * h);
  }
  H = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
  VectorXd ev = es.eigenvalues().cwiseAbs();
  const double top = ev.size() ? ev.maxCoeff() : 1.0;
  if (!(top > 0.0) || !std::isfinite(top)) return MatrixXd::Identity(n, n);
  ev = ev.cwiseMax(std::max(rel_floor * top, 1e-8));
  MatrixXd B = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (B + B.transpose());
}

MatrixXd objective_hessian(const Model& model, const VectorXd& z, double h) {
  return convexified_hessian(z, h, 1e-4, [&](const VectorXd& x) { return model.gradient(x); });
}

MatrixXd lagrangian_hessian(const Model& model, const NlpProblem& nlp, const VectorXd& z,
                            const Multipliers& m, double h) {
  return convexified_hessian(z, h, 1e-6, [&](const VectorXd& x) {
    Eval e = model.values(x);
    model.derivatives(x, e);
    return lagrangian_gradient(e, nlp, m);
  });
}

double max_abs_multiplier(const Multipliers& m) {
  return std::max({inf_norm(m.eq), inf_norm(m.linear), inf_norm(m.nonlinear)});
}

}  // namespace

void SqpOptions::validate() const {
  if (max_iters <= 0) throw ConfigError("max_iters must be positive");
  if (!(eq_tol > 0.0) || !(kkt_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (!(penalty_factor >= 1.0)) throw ConfigError("penalty_factor must be >= 1");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtrack must lie in (0, 1)");
  if (!(armijo > 0.0 && armijo < 0.5)) throw ConfigError("armijo must lie in (0, 0.5)");
  if (max_backtracks < 1) throw ConfigError("max_backtracks must be >= 1");
  if (!(elastic_weight > 0.0)) throw ConfigError("elastic_weight must be positive");
  if (stall_refresh < 0) throw ConfigError("stall_refresh must be >= 0");
  if (!(short_step > 0.0 && short_step <= 1.0)) throw ConfigError("short_step must lie in (0, 1]");
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIters: return "max_iters";
    case SolveStatus::kQpFailure: return "qp_failure";
    case SolveStatus::kLineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

SqpResult solve_sqp(const NlpProblem& nlp, const VectorXd& z0, const SqpOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  nlp.validate();
  opts.validate();
  if (z0.size() != nlp.n_vars) throw DimensionMismatch("initial guess has the wrong size");

  const int n = nlp.n_vars;
  const int ml = static_cast<int>(nlp.A_ineq.rows());
  const int mg = nlp.n_nl_ineq;
  const Model model(nlp, opts.fd_step);

  SqpResult res;
  res.z = z0;
  res.multipliers.eq = VectorXd::Zero(nlp.n_eq);
  res.multipliers.linear = VectorXd::Zero(ml);
  res.multipliers.nonlinear = VectorXd::Zero(nlp.n_nl_ineq);
  SolveReport& rep = res.report;

  MatrixXd B = opts.hessian_init == HessianInit::kObjective
                   ? objective_hessian(model, z0, std::sqrt(opts.fd_step))
                   : MatrixXd::Identity(n, n);
  double penalty = 0.0;
  int short_steps = 0;
  int window = opts.stall_refresh;
  bool refreshed = false;
  ActiveSet warm;

  Eval cur = model.values(res.z);
  model.derivatives(res.z, cur);

  auto finish = [&](SolveStatus status) {
    rep.status = status;
    rep.objective = cur.f;
    rep.max_eq_residual = inf_norm(cur.c);
    rep.max_ineq_violation = max_ineq_violation(cur, nlp);
    rep.stationarity = inf_norm(lagrangian_gradient(cur, nlp, res.multipliers));
    rep.complementarity = complementarity(cur.Az, cur.g, nlp, res.multipliers);
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  for (int it = 0; it < opts.max_iters; ++it) {
    rep.iterations = it;

    Step step = unpack(qp_active_set(build_qp(B, cur, nlp, cur.c), warm), n, nlp.n_eq, ml, mg);
    rep.qp_iterations += step.iterations;
    if (step.status == QpStatus::kNotConvex) {
      // Rounding has cost B its positive definiteness; restart the quasi-Newton model.
      B = MatrixXd::Identity(n, n) * std::max(1e-8, B.diagonal().cwiseAbs().mean());
      ++rep.bfgs_resets;
      step = unpack(qp_active_set(build_qp(B, cur, nlp, cur.c), warm), n, nlp.n_eq, ml, mg);
      rep.qp_iterations += step.iterations;
    }
    if (!step.ok) {
      if (opts.log) *opts.log << "  qp " << to_string(step.status) << ", trying elastic\n";
      step = elastic_step(B, cur, nlp, opts.elastic_weight);
      rep.qp_iterations += step.iterations;
      if (!step.ok) {
        if (opts.log) *opts.log << "  elastic qp " << to_string(step.status) << '\n';
        finish(SolveStatus::kQpFailure);
        return res;
      }
      ++rep.elastic_steps;
    }
    res.multipliers = step.m;

    // KKT test at the current iterate with the fresh multiplier estimates.
    const double stat = inf_norm(lagrangian_gradient(cur, nlp, step.m));
    const double comp = complementarity(cur.Az, cur.g, nlp, step.m);
    const double feas = std::max(inf_norm(cur.c), max_ineq_violation(cur, nlp));
    if (opts.log) {
      *opts.log << "it " << it << " f " << cur.f << " feas " << feas << " stat " << stat
                << " comp " << comp << " |d| " << inf_norm(step.d) << " pen " << penalty << '\n';
    }
    if (stat <= opts.kkt_tol && comp <= opts.kkt_tol && feas <= opts.eq_tol) {
      finish(SolveStatus::kConverged);
      return res;
    }

    // Merit penalty stays above the largest multiplier.
    const double mmax = max_abs_multiplier(step.m);
    if (penalty < 1.1 * mmax) penalty = std::max(opts.penalty_factor * mmax, 1e-8);

    const double th0 = theta(cur, nlp);
    const double gap = th0 - theta_linearised(cur, nlp, step.d);
    const double pred = cur.grad.dot(step.d) + 0.5 * std::max(step.d.dot(B * step.d), 0.0);
    if (gap > 1e-10 * std::max(1.0, th0) && pred > 0.0) {
      const double need = pred / (0.5 * gap);
      if (penalty < need) penalty = need;
    }
    const double dphi = cur.grad.dot(step.d) - penalty * gap;
    const double phi0 = cur.f + penalty * th0;
    const double dphi_ls = std::min(dphi, -1e-16);

    VectorXd z_new;
    Eval trial;
    bool accepted = false;
    double alpha = 1.0;
    // Second-order term of the search arc z + alpha d + alpha^2 arc; set once
    // the full step is rejected and a correction is available.
    VectorXd arc;
    const char* path = "";
    for (int k = 0; k <= opts.max_backtracks; ++k) {
      z_new = res.z + alpha * step.d;
      if (arc.size()) {
        z_new += alpha * alpha * arc;
        path = " arc";
      }
      trial = model.values(z_new);
      const double phi = trial.f + penalty * theta(trial, nlp);
      if (phi <= phi0 + opts.armijo * alpha * dphi_ls) {
        accepted = true;
        break;
      }
      if (k == 0 && opts.second_order_correction && (nlp.n_eq > 0 || nlp.n_nl_ineq > 0)) {
        // Second-order correction against the Maratos effect: re-linearise the
        // constraints at z + d and solve for a corrected step from z.
        Eval shifted = cur;
        const VectorXd c_soc = trial.c - cur.Jc * step.d;
        if (trial.g.size()) shifted.g = trial.g - cur.Jg * step.d;
        const QpSolution soc = qp_active_set(build_qp(B, shifted, nlp, c_soc), step.active);
        rep.qp_iterations += soc.iterations;
        if (soc.status == QpStatus::kOptimal) {
          const VectorXd z_soc = res.z + soc.d;
          Eval t_soc = model.values(z_soc);
          const double phi_soc = t_soc.f + penalty * theta(t_soc, nlp);
          if (phi_soc <= phi0 + opts.armijo * dphi_ls) {
            z_new = z_soc;
            trial = std::move(t_soc);
            path = " soc";
            accepted = true;
            break;
          }
          if (opts.curvilinear_search) arc = soc.d - step.d;
        }
      }
      alpha *= opts.backtrack;
    }
    if (!accepted) {
      finish(SolveStatus::kLineSearchFailure);
      return res;
    }
    if (opts.log) {
      const auto prec = opts.log->precision(17);
      *opts.log << "  step " << alpha << path << " merit " << phi0 << " -> "
                << trial.f + penalty * theta(trial, nlp) << '\n';
      opts.log->precision(prec);
    }

    model.derivatives(z_new, trial);

    // Damped BFGS on the Lagrangian gradient difference.
    const VectorXd s = z_new - res.z;
    VectorXd y = lagrangian_gradient(trial, nlp, step.m) - lagrangian_gradient(cur, nlp, step.m);
    const VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    const double sy = s.dot(y);
    if (sBs > 0.0 && std::isfinite(sBs)) {
      const double th = sy >= 0.2 * sBs ? 1.0 : 0.8 * sBs / (sBs - sy);
      const VectorXd r = th * y + (1.0 - th) * Bs;
      const double sr = s.dot(r);
      if (sr > 1e-14 * s.norm() * r.norm() && std::isfinite(sr)) {
        B += r * r.transpose() / sr - Bs * Bs.transpose() / sBs;
        B = 0.5 * (B + B.transpose());
      } else if (opts.bfgs_reset) {
        const double yy = y.squaredNorm();
        const double scale = sy > 0.0 && yy > 0.0 ? yy / sy : 1.0;
        B = MatrixXd::Identity(n, n) * scale;
        ++rep.bfgs_resets;
      }
    }

    // Repeated short steps mean the quasi-Newton model misses the constraint
    // curvature; rebuild it from the Lagrangian. A refresh that is itself
    // followed by a short step doubles the window, handing control back to BFGS.
    const bool short_step = alpha < opts.short_step;
    if (refreshed) window = short_step ? 2 * window : opts.stall_refresh;
    refreshed = false;
    short_steps = short_step ? short_steps + 1 : 0;
    bool ill_conditioned = false;
    if (opts.max_condition > 0.0) {
      const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(B, Eigen::EigenvaluesOnly).eigenvalues();
      ill_conditioned = !(ev.minCoeff() > 0.0) || ev.maxCoeff() > opts.max_condition * ev.minCoeff();
    }
    if (ill_conditioned || (opts.stall_refresh > 0 && short_steps >= window)) {
      B = lagrangian_hessian(model, nlp, z_new, step.m, std::sqrt(opts.fd_step));
      short_steps = 0;
      refreshed = true;
      ++rep.hessian_refreshes;
      if (opts.log) *opts.log << "  hessian refresh\n";
    }
    res.z = z_new;
    cur = std::move(trial);
    warm = step.active;
    rep.iterations = it + 1;
  }

  // Report the final iterate with multipliers refreshed at that point.
  if (nlp.n_eq + ml + nlp.n_nl_ineq > 0) {
    const Step last = unpack(qp_active_set(build_qp(B, cur, nlp, cur.c), warm), n, nlp.n_eq, ml, mg);
    if (last.ok) res.multipliers = last.m;
  }
  finish(SolveStatus::kMaxIters);
  return res;
}

KktResiduals kkt_certificate(const NlpProblem& nlp, const VectorXd& z, const Multipliers& m,
                             double fd_step) {
  nlp.validate();
  if (z.size() != nlp.n_vars) throw DimensionMismatch("z has the wrong size");
  if (m.eq.size() != nlp.n_eq || m.linear.size() != nlp.A_ineq.rows() ||
      m.nonlinear.size() != nlp.n_nl_ineq) {
    throw DimensionMismatch("multiplier sizes do not match the NLP");
  }
  const Model model(nlp, fd_step);
  Eval e = model.values(z);
  model.derivatives(z, e);

  KktResiduals k;
  k.stationarity = inf_norm(lagrangian_gradient(e, nlp, m));
  k.complementarity = complementarity(e.Az, e.g, nlp, m);
  k.feasibility = std::max(inf_norm(e.c), max_ineq_violation(e, nlp));
  double dual = 0.0;
  for (int i = 0; i < m.linear.size(); ++i) {
    if (m.linear[i] > 0.0 && !std::isfinite(nlp.hi[i])) dual = std::max(dual, m.linear[i]);
    if (m.linear[i] < 0.0 && !std::isfinite(nlp.lo[i])) dual = std::max(dual, -m.linear[i]);
  }
  for (int i = 0; i < m.nonlinear.size(); ++i) dual = std::max(dual, -m.nonlinear[i]);
  k.dual_infeasibility = dual;
  return k;
}

}  // namespace socse
