#include "socse/transcription.hpp"

#include <cmath>
#include <memory>

#include "socse/envelope.hpp"
#include "socse/errors.hpp"
#include "socse/polynomial.hpp"

namespace socse {

namespace {

using Eigen::VectorXd;
using ConstMap = Eigen::Map<const Mat>;
using MutMap = Eigen::Map<Mat>;

// Shared, immutable data behind the collocation NLP callbacks.
struct Collocation {
  OcpProblem ocp;
  int M = 0;
  int N = 0;
  int S = 1;
  int nx = 0;
  int nu = 0;
  SpectralGrid grid;
  LegendreBasisMatrix basis;
  EnvelopeMatrices env;
  Mat Phi;   // N x (M+1), row i = [P_0(tau_i) .. P_M(tau_i)]
  Mat dPhi;  // N x (M+1), derivatives
  Vec phi_first;
  Vec phi_last;
  std::vector<TimeMap> times;

  Collocation(const OcpProblem& p, const CollocationConfig& cfg)
      : ocp(p),
        M(cfg.degree),
        N(cfg.resolved_nodes()),
        S(cfg.segments),
        nx(p.nx),
        nu(p.nu),
        grid(lgl_grid(N)),
        basis(cfg.degree),
        env(envelope_matrix(cfg.degree, basis)) {
    Phi.resize(N, M + 1);
    dPhi.resize(N, M + 1);
    for (int i = 0; i < N; ++i) {
      Phi.row(i) = basis.basis_values(grid.nodes[i]).transpose();
      dPhi.row(i) = basis.basis_derivatives(grid.nodes[i]).transpose();
    }
    phi_first = basis.basis_values(-1.0);
    phi_last = basis.basis_values(1.0);
    for (int s = 0; s < S; ++s) {
      const double a = p.t0 + (p.tf - p.t0) * s / S;
      const double b = s + 1 == S ? p.tf : p.t0 + (p.tf - p.t0) * (s + 1) / S;
      times.emplace_back(a, b);
    }
  }

  int segment_size() const { return (M + 1) * (nx + nu); }
  int n_vars() const { return S * segment_size(); }
  int ox(int s, int c) const { return s * segment_size() + c * (M + 1); }
  int ou(int s, int c) const { return s * segment_size() + (M + 1) * nx + c * (M + 1); }
  int n_eq() const { return nx + S * N * nx + (S - 1) * nx; }

  ConstMap ax(const VectorXd& z, int s) const { return ConstMap(z.data() + ox(s, 0), M + 1, nx); }
  ConstMap au(const VectorXd& z, int s) const { return ConstMap(z.data() + ou(s, 0), M + 1, nu); }

  double objective(const VectorXd& z) const {
    double J = 0.0;
    for (int s = 0; s < S; ++s) {
      const Mat X = Phi * ax(z, s);
      const Mat U = Phi * au(z, s);
      double acc = 0.0;
      for (int i = 0; i < N; ++i) {
        acc += grid.weights[i] * ocp.stage_cost(X.row(i).transpose(), U.row(i).transpose());
      }
      J += times[s].scale() * acc;
    }
    if (ocp.terminal_cost) J += ocp.terminal_cost(terminal_state(z));
    return J;
  }

  Vec terminal_state(const VectorXd& z) const { return ax(z, S - 1).transpose() * phi_last; }

  VectorXd gradient(const VectorXd& z) const {
    VectorXd g = VectorXd::Zero(n_vars());
    for (int s = 0; s < S; ++s) {
      const Mat X = Phi * ax(z, s);
      const Mat U = Phi * au(z, s);
      MutMap gx(g.data() + ox(s, 0), M + 1, nx);
      MutMap gu(g.data() + ou(s, 0), M + 1, nu);
      const double h = times[s].scale();
      for (int i = 0; i < N; ++i) {
        const auto cg = ocp.cost_gradient(X.row(i).transpose(), U.row(i).transpose());
        const double wh = h * grid.weights[i];
        gx.noalias() += wh * Phi.row(i).transpose() * cg.dx.transpose();
        if (nu) gu.noalias() += wh * Phi.row(i).transpose() * cg.du.transpose();
      }
    }
    if (ocp.terminal_cost) {
      const Vec tg = ocp.terminal_gradient(terminal_state(z));
      MutMap gx(g.data() + ox(S - 1, 0), M + 1, nx);
      gx.noalias() += phi_last * tg.transpose();
    }
    return g;
  }

  VectorXd eq(const VectorXd& z) const {
    VectorXd c(n_eq());
    c.head(nx) = ax(z, 0).transpose() * phi_first - ocp.x0;
    int r = nx;
    for (int s = 0; s < S; ++s) {
      const Mat X = Phi * ax(z, s);
      const Mat U = Phi * au(z, s);
      const Mat dX = dPhi * ax(z, s);
      const double h = times[s].scale();
      for (int i = 0; i < N; ++i, r += nx) {
        c.segment(r, nx) =
            dX.row(i).transpose() - h * ocp.dynamics(X.row(i).transpose(), U.row(i).transpose());
      }
    }
    for (int s = 0; s + 1 < S; ++s, r += nx) {
      c.segment(r, nx) = ax(z, s).transpose() * phi_last - ax(z, s + 1).transpose() * phi_first;
    }
    return c;
  }

  Mat eq_jacobian(const VectorXd& z) const {
    Mat J = Mat::Zero(n_eq(), n_vars());
    for (int c = 0; c < nx; ++c) J.block(c, ox(0, c), 1, M + 1) = phi_first.transpose();
    int r = nx;
    for (int s = 0; s < S; ++s) {
      const Mat X = Phi * ax(z, s);
      const Mat U = Phi * au(z, s);
      const double h = times[s].scale();
      for (int i = 0; i < N; ++i, r += nx) {
        const auto jac = ocp.jacobians(X.row(i).transpose(), U.row(i).transpose());
        for (int c = 0; c < nx; ++c) {
          for (int k = 0; k < nx; ++k) {
            auto blk = J.block(r + c, ox(s, k), 1, M + 1);
            blk = -h * jac.dfdx(c, k) * Phi.row(i);
            if (k == c) blk += dPhi.row(i);
          }
          for (int k = 0; k < nu; ++k) {
            J.block(r + c, ou(s, k), 1, M + 1) = -h * jac.dfdu(c, k) * Phi.row(i);
          }
        }
      }
    }
    for (int s = 0; s + 1 < S; ++s, r += nx) {
      for (int c = 0; c < nx; ++c) {
        J.block(r + c, ox(s, c), 1, M + 1) = phi_last.transpose();
        J.block(r + c, ox(s + 1, c), 1, M + 1) = -phi_first.transpose();
      }
    }
    return J;
  }

  VectorXd terminal_g(const VectorXd& z) const { return ocp.terminal_g(terminal_state(z)); }

  Mat terminal_g_jacobian(const VectorXd& z) const {
    const Mat Jg = ocp.terminal_g_jacobian(terminal_state(z));
    Mat J = Mat::Zero(ocp.n_terminal, n_vars());
    for (int c = 0; c < nx; ++c) J.block(0, ox(S - 1, c), ocp.n_terminal, M + 1) = Jg.col(c) * phi_last.transpose();
    return J;
  }

  // Linear rows: `rowmap` maps one channel's coefficients to the constrained values.
  void linear_rows(const Mat& rowmap, NlpProblem& nlp) const {
    const int per = static_cast<int>(rowmap.rows());
    const int rows = S * per * (nx + nu);
    nlp.A_ineq = Mat::Zero(rows, n_vars());
    nlp.lo.resize(rows);
    nlp.hi.resize(rows);
    int r = 0;
    for (int s = 0; s < S; ++s) {
      for (int c = 0; c < nx; ++c, r += per) {
        nlp.A_ineq.block(r, ox(s, c), per, M + 1) = rowmap;
        nlp.lo.segment(r, per).setConstant(ocp.x_lower[c]);
        nlp.hi.segment(r, per).setConstant(ocp.x_upper[c]);
      }
      for (int c = 0; c < nu; ++c, r += per) {
        nlp.A_ineq.block(r, ou(s, c), per, M + 1) = rowmap;
        nlp.lo.segment(r, per).setConstant(ocp.u_lower[c]);
        nlp.hi.segment(r, per).setConstant(ocp.u_upper[c]);
      }
    }
  }

  VariableLayout layout() const {
    VariableLayout l;
    for (int s = 0; s < S; ++s) {
      l.blocks.push_back({collocation_block("alpha_x", s), ox(s, 0), M + 1, nx});
      l.blocks.push_back({collocation_block("alpha_u", s), ou(s, 0), M + 1, nu});
    }
    return l;
  }
};

NlpProblem build_collocation(const OcpProblem& ocp, const CollocationConfig& cfg, bool envelope) {
  ocp.validate();
  check_collocation(ocp, cfg);
  auto ctx = std::make_shared<const Collocation>(ocp, cfg);

  NlpProblem nlp;
  nlp.n_vars = ctx->n_vars();
  nlp.objective = [ctx](const VectorXd& z) { return ctx->objective(z); };
  nlp.objective_gradient = [ctx](const VectorXd& z) { return ctx->gradient(z); };
  nlp.n_eq = ctx->n_eq();
  nlp.eq_constraints = [ctx](const VectorXd& z) { return ctx->eq(z); };
  nlp.eq_jacobian = [ctx](const VectorXd& z) { return ctx->eq_jacobian(z); };
  if (ocp.n_terminal > 0) {
    nlp.n_nl_ineq = ocp.n_terminal;
    nlp.nl_ineq_constraints = [ctx](const VectorXd& z) { return ctx->terminal_g(z); };
    nlp.nl_ineq_jacobian = [ctx](const VectorXd& z) { return ctx->terminal_g_jacobian(z); };
  }
  ctx->linear_rows(envelope ? ctx->env.C : ctx->Phi, nlp);
  nlp.layout = ctx->layout();
  return nlp;
}

struct Shooting {
  OcpProblem ocp;
  int K = 0;
  int sub = 1;
  int nx = 0;
  int nu = 0;
  double dt = 0.0;

  Shooting(const OcpProblem& p, const ShootingConfig& cfg)
      : ocp(p), K(cfg.steps), sub(cfg.substeps), nx(p.nx), nu(p.nu), dt((p.tf - p.t0) / cfg.steps) {}

  int n_vars() const { return nx * (K + 1) + nu * K; }
  int xi(int k) const { return k * nx; }
  int ui(int k) const { return nx * (K + 1) + k * nu; }
  Vec x(const VectorXd& z, int k) const { return z.segment(xi(k), nx); }
  Vec u(const VectorXd& z, int k) const { return z.segment(ui(k), nu); }

  double objective(const VectorXd& z) const {
    double J = 0.0;
    for (int k = 0; k < K; ++k) J += ocp.stage_cost(x(z, k), u(z, k)) * dt;
    return J + ocp.terminal(x(z, K));
  }

  VectorXd gradient(const VectorXd& z) const {
    VectorXd g = VectorXd::Zero(n_vars());
    for (int k = 0; k < K; ++k) {
      const auto cg = ocp.cost_gradient(x(z, k), u(z, k));
      g.segment(xi(k), nx) += dt * cg.dx;
      if (nu) g.segment(ui(k), nu) += dt * cg.du;
    }
    if (ocp.terminal_cost) g.segment(xi(K), nx) += ocp.terminal_gradient(x(z, K));
    return g;
  }

  VectorXd eq(const VectorXd& z) const {
    VectorXd c((K + 1) * nx);
    c.head(nx) = x(z, 0) - ocp.x0;
    for (int k = 0; k < K; ++k) {
      Vec xn = x(z, k);
      const Vec uk = u(z, k);
      for (int i = 0; i < sub; ++i) xn = rk4_step(ocp, xn, uk, dt / sub);
      c.segment((k + 1) * nx, nx) = x(z, k + 1) - xn;
    }
    return c;
  }

  Mat eq_jacobian(const VectorXd& z) const {
    Mat J = Mat::Zero((K + 1) * nx, n_vars());
    J.block(0, 0, nx, nx).setIdentity();
    for (int k = 0; k < K; ++k) {
      const auto sens = rk4_sensitivity(ocp, x(z, k), u(z, k), dt, sub);
      const int r = (k + 1) * nx;
      J.block(r, xi(k), nx, nx) = -sens.dx;
      J.block(r, xi(k + 1), nx, nx).setIdentity();
      if (nu) J.block(r, ui(k), nx, nu) = -sens.du;
    }
    return J;
  }

  VectorXd terminal_g(const VectorXd& z) const { return ocp.terminal_g(x(z, K)); }

  Mat terminal_g_jacobian(const VectorXd& z) const {
    Mat J = Mat::Zero(ocp.n_terminal, n_vars());
    J.block(0, xi(K), ocp.n_terminal, nx) = ocp.terminal_g_jacobian(x(z, K));
    return J;
  }
};

}  // namespace

std::string_view to_string(CollocationMode m) {
  switch (m) {
    case CollocationMode::kSocse: return "SOCSE";
    case CollocationMode::kSoc: return "SOC";
    case CollocationMode::kPseudospectral: return "PS";
  }
  return "unknown";
}

int CollocationConfig::resolved_nodes() const {
  if (nodes > 0) return nodes;
  return mode == CollocationMode::kPseudospectral ? degree + 1 : degree;
}

void check_collocation(const OcpProblem& ocp, const CollocationConfig& cfg) {
  if (cfg.degree < 1 || cfg.degree > kMaxDegree) {
    throw DomainError("spline degree must lie in [1, " + std::to_string(kMaxDegree) + "]");
  }
  if (cfg.segments < 1) throw DomainError("segments must be >= 1");
  const int N = cfg.resolved_nodes();
  if (N < 2) throw DomainError("at least two collocation nodes are required");
  if (cfg.mode == CollocationMode::kPseudospectral && N != cfg.degree + 1) {
    throw DomainError("pseudospectral mode uses N = M + 1 nodes");
  }
  const long lhs = static_cast<long>(ocp.nu + ocp.nx) * (cfg.degree + 1);
  const long rhs = static_cast<long>(ocp.nx) * (N + 1);
  if (lhs < rhs) throw DofViolation(lhs, rhs);
}

std::string collocation_block(std::string_view base, int segment) {
  std::string name(base);
  if (segment > 0) name += "[" + std::to_string(segment) + "]";
  return name;
}

NlpProblem transcribe_socse(const OcpProblem& ocp, const CollocationConfig& cfg) {
  return build_collocation(ocp, cfg, true);
}

NlpProblem transcribe_soc(const OcpProblem& ocp, const CollocationConfig& cfg) {
  return build_collocation(ocp, cfg, false);
}

NlpProblem transcribe_collocation(const OcpProblem& ocp, const CollocationConfig& cfg) {
  return cfg.mode == CollocationMode::kSocse ? transcribe_socse(ocp, cfg) : transcribe_soc(ocp, cfg);
}

NlpProblem transcribe_multiple_shooting(const OcpProblem& ocp, const ShootingConfig& cfg) {
  ocp.validate();
  if (cfg.steps < 1) throw DomainError("multiple shooting needs at least one step");
  if (cfg.substeps < 1) throw DomainError("substeps must be >= 1");
  auto ctx = std::make_shared<const Shooting>(ocp, cfg);
  const int K = cfg.steps;

  NlpProblem nlp;
  nlp.n_vars = ctx->n_vars();
  nlp.objective = [ctx](const VectorXd& z) { return ctx->objective(z); };
  nlp.objective_gradient = [ctx](const VectorXd& z) { return ctx->gradient(z); };
  nlp.n_eq = (K + 1) * ocp.nx;
  nlp.eq_constraints = [ctx](const VectorXd& z) { return ctx->eq(z); };
  nlp.eq_jacobian = [ctx](const VectorXd& z) { return ctx->eq_jacobian(z); };
  if (ocp.n_terminal > 0) {
    nlp.n_nl_ineq = ocp.n_terminal;
    nlp.nl_ineq_constraints = [ctx](const VectorXd& z) { return ctx->terminal_g(z); };
    nlp.nl_ineq_jacobian = [ctx](const VectorXd& z) { return ctx->terminal_g_jacobian(z); };
  }

  std::vector<std::tuple<int, double, double>> rows;
  for (int k = 0; k <= K; ++k) {
    for (int c = 0; c < ocp.nx; ++c) {
      if (std::isfinite(ocp.x_lower[c]) || std::isfinite(ocp.x_upper[c])) {
        rows.emplace_back(ctx->xi(k) + c, ocp.x_lower[c], ocp.x_upper[c]);
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < ocp.nu; ++c) {
      if (std::isfinite(ocp.u_lower[c]) || std::isfinite(ocp.u_upper[c])) {
        rows.emplace_back(ctx->ui(k) + c, ocp.u_lower[c], ocp.u_upper[c]);
      }
    }
  }
  const int m = static_cast<int>(rows.size());
  nlp.A_ineq = Mat::Zero(m, nlp.n_vars);
  nlp.lo.resize(m);
  nlp.hi.resize(m);
  for (int r = 0; r < m; ++r) {
    const auto& [col, lo, hi] = rows[r];
    nlp.A_ineq(r, col) = 1.0;
    nlp.lo[r] = lo;
    nlp.hi[r] = hi;
  }
  nlp.layout.blocks = {{"x", 0, ocp.nx, K + 1}, {"u", ctx->ui(0), ocp.nu, K}};
  return nlp;
}

SplineSolution decode(const VectorXd& z, const OcpProblem& ocp, const CollocationConfig& cfg) {
  check_collocation(ocp, cfg);
  const Collocation ctx(ocp, cfg);
  if (z.size() != ctx.n_vars()) {
    throw LayoutMismatch("decision vector has " + std::to_string(z.size()) + " entries, layout needs " +
                         std::to_string(ctx.n_vars()));
  }
  std::vector<SplineSegment> segs;
  for (int s = 0; s < ctx.S; ++s) {
    SplineSegment seg{ctx.ax(z, s), ctx.au(z, s), ctx.times[s], {}, {}};
    seg.x_bounds = spline_bounds(seg.alpha_x, ctx.env);
    seg.u_bounds = spline_bounds(seg.alpha_u, ctx.env);
    segs.push_back(std::move(seg));
  }
  return SplineSolution(cfg.degree, ctx.grid, std::move(segs), ctx.objective(z));
}

VectorXd encode(const SplineSolution& sol, const CollocationConfig& cfg) {
  const int M = cfg.degree;
  const int S = static_cast<int>(sol.segments().size());
  if (sol.degree() != M || S != cfg.segments) throw LayoutMismatch("solution does not match config");
  const int nx = sol.nx();
  const int nu = sol.nu();
  const int seg = (M + 1) * (nx + nu);
  VectorXd z(S * seg);
  for (int s = 0; s < S; ++s) {
    MutMap(z.data() + s * seg, M + 1, nx) = sol.segments()[s].alpha_x;
    MutMap(z.data() + s * seg + (M + 1) * nx, M + 1, nu) = sol.segments()[s].alpha_u;
  }
  return z;
}

ShootingSolution decode_shooting(const VectorXd& z, const OcpProblem& ocp, const ShootingConfig& cfg) {
  const Shooting ctx(ocp, cfg);
  if (z.size() != ctx.n_vars()) throw LayoutMismatch("decision vector does not match the shooting layout");
  const Mat X = ConstMap(z.data(), ocp.nx, cfg.steps + 1);
  const Mat U = ConstMap(z.data() + ctx.ui(0), ocp.nu, cfg.steps);
  return ShootingSolution(ocp, X, U, cfg.substeps, ctx.objective(z));
}

double collocation_residual(const SplineSolution& sol, const OcpProblem& ocp) {
  double worst = 0.0;
  for (const auto& seg : sol.segments()) {
    for (double tau : sol.grid().nodes) {
      const Vec x = eval_spline(seg.alpha_x, sol.basis(), tau);
      const Vec u = seg.alpha_u.cols() ? eval_spline(seg.alpha_u, sol.basis(), tau) : Vec(0);
      const Vec r = eval_spline_deriv(seg.alpha_x, sol.basis(), tau) - seg.time.scale() * ocp.dynamics(x, u);
      worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

Rk4Sensitivity rk4_sensitivity(const OcpProblem& ocp, const Vec& x, const Vec& u, double dt,
                               int substeps) {
  const int nx = ocp.nx;
  const int nu = ocp.nu;
  const double h = dt / substeps;
  Rk4Sensitivity out{x, Mat::Identity(nx, nx), Mat::Zero(nx, nu)};
  for (int s = 0; s < substeps; ++s) {
    const Vec x0 = out.x_next;
    // Stage derivatives with respect to the substep's starting state and u.
    const Vec k1 = ocp.dynamics(x0, u);
    const auto j1 = ocp.jacobians(x0, u);
    const Mat k1x = j1.dfdx;
    const Mat k1u = j1.dfdu;

    const Vec x2 = x0 + 0.5 * h * k1;
    const Vec k2 = ocp.dynamics(x2, u);
    const auto j2 = ocp.jacobians(x2, u);
    const Mat k2x = j2.dfdx * (Mat::Identity(nx, nx) + 0.5 * h * k1x);
    const Mat k2u = j2.dfdx * (0.5 * h * k1u) + j2.dfdu;

    const Vec x3 = x0 + 0.5 * h * k2;
    const Vec k3 = ocp.dynamics(x3, u);
    const auto j3 = ocp.jacobians(x3, u);
    const Mat k3x = j3.dfdx * (Mat::Identity(nx, nx) + 0.5 * h * k2x);
    const Mat k3u = j3.dfdx * (0.5 * h * k2u) + j3.dfdu;

    const Vec x4 = x0 + h * k3;
    const Vec k4 = ocp.dynamics(x4, u);
    const auto j4 = ocp.jacobians(x4, u);
    const Mat k4x = j4.dfdx * (Mat::Identity(nx, nx) + h * k3x);
    const Mat k4u = j4.dfdx * (h * k3u) + j4.dfdu;

    const Mat step_x = Mat::Identity(nx, nx) + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    const Mat step_u = h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    out.du = step_x * out.du + step_u;
    out.dx = step_x * out.dx;
    out.x_next = x0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

}  // namespace socse
