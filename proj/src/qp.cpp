#include "socse/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "socse/errors.hpp"

namespace socse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

enum class Kind { kEq, kFixedRow, kLower, kUpper };

struct Constraint {
  Kind kind;
  int row;  // index into A_eq or A_ineq
};

// Working-set factorisation: J^T N_A = [R; 0], J J^T = H^{-1}.
class Factor {
 public:
  explicit Factor(const Eigen::MatrixXd& L) : n_(static_cast<int>(L.rows())) {
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n_, n_));
    R_ = Eigen::MatrixXd::Zero(n_, n_);
  }

  int size() const { return iq_; }

  // d = J^T np, primal direction z = J2 d2, dual direction r = R^{-1} d1.
  void directions(const Eigen::VectorXd& np, Eigen::VectorXd& d, Eigen::VectorXd& z,
                  Eigen::VectorXd& r) const {
    d = J_.transpose() * np;
    z = J_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
    r = R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d.head(iq_));
  }

  // Appends a normal whose d = J^T np is given. Returns false if it is
  // linearly dependent on the working set; the factor is left unchanged then.
  bool add(Eigen::VectorXd d) {
    if (iq_ >= n_) return false;
    for (int j = n_ - 1; j > iq_; --j) {
      const double h = std::hypot(d[j - 1], d[j]);
      if (h <= kEps * 1e-3) continue;
      const double c = d[j - 1] / h, s = d[j] / h;
      const Eigen::VectorXd a = J_.col(j - 1), b = J_.col(j);
      J_.col(j - 1) = c * a + s * b;
      J_.col(j) = -s * a + c * b;
      d[j - 1] = h;
      d[j] = 0.0;
    }
    if (std::abs(d[iq_]) <= 1e3 * kEps * r_norm_) {
      // Dependent: the column rotations only mixed free columns, so the
      // invariant still holds for the unchanged working set.
      return false;
    }
    R_.col(iq_).head(iq_ + 1) = d.head(iq_ + 1);
    r_norm_ = std::max(r_norm_, std::abs(d[iq_]));
    ++iq_;
    return true;
  }

  void remove(int pos) {
    for (int k = pos; k < iq_ - 1; ++k) R_.col(k) = R_.col(k + 1);
    R_.col(iq_ - 1).setZero();
    --iq_;
    for (int j = pos; j < iq_; ++j) {
      const double a = R_(j, j), b = R_(j + 1, j);
      const double h = std::hypot(a, b);
      if (h <= 0.0) continue;
      const double c = a / h, s = b / h;
      for (int k = j; k < iq_; ++k) {
        const double rj = R_(j, k), rj1 = R_(j + 1, k);
        R_(j, k) = c * rj + s * rj1;
        R_(j + 1, k) = -s * rj + c * rj1;
      }
      R_(j + 1, j) = 0.0;
      const Eigen::VectorXd ja = J_.col(j), jb = J_.col(j + 1);
      J_.col(j) = c * ja + s * jb;
      J_.col(j + 1) = -s * ja + c * jb;
    }
  }

 private:
  int n_;
  int iq_ = 0;
  double r_norm_ = 1.0;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
};

}  // namespace

std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kNotConvex: return "not_convex";
    case QpStatus::kCycling: return "cycling";
  }
  return "unknown";
}

double qp_max_violation(const QpProblem& qp, const Eigen::VectorXd& d) {
  double v = 0.0;
  if (qp.A_eq.rows() > 0) v = (qp.A_eq * d - qp.b_eq).cwiseAbs().maxCoeff();
  if (qp.A_ineq.rows() > 0) {
    const Eigen::VectorXd a = qp.A_ineq * d;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      v = std::max(v, std::max(qp.lo[i] - a[i], a[i] - qp.hi[i]));
    }
  }
  return v;
}

QpSolution qp_active_set(const QpProblem& qp, const ActiveSet& warm, const QpOptions& opts) {
  const int n = static_cast<int>(qp.H.rows());
  const int meq = static_cast<int>(qp.A_eq.rows());
  const int mi = static_cast<int>(qp.A_ineq.rows());
  if (qp.H.cols() != n || qp.g.size() != n || (meq > 0 && qp.A_eq.cols() != n) ||
      qp.b_eq.size() != meq || (mi > 0 && qp.A_ineq.cols() != n) || qp.lo.size() != mi ||
      qp.hi.size() != mi) {
    throw DimensionMismatch("qp_active_set: inconsistent problem dimensions");
  }

  QpSolution sol;
  sol.d = Eigen::VectorXd::Zero(n);
  sol.lambda_eq = Eigen::VectorXd::Zero(meq);
  sol.mu_ineq = Eigen::VectorXd::Zero(mi);
  sol.active.assign(mi, 0);

  const Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
  if (llt.info() != Eigen::Success) {
    sol.status = QpStatus::kNotConvex;
    return sol;
  }

  // Every constraint in the form n_k^T x >= b_k (inequalities) or = b_k.
  std::vector<Constraint> cons;
  for (int i = 0; i < meq; ++i) cons.push_back({Kind::kEq, i});
  for (int i = 0; i < mi; ++i) {
    if (qp.lo[i] > qp.hi[i]) {
      sol.status = QpStatus::kInfeasible;
      return sol;
    }
    if (qp.lo[i] == qp.hi[i]) {
      cons.push_back({Kind::kFixedRow, i});
      continue;
    }
    if (std::isfinite(qp.lo[i])) cons.push_back({Kind::kLower, i});
    if (std::isfinite(qp.hi[i])) cons.push_back({Kind::kUpper, i});
  }
  const int mc = static_cast<int>(cons.size());
  Eigen::MatrixXd N(n, mc);
  Eigen::VectorXd b(mc);
  for (int k = 0; k < mc; ++k) {
    const auto& c = cons[k];
    switch (c.kind) {
      case Kind::kEq:
        N.col(k) = qp.A_eq.row(c.row).transpose();
        b[k] = qp.b_eq[c.row];
        break;
      case Kind::kFixedRow:
      case Kind::kLower:
        N.col(k) = qp.A_ineq.row(c.row).transpose();
        b[k] = qp.lo[c.row];
        break;
      case Kind::kUpper:
        N.col(k) = -qp.A_ineq.row(c.row).transpose();
        b[k] = -qp.hi[c.row];
        break;
    }
  }
  const Eigen::VectorXd col_norm = N.colwise().norm().transpose();
  std::vector<bool> preferred(mc, false);
  if (static_cast<int>(warm.size()) == mi) {
    for (int k = 0; k < mc; ++k) {
      const auto& c = cons[k];
      if ((c.kind == Kind::kLower && warm[c.row] < 0) || (c.kind == Kind::kUpper && warm[c.row] > 0)) {
        preferred[k] = true;
      }
    }
  }

  Factor F(llt.matrixL());
  Eigen::VectorXd x = -llt.solve(qp.g);
  std::vector<int> act;      // constraint ids, equalities first
  std::vector<double> u;     // multipliers of act
  int n_eq_active = 0;
  Eigen::VectorXd d, z, r;

  auto tol_for = [&](int k) {
    return opts.feasibility_tol * (1.0 + std::abs(b[k]) + col_norm[k] * x.lpNorm<Eigen::Infinity>());
  };

  // Equalities.
  for (int k = 0; k < mc; ++k) {
    if (cons[k].kind != Kind::kEq && cons[k].kind != Kind::kFixedRow) continue;
    const Eigen::VectorXd np = N.col(k);
    F.directions(np, d, z, r);
    const double znp = z.dot(np);
    const double res = b[k] - np.dot(x);
    if (znp <= 1e-14 * std::max(1.0, d.squaredNorm())) {
      if (std::abs(res) > tol_for(k)) {
        sol.status = QpStatus::kInfeasible;
        return sol;
      }
      continue;  // redundant row, multiplier stays zero
    }
    const double t = res / znp;
    x += t * z;
    for (int i = 0; i < F.size(); ++i) u[i] -= t * r[i];
    if (!F.add(d)) {
      sol.status = QpStatus::kInfeasible;
      return sol;
    }
    act.push_back(k);
    u.push_back(t);
    ++n_eq_active;
  }

  std::vector<bool> in_set(mc, false);
  std::vector<bool> excluded(mc, false);
  for (int k : act) in_set[k] = true;

  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations : 20 * (n + mc) + 100;
  int iter = 0;

  auto rebuild = [&](const std::vector<int>& set, const std::vector<double>& mult) {
    F = Factor(llt.matrixL());
    act.clear();
    u.clear();
    std::fill(in_set.begin(), in_set.end(), false);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const Eigen::VectorXd np = N.col(set[i]);
      d = [&] {
        Eigen::VectorXd dd, zz, rr;
        F.directions(np, dd, zz, rr);
        return dd;
      }();
      if (F.add(d)) {
        act.push_back(set[i]);
        u.push_back(mult[i]);
        in_set[set[i]] = true;
      }
    }
  };

  while (true) {
    if (++iter > max_iter) {
      sol.status = QpStatus::kCycling;
      break;
    }
    // Step 1: pick the most violated inactive constraint, warm-set rows first.
    int p = -1;
    double worst = 0.0;
    bool worst_pref = false;
    for (int k = 0; k < mc; ++k) {
      if (in_set[k] || excluded[k] || cons[k].kind == Kind::kEq || cons[k].kind == Kind::kFixedRow) {
        continue;
      }
      const double s = N.col(k).dot(x) - b[k];
      if (s >= -tol_for(k)) continue;
      const double scaled = s / std::max(col_norm[k], 1e-300);
      if (p < 0 || (preferred[k] && !worst_pref) ||
          (preferred[k] == worst_pref && scaled < worst)) {
        p = k;
        worst = scaled;
        worst_pref = preferred[k];
      }
    }
    if (p < 0) {
      sol.status = QpStatus::kOptimal;
      for (int k = 0; k < mc; ++k) {
        if (excluded[k] && N.col(k).dot(x) - b[k] < -tol_for(k)) sol.status = QpStatus::kInfeasible;
      }
      break;
    }

    const Eigen::VectorXd x_old = x;
    const std::vector<int> act_old = act;
    const std::vector<double> u_old = u;
    const Eigen::VectorXd np = N.col(p);
    double s_p = np.dot(x) - b[p];
    double u_p = 0.0;
    bool restart = false;

    // Step 2: move towards satisfying constraint p.
    while (true) {
      if (++iter > max_iter) break;
      F.directions(np, d, z, r);
      double t1 = kInf;
      int drop_pos = -1;
      for (int i = n_eq_active; i < F.size(); ++i) {
        if (r[i] > 0.0) {
          const double ratio = u[i] / r[i];
          if (ratio < t1) {
            t1 = ratio;
            drop_pos = i;
          }
        }
      }
      const double znp = z.dot(np);
      const bool primal_step = znp > 1e-14 * std::max(1.0, d.squaredNorm());
      const double t2 = primal_step ? -s_p / znp : kInf;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        sol.status = QpStatus::kInfeasible;
        sol.d = x;
        return sol;
      }
      for (int i = 0; i < F.size(); ++i) u[i] -= t * r[i];
      u_p += t;
      if (!primal_step) {
        in_set[act[drop_pos]] = false;
        act.erase(act.begin() + drop_pos);
        u.erase(u.begin() + drop_pos);
        F.remove(drop_pos);
        continue;
      }
      x += t * z;
      if (t2 <= t1) {
        if (F.add(d)) {
          act.push_back(p);
          u.push_back(u_p);
          in_set[p] = true;
        } else {
          excluded[p] = true;
          x = x_old;
          rebuild(act_old, u_old);
          restart = true;
        }
        break;
      }
      in_set[act[drop_pos]] = false;
      act.erase(act.begin() + drop_pos);
      u.erase(u.begin() + drop_pos);
      F.remove(drop_pos);
      s_p = np.dot(x) - b[p];
    }
    if (iter > max_iter) {
      sol.status = QpStatus::kCycling;
      break;
    }
    if (!restart) std::fill(excluded.begin(), excluded.end(), false);
  }

  sol.iterations = iter;
  sol.d = x;
  for (std::size_t i = 0; i < act.size(); ++i) {
    const auto& c = cons[act[i]];
    switch (c.kind) {
      case Kind::kEq: sol.lambda_eq[c.row] = -u[i]; break;
      case Kind::kFixedRow:
        sol.mu_ineq[c.row] = -u[i];
        sol.active[c.row] = -1;
        break;
      case Kind::kLower:
        sol.mu_ineq[c.row] = -u[i];
        sol.active[c.row] = -1;
        break;
      case Kind::kUpper:
        sol.mu_ineq[c.row] = u[i];
        sol.active[c.row] = 1;
        break;
    }
  }
  sol.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
  return sol;
}

}  // namespace socse
