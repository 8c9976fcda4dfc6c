#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace socse {

/// A named matrix-shaped block of the decision vector, stored column-major:
/// entry (i, j) lives at z[offset + j * rows + i].
struct VariableBlock {
  std::string name;
  int offset = 0;
  int rows = 0;
  int cols = 0;

  int size() const { return rows * cols; }
  int index(int i, int j) const { return offset + j * rows + i; }
};

struct VariableLayout {
  std::vector<VariableBlock> blocks;

  int size() const;
  const VariableBlock& block(const std::string& name) const;
  Eigen::MatrixXd extract(const Eigen::VectorXd& z, const std::string& name) const;
  void insert(Eigen::VectorXd& z, const std::string& name, const Eigen::MatrixXd& value) const;
};

/// Dense NLP
///   min f(z)  s.t.  c(z) = 0,  g(z) <= 0,  lo <= A_ineq z <= hi.
/// Missing gradient/Jacobian callbacks are replaced by central differences.
struct NlpProblem {
  int n_vars = 0;

  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> objective_gradient;

  int n_eq = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eq_constraints;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> eq_jacobian;

  int n_nl_ineq = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> nl_ineq_constraints;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> nl_ineq_jacobian;

  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  VariableLayout layout;

  /// Throws DimensionMismatch when sizes disagree.
  void validate() const;
};

}  // namespace socse
