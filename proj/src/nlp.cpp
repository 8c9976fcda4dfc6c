#include "socse/nlp.hpp"

#include <string>

#include "socse/errors.hpp"

namespace socse {

int VariableLayout::size() const {
  int n = 0;
  for (const auto& b : blocks) n = std::max(n, b.offset + b.size());
  return n;
}

const VariableBlock& VariableLayout::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw LayoutMismatch("no variable block named '" + name + "'");
}

Eigen::MatrixXd VariableLayout::extract(const Eigen::VectorXd& z, const std::string& name) const {
  const auto& b = block(name);
  if (b.offset + b.size() > z.size()) {
    throw LayoutMismatch("decision vector too short for block '" + name + "'");
  }
  Eigen::MatrixXd out(b.rows, b.cols);
  for (int j = 0; j < b.cols; ++j)
    for (int i = 0; i < b.rows; ++i) out(i, j) = z[b.index(i, j)];
  return out;
}

void VariableLayout::insert(Eigen::VectorXd& z, const std::string& name,
                            const Eigen::MatrixXd& value) const {
  const auto& b = block(name);
  if (value.rows() != b.rows || value.cols() != b.cols) {
    throw LayoutMismatch("shape mismatch for block '" + name + "'");
  }
  if (b.offset + b.size() > z.size()) {
    throw LayoutMismatch("decision vector too short for block '" + name + "'");
  }
  for (int j = 0; j < b.cols; ++j)
    for (int i = 0; i < b.rows; ++i) z[b.index(i, j)] = value(i, j);
}

void NlpProblem::validate() const {
  if (n_vars <= 0) throw DimensionMismatch("NLP has no variables");
  if (!objective) throw DimensionMismatch("NLP objective missing");
  if (n_eq > 0 && !eq_constraints) throw DimensionMismatch("equality callback missing");
  if (n_nl_ineq > 0 && !nl_ineq_constraints) throw DimensionMismatch("inequality callback missing");
  const auto m = A_ineq.rows();
  if (m > 0 && A_ineq.cols() != n_vars) throw DimensionMismatch("A_ineq column count");
  if (lo.size() != m || hi.size() != m) throw DimensionMismatch("inequality bound sizes");
  if (!layout.blocks.empty() && layout.size() != n_vars) {
    throw LayoutMismatch("layout covers " + std::to_string(layout.size()) + " variables, NLP has " +
                         std::to_string(n_vars));
  }
}

}  // namespace socse
