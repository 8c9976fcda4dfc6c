#include "socse/fd.hpp"

#include "socse/errors.hpp"

namespace socse {

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& z, double step) {
  if (!(step > 0.0)) throw DomainError("fd_jacobian: step must be positive");
  Eigen::VectorXd zp = z;
  Eigen::MatrixXd J;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    zp[j] = z[j] + step;
    const Eigen::VectorXd fp = fn(zp);
    zp[j] = z[j] - step;
    const Eigen::VectorXd fm = fn(zp);
    zp[j] = z[j];
    if (j == 0) J.resize(fp.size(), z.size());
    J.col(j) = (fp - fm) / (2.0 * step);
  }
  if (z.size() == 0) J.resize(fn(z).size(), 0);
  return J;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& z, double step) {
  if (!(step > 0.0)) throw DomainError("fd_gradient: step must be positive");
  Eigen::VectorXd zp = z;
  Eigen::VectorXd g(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    zp[j] = z[j] + step;
    const double fp = fn(zp);
    zp[j] = z[j] - step;
    const double fm = fn(zp);
    zp[j] = z[j];
    g[j] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace socse
