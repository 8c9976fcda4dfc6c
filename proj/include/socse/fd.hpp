#pragma once

#include <Eigen/Dense>
#include <functional>

namespace socse {

/// Central-difference Jacobian, one column per variable. Throws DomainError if step <= 0.
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& z, double step = 1e-6);

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& z, double step = 1e-6);

}  // namespace socse
