#pragma once

#include <Eigen/Dense>

#include "dcon/model.hpp"

namespace dcon {

// Sigma_{ji} = relu(<w_i, x_j> + b_i), m x N
Eigen::MatrixXd build_sigma(const Params& p, const Eigen::MatrixXd& X);

// argmin (1/m)||y - S a||^2 + (gamma/m)||a||^2, i.e. (S^T S + gamma I) a = S^T y
Eigen::VectorXd solve_alpha(const Eigen::MatrixXd& S, const Eigen::VectorXd& y, double gamma);

double alpha_objective(const Eigen::MatrixXd& S, const Eigen::VectorXd& y, double gamma,
                       const Eigen::VectorXd& a);

}  // namespace dcon
