#pragma once

#include <Eigen/Dense>

namespace dcon {

struct BvlsResult {
    Eigen::VectorXd t;
    double residual_norm = 0.0;  // ||A t - r||
    int iterations = 0;
    bool optimal = false;        // KKT conditions met at exit
};

// min 1/2 ||A t - r||^2  s.t.  lo <= t <= hi, by an active-set method in the style of
// Lawson-Hanson NNLS extended to two-sided bounds.
BvlsResult bvls(const Eigen::MatrixXd& A, const Eigen::VectorXd& r, const Eigen::VectorXd& lo,
                const Eigen::VectorXd& hi, int max_iters = 0);

}  // namespace dcon
