#include "dcon/alpha.hpp"

#include "dcon/errors.hpp"

namespace dcon {

Eigen::MatrixXd build_sigma(const Params& p, const Eigen::MatrixXd& X) {
    return preactivations(p, X).unaryExpr([](double v) { return relu(v); });
}

Eigen::VectorXd solve_alpha(const Eigen::MatrixXd& S, const Eigen::VectorXd& y, double gamma) {
    if (!(gamma > 0.0)) throw validation_error("alpha subproblem needs gamma > 0");
    if (S.rows() != y.size()) throw validation_error("Sigma and y disagree on the number of samples");
    // S = U diag(s) V^T  =>  a = V diag(s / (s^2 + gamma)) U^T y
    Eigen::BDCSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const Eigen::VectorXd filt = s.array() / (s.array().square() + gamma);
    Eigen::VectorXd a = svd.matrixV() * filt.cwiseProduct(svd.matrixU().transpose() * y);
    if (!a.allFinite()) throw numerical_error("alpha solve produced non-finite weights");
    return a;
}

double alpha_objective(const Eigen::MatrixXd& S, const Eigen::VectorXd& y, double gamma,
                       const Eigen::VectorXd& a) {
    const double m = static_cast<double>(y.size());
    return (y - S * a).squaredNorm() / m + gamma / m * a.squaredNorm();
}

}  // namespace dcon
