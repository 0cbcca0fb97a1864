#pragma once

#include <Eigen/Dense>

#include "dcon/data.hpp"

namespace dcon {

struct Params {
    Eigen::VectorXd alpha;  // N
    Eigen::MatrixXd W;      // N x n
    Eigen::VectorXd b;      // N

    int N() const { return static_cast<int>(alpha.size()); }
    int n() const { return static_cast<int>(W.cols()); }

    // (alpha, W row by row, b); length (n+2)N
    Eigen::VectorXd flatten() const;
    static Params unflatten(const Eigen::VectorXd& theta, int N, int n);

    Eigen::VectorXd block(int l) const;  // (w_l, b_l)
    void set_block(int l, const Eigen::VectorXd& z);

    void validate() const;
};

Params zero_params(int N, int n);

struct LossConfig {
    double gamma = 1e-3;
};

// Coefficients of the l-th DC split, plus the output weight they were built from.
struct DcWeights {
    int l = 0;
    double alpha_l = 0.0;
    Eigen::VectorXd beta_g;
    Eigen::VectorXd beta_h;
};

struct SubdiffElement {
    Eigen::MatrixXd blocks;   // N x (n+1), row l = (v_{l,1..n}, v_l)
    Eigen::VectorXd v_alpha;  // N
    Eigen::MatrixXd eps_g;    // m x N
    Eigen::MatrixXd eps_h;    // m x N
    // Pairing condition at zero activations:
    // 0 <= beta_g eps_g - beta_h eps_h <= beta_g - beta_h. Reported, not enforced.
    bool pairing_holds = true;

    Eigen::VectorXd flatten() const;
    double norm() const { return flatten().norm(); }
};

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double heaviside(double x) { return x >= 0.0 ? 1.0 : 0.0; }

// <w, x_j> + b for every row; the single place pre-activations are formed,
// so sign decisions at zero are consistent across modules.
Eigen::VectorXd preactivation(const Eigen::MatrixXd& X, const Eigen::VectorXd& z);
Eigen::MatrixXd preactivations(const Params& p, const Eigen::MatrixXd& X);  // m x N

double predict(const Params& p, const Eigen::VectorXd& x);
Eigen::VectorXd predict_all(const Params& p, const Eigen::MatrixXd& X);

double reg_loss(const Params& p, const Dataset& d, const LossConfig& c);

DcWeights compute_betas(const Params& p, const Dataset& d, int l);

// z = (w, b) of length n+1
double eval_g(const DcWeights& dw, const Dataset& d, const LossConfig& c, const Eigen::VectorXd& z);
double eval_h(const DcWeights& dw, const Dataset& d, const Eigen::VectorXd& z);
inline double eval_dc(const DcWeights& dw, const Dataset& d, const LossConfig& c,
                      const Eigen::VectorXd& z) {
    return eval_g(dw, d, c, z) - eval_h(dw, d, z);
}

// Throws validation_error when eps leaves [0,1] or is not 1 at a nonzero activation.
SubdiffElement subdiff_element(const Params& p, const Dataset& d, const LossConfig& c,
                               const Eigen::MatrixXd& eps_g, const Eigen::MatrixXd& eps_h);

}  // namespace dcon
