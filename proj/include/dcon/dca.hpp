#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dcon/data.hpp"
#include "dcon/model.hpp"
#include "dcon/qp.hpp"

namespace dcon {

struct DcaConfig {
    int max_iters = 50;          // K, a hard cap
    double iterate_tol = 1e-12;
    bool restart_enabled = false;
    int restart_vertex_cap = 12;
    int max_restarts = 5;
    double zero_activation_delta = 1e-6;
    double cert_tol = 1e-6;
    double descent_slack = 1e-9;

    void validate() const;
};

// rejected_step: an unpolished QP solution would have raised the objective, so the pass
// stopped at the last accepted iterate.
enum class DcaStop { alpha_zero, iterate_tol, fixed_point, max_iters, rejected_step };

struct DcaState {
    int l = 0;
    Eigen::VectorXd z;       // current (w_l, b_l)
    Eigen::VectorXd y_star;  // last subgradient of h
    int iterations = 0;
    int restarts = 0;
    std::vector<double> objective;  // O^DC along the run, starting at z0
    DcaStop stop = DcaStop::max_iters;
};

enum class CertStatus { certified, restart_point, inconclusive };

struct CertResult {
    CertStatus status = CertStatus::certified;
    Eigen::VectorXd y0;        // set for restart_point
    double max_distance = 0.0;  // largest vertex distance seen
    int zero_set_size = 0;
};

Eigen::VectorXd subgrad_h(const DcWeights& dw, const Dataset& d, const Eigen::VectorXd& z);
Eigen::VectorXd subgrad_g_star(const QpSolution& sol);

// Runs DCA on the l-th subproblem with every other block of p frozen.
DcaState solve_dc_subproblem(const Params& p, const Dataset& d, const DesignMatrix& dm,
                             const LossConfig& c, int l, const DcaConfig& cfg, AdmmSolver& solver);
DcaState solve_dc_subproblem(const Params& p, const Dataset& d, const DesignMatrix& dm,
                             const LossConfig& c, int l, const DcaConfig& cfg,
                             const AdmmConfig& qp_cfg = {});

// Same iteration on explicitly supplied weights, starting from z0 (and y0 when given).
DcaState run_dca(const DcWeights& dw, const Dataset& d, const DesignMatrix& dm, const LossConfig& c,
                 const Eigen::VectorXd& z0, const DcaConfig& cfg, AdmmSolver& solver,
                 const Eigen::VectorXd* y0 = nullptr);

CertResult certify_local(const DcWeights& dw, const Dataset& d, const LossConfig& c,
                         const Eigen::VectorXd& z_star, const DcaConfig& cfg);
CertResult certify_local(const Params& p, const Dataset& d, const LossConfig& c, int l,
                         const Eigen::VectorXd& z_star, const DcaConfig& cfg);

}  // namespace dcon
