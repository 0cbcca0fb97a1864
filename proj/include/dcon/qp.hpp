#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dcon/data.hpp"

namespace dcon {

// min <q, v> + 1/2 v^T Q v  s.t.  -v1 + v2 + M (v3 - v4) = 0,  v >= 0
// with q = (beta_g - d, d, 0, 0), M^T d = y*, and
// Q = (2/m) [[(alpha^2+gamma) I, -gamma I], [-gamma I, gamma I]] on (v1, v2), zero elsewhere.
// Q and A are never formed; the dense versions live in the tests only.
struct QpProblem {
    const DesignMatrix* dm = nullptr;
    int m = 0;
    int n = 0;
    double alpha_l = 0.0;
    double gamma = 0.0;
    Eigen::VectorXd beta_g;  // m
    Eigen::VectorXd y_star;  // n+1
    Eigen::VectorXd d;       // m, minimum-norm solution of M^T d = y*

    int dim() const { return 2 * m + 2 * (n + 1); }
    Eigen::VectorXd q() const;
    Eigen::VectorXd apply_Q(const Eigen::VectorXd& v) const;
    double objective(const Eigen::VectorXd& v) const;
    Eigen::VectorXd constraint_residual(const Eigen::VectorXd& v) const;  // A v
};

struct QpSolution {
    Eigen::VectorXd v1, v2;  // m
    Eigen::VectorXd v3, v4;  // n+1
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = false;
    bool polished = false;

    Eigen::VectorXd stacked() const;
    Eigen::VectorXd z() const { return v3 - v4; }
};

struct AdmmConfig {
    // With scale_rho the penalty is rho * 2 (alpha^2 + gamma) / m, the diagonal of Q on v1.
    double rho = 5.0;
    bool scale_rho = true;
    double relax = 1.4;
    int max_iters = 20000;
    double residual_tol = 1e-3;
    // After the residual test passes, guess the active set from the iterate and solve the
    // reduced equality-constrained problem exactly. Kept only if it passes a KKT check;
    // otherwise ADMM keeps iterating with a tenfold tighter tolerance and tries again.
    bool polish = true;
    double polish_tol = 1e-10;
    int polish_rounds = 8;  // active-set corrections per polish attempt
    // Residual balancing: every adapt_interval iterations rho is rescaled by
    // sqrt(relative primal / relative dual residual) when that ratio leaves [1/5, 5].
    bool adaptive_rho = true;
    int adapt_interval = 25;

    void validate() const;
};

inline constexpr double feas_tol = 1e-6;
inline constexpr double comp_tol = 1e-5;
inline constexpr double proj_tol = 1e-8;

// Columns are the minimum-norm solutions of M^T D_p = e_p.
Eigen::MatrixXd solve_deltas(const DesignMatrix& dm);
Eigen::VectorXd lift_ystar(const DesignMatrix& dm, const Eigen::VectorXd& y_star);

QpProblem build_qp(const DesignMatrix& dm, double alpha_l, double gamma,
                   const Eigen::VectorXd& beta_g, const Eigen::VectorXd& y_star);

// Stateful: keeps z, u between solves as a warm start. One instance per neuron.
class AdmmSolver {
public:
    AdmmSolver(const DesignMatrix& dm, AdmmConfig cfg = {});

    QpSolution solve(const QpProblem& qp);
    void reset();
    const AdmmConfig& config() const { return cfg_; }
    long total_iterations() const { return total_iters_; }
    double current_rho() const { return rho_; }

private:
    struct Factor {
        double alpha = 0.0, gamma = 0.0, rho = 0.0;
        double g1 = 0, g2 = 0, g3 = 0;
        Eigen::VectorXd dinv_shift;  // 1/(c0 + 2 xi4^2 s_i^2) - 1/c0
        double inv_c0 = 0;
    };

    void factor(double alpha, double gamma);
    void linear_solve(const QpProblem& qp, const Eigen::VectorXd& w, Eigen::VectorXd& v) const;
    bool try_polish(const QpProblem& qp, const Eigen::VectorXd& v, QpSolution& out) const;
    bool polish_from(const QpProblem& qp, std::vector<int> cls, QpSolution& out) const;

    const DesignMatrix* dm_;
    AdmmConfig cfg_;
    Factor f_;
    bool have_factor_ = false;
    Eigen::VectorXd z_, u_;
    double rho_ = 0.0;
    long total_iters_ = 0;
};

QpSolution solve_admm(const QpProblem& qp, const AdmmConfig& cfg = {});

// g*(y*) = -(optimal value). Throws numerical_error on a non-converged solution.
double conjugate_value(const QpProblem& qp, const QpSolution& sol);

}  // namespace dcon
