#include "dcon/dca.hpp"

#include <cmath>
#include <sstream>

#include "dcon/errors.hpp"

namespace dcon {

void DcaConfig::validate() const {
    if (max_iters < 1) throw validation_error("DCA iteration cap must be at least 1");
    if (!(iterate_tol > 0.0) || !(cert_tol > 0.0) || !(zero_activation_delta > 0.0))
        throw validation_error("DCA tolerances must be positive");
    if (restart_vertex_cap < 0 || restart_vertex_cap > 24) throw validation_error("restart vertex cap out of range");
}

Eigen::VectorXd subgrad_h(const DcWeights& dw, const Dataset& d, const Eigen::VectorXd& z) {
    const Eigen::VectorXd s = preactivation(d.X, z);
    Eigen::VectorXd coef(s.size());
    for (Eigen::Index j = 0; j < s.size(); ++j) coef(j) = dw.beta_h(j) * heaviside(s(j));
    Eigen::VectorXd y(d.n() + 1);
    y.head(d.n()) = d.X.transpose() * coef;
    y(d.n()) = coef.sum();
    return y;
}

Eigen::VectorXd subgrad_g_star(const QpSolution& sol) {
    if (!sol.converged) throw numerical_error("subgradient of g* requested from a non-converged QP solve");
    return sol.v3 - sol.v4;
}

namespace {

// One DCA pass from z with an optional prescribed first subgradient.
void dca_pass(const DcWeights& dw, const Dataset& d, const DesignMatrix& dm, const LossConfig& c,
              const DcaConfig& cfg, AdmmSolver& solver, DcaState& st, const Eigen::VectorXd* y_first) {
    double obj = st.objective.back();
    Eigen::VectorXd y_prev;
    bool have_prev = false;
    st.stop = DcaStop::max_iters;
    for (int k = 0; k < cfg.max_iters; ++k) {
        const Eigen::VectorXd y = (k == 0 && y_first) ? *y_first : subgrad_h(dw, d, st.z);
        if (have_prev && y == y_prev) {
            // argmin g - <y, .> is unique, so the next iterate would repeat the current one
            st.stop = DcaStop::fixed_point;
            break;
        }
        const QpProblem qp = build_qp(dm, dw.alpha_l, c.gamma, dw.beta_g, y);
        const QpSolution sol = solver.solve(qp);
        if (!sol.converged) {
            std::ostringstream msg;
            msg << "QP for neuron " << dw.l << " did not converge in " << sol.iterations
                << " ADMM iterations (residuals " << sol.primal_residual << ", " << sol.dual_residual << ")";
            throw numerical_error(msg.str());
        }
        const Eigen::VectorXd z_new = subgrad_g_star(sol);
        const double obj_new = eval_dc(dw, d, c, z_new);
        if (!std::isfinite(obj_new) || obj_new > obj + cfg.descent_slack * (1.0 + std::abs(obj))) {
            if (!sol.polished) {
                st.stop = DcaStop::rejected_step;
                break;
            }
            std::ostringstream msg;
            msg.precision(17);
            msg << "DCA objective increased for neuron " << dw.l << ": " << obj << " -> " << obj_new
                << " after an exact QP solve";
            throw numerical_error(msg.str());
        }
        const double step = (z_new - st.z).norm();
        st.z = z_new;
        st.y_star = y;
        y_prev = y;
        have_prev = true;
        obj = obj_new;
        st.objective.push_back(obj);
        ++st.iterations;
        if (step < cfg.iterate_tol) {
            st.stop = DcaStop::iterate_tol;
            break;
        }
    }
}

// Box-constrained least squares min ||A e - a|| over e in [0,1]^k by projected gradient.
double box_distance(const Eigen::MatrixXd& A, const Eigen::VectorXd& a, int iters) {
    if (A.cols() == 0) return a.norm();
    const double L = 2.0 * (A.rows() <= A.cols() ? (A * A.transpose()).eigenvalues().real().maxCoeff()
                                                : (A.transpose() * A).eigenvalues().real().maxCoeff());
    if (!(L > 0.0)) return a.norm();
    Eigen::VectorXd e = Eigen::VectorXd::Constant(A.cols(), 0.5);
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd g = 2.0 * A.transpose() * (A * e - a);
        const Eigen::VectorXd next = (e - g / L).cwiseMax(0.0).cwiseMin(1.0);
        const double moved = (next - e).norm();
        e = next;
        if (moved < 1e-15) break;
    }
    return (A * e - a).norm();
}

}  // namespace

DcaState run_dca(const DcWeights& dw, const Dataset& d, const DesignMatrix& dm, const LossConfig& c,
                 const Eigen::VectorXd& z0, const DcaConfig& cfg, AdmmSolver& solver,
                 const Eigen::VectorXd* y0) {
    cfg.validate();
    DcaState st;
    st.l = dw.l;
    if (dw.alpha_l == 0.0) {
        st.z = Eigen::VectorXd::Zero(d.n() + 1);
        st.y_star = Eigen::VectorXd::Zero(d.n() + 1);
        st.objective.push_back(eval_dc(dw, d, c, st.z));
        st.stop = DcaStop::alpha_zero;
        return st;
    }
    st.z = z0;
    st.y_star = Eigen::VectorXd::Zero(d.n() + 1);
    st.objective.push_back(eval_dc(dw, d, c, z0));
    dca_pass(dw, d, dm, c, cfg, solver, st, y0);

    if (!cfg.restart_enabled) return st;
    while (st.restarts < cfg.max_restarts && (st.stop == DcaStop::fixed_point || st.stop == DcaStop::iterate_tol)) {
        const CertResult cert = certify_local(dw, d, c, st.z, cfg);
        if (cert.status != CertStatus::restart_point) break;
        DcaState trial = st;
        dca_pass(dw, d, dm, c, cfg, solver, trial, &cert.y0);
        ++st.restarts;
        if (!(trial.objective.back() < st.objective.back())) break;
        trial.restarts = st.restarts;
        st = std::move(trial);
    }
    return st;
}

DcaState solve_dc_subproblem(const Params& p, const Dataset& d, const DesignMatrix& dm, const LossConfig& c,
                             int l, const DcaConfig& cfg, AdmmSolver& solver) {
    const DcWeights dw = compute_betas(p, d, l);
    return run_dca(dw, d, dm, c, p.block(l), cfg, solver);
}

DcaState solve_dc_subproblem(const Params& p, const Dataset& d, const DesignMatrix& dm, const LossConfig& c,
                             int l, const DcaConfig& cfg, const AdmmConfig& qp_cfg) {
    AdmmSolver solver(dm, qp_cfg);
    return solve_dc_subproblem(p, d, dm, c, l, cfg, solver);
}

CertResult certify_local(const DcWeights& dw, const Dataset& d, const LossConfig& c,
                         const Eigen::VectorXd& z_star, const DcaConfig& cfg) {
    const int m = d.m(), k = d.n() + 1;
    const Eigen::VectorXd s = preactivation(d.X, z_star);
    CertResult res;
    std::vector<int> J;
    for (int j = 0; j < m; ++j)
        if (std::abs(s(j)) <= cfg.zero_activation_delta) J.push_back(j);
    res.zero_set_size = static_cast<int>(J.size());
    if (J.empty()) return res;
    if (res.zero_set_size > cfg.restart_vertex_cap) {
        res.status = CertStatus::inconclusive;
        return res;
    }

    auto row = [&](int j) {
        Eigen::VectorXd x(k);
        x.head(d.n()) = d.X.row(j).transpose();
        x(d.n()) = 1.0;
        return x;
    };
    std::vector<char> inJ(m, 0);
    for (int j : J) inJ[j] = 1;
    const double a2 = dw.alpha_l * dw.alpha_l;
    Eigen::VectorXd q_g = Eigen::VectorXd::Zero(k), q_h = Eigen::VectorXd::Zero(k), q = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd x = row(j);
        const double H = heaviside(s(j));
        q += (2.0 * a2 / m * H * s(j) + 2.0 * c.gamma / m * s(j)) * x;
        if (inJ[j]) continue;
        q_g += dw.beta_g(j) * H * x;
        q_h += dw.beta_h(j) * H * x;
    }
    Eigen::MatrixXd Mg(k, res.zero_set_size), Mh(k, res.zero_set_size);
    for (int i = 0; i < res.zero_set_size; ++i) {
        Mg.col(i) = dw.beta_g(J[i]) * row(J[i]);
        Mh.col(i) = dw.beta_h(J[i]) * row(J[i]);
    }

    const long vertices = 1L << res.zero_set_size;
    double best = -1.0;
    Eigen::VectorXd best_y;
    for (long mask = 0; mask < vertices; ++mask) {
        Eigen::VectorXd yh = q_h;
        for (int i = 0; i < res.zero_set_size; ++i)
            if (mask & (1L << i)) yh += Mh.col(i);
        const double dist = box_distance(Mg, yh - q_g - q, 2000);
        if (dist > best) {
            best = dist;
            best_y = yh;
        }
    }
    res.max_distance = best;
    if (best > cfg.cert_tol) {
        res.status = CertStatus::restart_point;
        res.y0 = best_y;
    }
    return res;
}

CertResult certify_local(const Params& p, const Dataset& d, const LossConfig& c, int l,
                         const Eigen::VectorXd& z_star, const DcaConfig& cfg) {
    return certify_local(compute_betas(p, d, l), d, c, z_star, cfg);
}

}  // namespace dcon
