#include "dcon/qp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "dcon/bvls.hpp"
#include "dcon/errors.hpp"

namespace dcon {

Eigen::VectorXd QpProblem::q() const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
    out.segment(0, m) = beta_g - d;
    out.segment(m, m) = d;
    return out;
}

Eigen::VectorXd QpProblem::apply_Q(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
    const auto v1 = v.segment(0, m);
    const auto v2 = v.segment(m, m);
    const double s = 2.0 / m;
    out.segment(0, m) = s * ((alpha_l * alpha_l + gamma) * v1 - gamma * v2);
    out.segment(m, m) = s * (gamma * v2 - gamma * v1);
    return out;
}

double QpProblem::objective(const Eigen::VectorXd& v) const {
    const auto v1 = v.segment(0, m);
    const auto v2 = v.segment(m, m);
    const double quad = ((alpha_l * alpha_l + gamma) * v1.squaredNorm() - 2.0 * gamma * v1.dot(v2) +
                         gamma * v2.squaredNorm()) / m;
    return (beta_g - d).dot(v1) + d.dot(v2) + quad;
}

Eigen::VectorXd QpProblem::constraint_residual(const Eigen::VectorXd& v) const {
    const int k = n + 1;
    return -v.segment(0, m) + v.segment(m, m) +
           dm->M * (v.segment(2 * m, k) - v.segment(2 * m + k, k));
}

Eigen::VectorXd QpSolution::stacked() const {
    Eigen::VectorXd v(v1.size() + v2.size() + v3.size() + v4.size());
    v << v1, v2, v3, v4;
    return v;
}

void AdmmConfig::validate() const {
    if (!(rho > 0.0)) throw validation_error("ADMM rho must be positive");
    if (!(relax >= 1.0 && relax < 2.0)) throw validation_error("ADMM relaxation must lie in [1, 2)");
    if (max_iters < 1) throw validation_error("ADMM max_iters must be at least 1");
    if (!(residual_tol > 0.0)) throw validation_error("ADMM residual tolerance must be positive");
    if (polish_rounds < 1) throw validation_error("ADMM polish_rounds must be at least 1");
    if (adapt_interval < 1) throw validation_error("ADMM adapt_interval must be at least 1");
}

Eigen::MatrixXd solve_deltas(const DesignMatrix& dm) {
    // M^T = V S U^T  =>  minimum-norm inverse U S^{-1} V^T
    Eigen::MatrixXd D = dm.U * dm.s.cwiseInverse().asDiagonal() * dm.V.transpose();
    const Eigen::MatrixXd R = dm.M.transpose() * D - Eigen::MatrixXd::Identity(dm.n() + 1, dm.n() + 1);
    if (R.colwise().norm().maxCoeff() > proj_tol)
        throw numerical_error("delta solves are inaccurate; the design matrix is too ill-conditioned");
    return D;
}

Eigen::VectorXd lift_ystar(const DesignMatrix& dm, const Eigen::VectorXd& y_star) {
    if (y_star.size() != dm.n() + 1) throw validation_error("y* has the wrong dimension");
    Eigen::VectorXd d = dm.U * (dm.s.cwiseInverse().asDiagonal() * (dm.V.transpose() * y_star));
    const double res = (dm.M.transpose() * d - y_star).norm();
    if (res > proj_tol * (1.0 + y_star.norm())) {
        std::ostringstream msg;
        msg << "lifting y* left residual " << res;
        throw numerical_error(msg.str());
    }
    return d;
}

QpProblem build_qp(const DesignMatrix& dm, double alpha_l, double gamma, const Eigen::VectorXd& beta_g,
                   const Eigen::VectorXd& y_star) {
    if (alpha_l == 0.0) throw validation_error("build_qp needs alpha_l != 0");
    if (!(gamma > 0.0)) throw validation_error("gamma must be positive");
    if (beta_g.size() != dm.m()) throw validation_error("beta_g has the wrong length");
    QpProblem qp;
    qp.dm = &dm;
    qp.m = dm.m();
    qp.n = dm.n();
    qp.alpha_l = alpha_l;
    qp.gamma = gamma;
    qp.beta_g = beta_g;
    qp.y_star = y_star;
    qp.d = lift_ystar(dm, y_star);
    return qp;
}

AdmmSolver::AdmmSolver(const DesignMatrix& dm, AdmmConfig cfg) : dm_(&dm), cfg_(cfg) {
    cfg_.validate();
    reset();
}

void AdmmSolver::reset() {
    const int dim = 2 * dm_->m() + 2 * (dm_->n() + 1);
    z_ = Eigen::VectorXd::Zero(dim);
    u_ = Eigen::VectorXd::Zero(dim);
    rho_ = cfg_.rho;
}

void AdmmSolver::factor(double alpha, double gamma) {
    if (have_factor_ && f_.alpha == alpha && f_.gamma == gamma && f_.rho == rho_) return;
    const double m = dm_->m(), rho = rho_;
    const double q1 = 2.0 * (alpha * alpha + gamma) / m + rho;
    const double q2 = -2.0 * gamma / m;
    const double q3 = 2.0 * gamma / m + rho;
    const double det = q1 * q3 - q2 * q2;
    f_.g1 = q3 / det;
    f_.g2 = -q2 / det;
    f_.g3 = q1 / det;
    const double xi1 = std::sqrt(f_.g1);
    const double xi2 = f_.g2 / std::sqrt(f_.g1);
    const double xi3 = std::sqrt((f_.g1 * f_.g3 - f_.g2 * f_.g2) / f_.g1);
    const double xi4 = std::sqrt(1.0 / rho);
    const double c0 = (xi2 - xi1) * (xi2 - xi1) + xi3 * xi3;
    f_.inv_c0 = 1.0 / c0;
    f_.dinv_shift = (c0 + 2.0 * xi4 * xi4 * dm_->s.array().square()).inverse() - f_.inv_c0;
    f_.alpha = alpha;
    f_.gamma = gamma;
    f_.rho = rho;
    have_factor_ = true;
}

// v = C w, with V D^{-1} V^T applied through the thin SVD:
// V D^{-1} V^T x = x / c0 + U (diag(1/(c0 + 2 xi4^2 s^2)) - 1/c0) U^T x
void AdmmSolver::linear_solve(const QpProblem& qp, const Eigen::VectorXd& w, Eigen::VectorXd& v) const {
    const int m = qp.m, k = qp.n + 1;
    const double rho = rho_;
    const auto w1 = w.segment(0, m);
    const auto w2 = w.segment(m, m);
    const auto w3 = w.segment(2 * m, k);
    const auto w4 = w.segment(2 * m + k, k);
    const Eigen::VectorXd h1 = f_.g1 * w1 + f_.g2 * w2;
    const Eigen::VectorXd h2 = f_.g2 * w1 + f_.g3 * w2;
    const Eigen::VectorXd h3 = w3 / rho;
    const Eigen::VectorXd h4 = w4 / rho;

    auto apply_vdv = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::VectorXd ux = dm_->U.transpose() * x;
        return f_.inv_c0 * x + dm_->U * f_.dinv_shift.cwiseProduct(ux);
    };
    const Eigen::VectorXd e1 = apply_vdv(h2 - h1);
    const Eigen::VectorXd e2 = apply_vdv(dm_->M * (h3 - h4));
    const Eigen::VectorXd e = e1 + e2;
    const Eigen::VectorXd f = dm_->M.transpose() * e;

    v.resize(w.size());
    v.segment(0, m) = h1 - (f_.g2 - f_.g1) * e;
    v.segment(m, m) = h2 - (f_.g3 - f_.g2) * e;
    v.segment(2 * m, k) = h3 - f / rho;
    v.segment(2 * m + k, k) = h4 + f / rho;
}

// Guess the active set from an ADMM iterate, solve the reduced equality-constrained problem
// in z = v3 - v4 exactly, then verify optimality of
//   phi(z) = sum_j [beta_j relu(s_j) + (alpha^2/m) relu(s_j)^2] + (gamma/m)||s||^2 - <y*, z>,  s = M z
// whose minimum equals the QP value. A failed check moves the offending rows between the
// positive, zero and negative sets and tries again, a few times at most.
bool AdmmSolver::try_polish(const QpProblem& qp, const Eigen::VectorXd& v, QpSolution& out) const {
    const int m = qp.m;
    const Eigen::VectorXd s_admm = v.segment(0, m) - v.segment(m, m);
    const double scale = 1.0 + s_admm.cwiseAbs().maxCoeff();
    const double res = std::max(out.primal_residual, out.dual_residual);

    // candidate partitions: 1 positive, 0 kink, -1 negative
    std::vector<std::vector<int>> guesses;
    {
        // the projected iterate carries exact zeros where the bounds are active
        std::vector<int> cls(m);
        for (int j = 0; j < m; ++j) {
            const double a = z_(j), b = z_(m + j);
            cls[j] = (a == 0.0 && b == 0.0) ? 0 : (a - b > 0.0 ? 1 : -1);
        }
        guesses.push_back(std::move(cls));
    }
    for (double mult : {10.0, 0.1, 0.0}) {
        const double tau = mult * res * scale + 1e-12;
        std::vector<int> cls(m);
        for (int j = 0; j < m; ++j) cls[j] = s_admm(j) > tau ? 1 : (s_admm(j) >= -tau ? 0 : -1);
        guesses.push_back(std::move(cls));
    }
    for (std::size_t g = 0; g < guesses.size(); ++g) {
        if (g > 0 && guesses[g] == guesses[g - 1]) continue;
        if (polish_from(qp, guesses[g], out)) return true;
    }
    return false;
}

bool AdmmSolver::polish_from(const QpProblem& qp, std::vector<int> cls, QpSolution& out) const {
    const int m = qp.m, k = qp.n + 1;
    const Eigen::MatrixXd& M = dm_->M;
    const double a2 = qp.alpha_l * qp.alpha_l;
    const double row_norm = M.rowwise().norm().maxCoeff();
    const Eigen::MatrixXd H0 = (2.0 * qp.gamma / m) * (M.transpose() * M);

    for (int round = 0; round < cfg_.polish_rounds; ++round) {
        std::vector<int> zero;
        Eigen::MatrixXd H = H0;
        Eigen::VectorXd c = -qp.y_star;
        for (int j = 0; j < m; ++j) {
            if (cls[j] == 1) {
                H.noalias() += (2.0 * a2 / m) * M.row(j).transpose() * M.row(j);
                c += qp.beta_g(j) * M.row(j).transpose();
            } else if (cls[j] == 0) {
                zero.push_back(j);
            }
        }

        Eigen::VectorXd z;
        Eigen::MatrixXd M0(static_cast<Eigen::Index>(zero.size()), k);
        for (std::size_t i = 0; i < zero.size(); ++i) M0.row(static_cast<Eigen::Index>(i)) = M.row(zero[i]);
        if (zero.empty()) {
            z = H.llt().solve(-c);
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M0, Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            int rank = 0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
                if (sv(i) > 1e-10 * sv(0)) ++rank;
            const int nullity = k - rank;
            if (nullity == 0) {
                z = Eigen::VectorXd::Zero(k);
            } else {
                const Eigen::MatrixXd N = svd.matrixV().rightCols(nullity);
                const Eigen::MatrixXd Hn = N.transpose() * H * N;
                z = N * Hn.llt().solve(-(N.transpose() * c));
            }
        }
        if (!z.allFinite()) return false;

        const Eigen::VectorXd s = M * z;
        const double sign_tol = cfg_.polish_tol * (1.0 + z.norm() * row_norm);
        bool moved = false;
        for (int j = 0; j < m; ++j) {
            if (cls[j] == 1 && s(j) < -sign_tol) {
                cls[j] = -1;
                moved = true;
            } else if (cls[j] == -1 && s(j) > sign_tol) {
                cls[j] = 1;
                moved = true;
            } else if (cls[j] == 0 && std::abs(s(j)) > sign_tol) {
                return false;  // rank-deficient kink set, give up
            }
        }
        if (moved) continue;

        // multipliers t_j in [0, beta_j] on the zero set with H z + c + M0^T t = 0
        const Eigen::VectorXd r = -(H * z + c);
        const double stat_tol = cfg_.polish_tol * (1.0 + c.norm() + (H * z).norm());
        bool ok;
        if (zero.empty()) {
            ok = r.norm() <= stat_tol;
        } else {
            Eigen::VectorXd lo = Eigen::VectorXd::Zero(M0.rows()), hi(M0.rows());
            for (std::size_t i = 0; i < zero.size(); ++i) hi(static_cast<Eigen::Index>(i)) = qp.beta_g(zero[i]);
            ok = bvls(M0.transpose(), r, lo, hi).residual_norm <= stat_tol;
            if (!ok) {
                // release kinks whose free multiplier sits outside its interval
                const Eigen::VectorXd t = M0.transpose().completeOrthogonalDecomposition().solve(r);
                const double mtol = 1e-9 * (1.0 + t.cwiseAbs().maxCoeff());
                for (std::size_t i = 0; i < zero.size(); ++i) {
                    const double ti = t(static_cast<Eigen::Index>(i));
                    if (ti < -mtol) {
                        cls[zero[i]] = 1;
                        moved = true;
                    } else if (ti > qp.beta_g(zero[i]) + mtol) {
                        cls[zero[i]] = -1;
                        moved = true;
                    }
                }
                if (!moved) return false;
                continue;
            }
        }
        if (!ok) return false;

        out.v1 = s.cwiseMax(0.0);
        out.v2 = (-s).cwiseMax(0.0);
        out.v3 = z.cwiseMax(0.0);
        out.v4 = (-z).cwiseMax(0.0);
        out.objective = qp.objective(out.stacked());
        out.polished = true;
        return true;
    }
    return false;
}

QpSolution AdmmSolver::solve(const QpProblem& qp) {
    if (qp.dm != dm_) throw validation_error("QP was built on a different design matrix");
    const int dim = qp.dim();
    if (z_.size() != dim) reset();
    if (cfg_.scale_rho) {
        // keep the unscaled dual rho * u fixed when the penalty moves
        const double target = cfg_.rho * 2.0 * (qp.alpha_l * qp.alpha_l + qp.gamma) / qp.m;
        if (!(cfg_.adaptive_rho && f_.alpha == qp.alpha_l && f_.gamma == qp.gamma && have_factor_)) {
            u_ *= rho_ / target;
            rho_ = target;
        }
    }
    factor(qp.alpha_l, qp.gamma);
    const Eigen::VectorXd q = qp.q();
    const double relax = cfg_.relax;

    QpSolution sol;
    Eigen::VectorXd v(dim), w(dim), vhat(dim), z_prev(dim);
    double tol = cfg_.residual_tol;
    int next_polish = 25;

    for (int it = 1; it <= cfg_.max_iters; ++it) {
        const double rho = rho_;
        w = rho * (z_ - u_) - q;
        linear_solve(qp, w, v);
        vhat = relax * v + (1.0 - relax) * z_;
        z_prev = z_;
        z_ = (vhat + u_).cwiseMax(0.0);
        u_ += vhat - z_;
        if (!v.allFinite() || !u_.allFinite()) {
            std::ostringstream msg;
            msg << "ADMM iterate became non-finite at iteration " << it << " (rho = " << rho << ")";
            throw numerical_error(msg.str());
        }
        sol.iterations = it;
        sol.primal_residual = (v - z_).norm();
        sol.dual_residual = rho * (z_ - z_prev).norm();
        const bool within = sol.primal_residual <= tol && sol.dual_residual <= tol;
        if (!cfg_.polish) {
            if (within) break;
            continue;
        }
        // polish at convergence, at a doubling schedule, and on the last iteration
        const bool attempt = within || it == next_polish || it == cfg_.max_iters;
        if (it == next_polish) next_polish *= 2;
        if (attempt) {
            if (try_polish(qp, v, sol)) break;
            if (within) tol *= 0.1;
        }
        if (cfg_.adaptive_rho && it % cfg_.adapt_interval == 0) {
            const double rp = sol.primal_residual / std::max({v.norm(), z_.norm(), 1e-12});
            const double rd = sol.dual_residual / std::max(rho * u_.norm(), 1e-12);
            if (rp > 0.0 && rd > 0.0) {
                const double ratio = std::sqrt(rp / rd);
                if (ratio > 5.0 || ratio < 0.2) {
                    const double next = std::clamp(rho * ratio, 1e-6, 1e6);
                    u_ *= rho / next;
                    rho_ = next;
                    factor(qp.alpha_l, qp.gamma);
                }
            }
        }
    }
    total_iters_ += sol.iterations;
    if (sol.polished) {
        sol.converged = true;
    } else {
        sol.converged = sol.primal_residual <= cfg_.residual_tol && sol.dual_residual <= cfg_.residual_tol;
        sol.v1 = v.segment(0, qp.m);
        sol.v2 = v.segment(qp.m, qp.m);
        sol.v3 = v.segment(2 * qp.m, qp.n + 1);
        sol.v4 = v.segment(2 * qp.m + qp.n + 1, qp.n + 1);
        sol.objective = qp.objective(v);
    }
    return sol;
}

QpSolution solve_admm(const QpProblem& qp, const AdmmConfig& cfg) {
    AdmmSolver solver(*qp.dm, cfg);
    return solver.solve(qp);
}

double conjugate_value(const QpProblem& qp, const QpSolution& sol) {
    (void)qp;
    if (!sol.converged) throw numerical_error("conjugate value requested from a non-converged QP solve");
    return -sol.objective;
}

}  // namespace dcon
