#include "dcon/model.hpp"

#include <cmath>
#include <sstream>

#include "dcon/errors.hpp"

namespace dcon {

Eigen::VectorXd Params::flatten() const {
    const int N_ = N(), n_ = n();
    Eigen::VectorXd t((n_ + 2) * N_);
    t.head(N_) = alpha;
    for (int l = 0; l < N_; ++l) t.segment(N_ + l * n_, n_) = W.row(l).transpose();
    t.tail(N_) = b;
    return t;
}

Params Params::unflatten(const Eigen::VectorXd& theta, int N_, int n_) {
    if (theta.size() != (n_ + 2) * N_) throw validation_error("parameter vector has the wrong length");
    Params p = zero_params(N_, n_);
    p.alpha = theta.head(N_);
    for (int l = 0; l < N_; ++l) p.W.row(l) = theta.segment(N_ + l * n_, n_).transpose();
    p.b = theta.tail(N_);
    return p;
}

Eigen::VectorXd Params::block(int l) const {
    Eigen::VectorXd z(n() + 1);
    z.head(n()) = W.row(l).transpose();
    z(n()) = b(l);
    return z;
}

void Params::set_block(int l, const Eigen::VectorXd& z) {
    W.row(l) = z.head(n()).transpose();
    b(l) = z(n());
}

void Params::validate() const {
    if (N() < 1 || n() < 1) throw validation_error("network needs at least one hidden unit and one input");
    if (W.rows() != N() || b.size() != N()) throw validation_error("inconsistent parameter shapes");
    if (!alpha.allFinite() || !W.allFinite() || !b.allFinite())
        throw validation_error("parameters contain non-finite values");
}

Params zero_params(int N, int n) {
    Params p;
    p.alpha = Eigen::VectorXd::Zero(N);
    p.W = Eigen::MatrixXd::Zero(N, n);
    p.b = Eigen::VectorXd::Zero(N);
    return p;
}

Eigen::VectorXd SubdiffElement::flatten() const {
    const Eigen::Index N = blocks.rows(), k = blocks.cols();
    Eigen::VectorXd out(N * k + v_alpha.size());
    for (Eigen::Index l = 0; l < N; ++l) out.segment(l * k, k) = blocks.row(l).transpose();
    out.tail(v_alpha.size()) = v_alpha;
    return out;
}

Eigen::VectorXd preactivation(const Eigen::MatrixXd& X, const Eigen::VectorXd& z) {
    const Eigen::Index n = X.cols();
    Eigen::VectorXd s(X.rows());
    for (Eigen::Index j = 0; j < X.rows(); ++j) {
        double acc = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) acc += X(j, t) * z(t);
        s(j) = acc + z(n);
    }
    return s;
}

Eigen::MatrixXd preactivations(const Params& p, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd Z(X.rows(), p.N());
    for (int l = 0; l < p.N(); ++l) Z.col(l) = preactivation(X, p.block(l));
    return Z;
}

double predict(const Params& p, const Eigen::VectorXd& x) {
    if (x.size() != p.n()) throw validation_error("input dimension does not match the network");
    double out = 0.0;
    for (int l = 0; l < p.N(); ++l) out += p.alpha(l) * relu(p.W.row(l).dot(x) + p.b(l));
    return out;
}

Eigen::VectorXd predict_all(const Params& p, const Eigen::MatrixXd& X) {
    if (X.cols() != p.n()) throw validation_error("input dimension does not match the network");
    const Eigen::MatrixXd Z = preactivations(p, X);
    return Z.unaryExpr([](double v) { return relu(v); }) * p.alpha;
}

double reg_loss(const Params& p, const Dataset& d, const LossConfig& c) {
    const Eigen::MatrixXd Z = preactivations(p, d.X);
    const Eigen::VectorXd pred = Z.unaryExpr([](double v) { return relu(v); }) * p.alpha;
    const double m = d.m();
    const double mse = (d.y - pred).squaredNorm() / m;
    const double reg = Z.squaredNorm() / m + p.alpha.squaredNorm() / m;
    return mse + c.gamma * reg;
}

DcWeights compute_betas(const Params& p, const Dataset& d, int l) {
    if (l < 0 || l >= p.N()) throw validation_error("neuron index out of range");
    const int m = d.m();
    DcWeights dw;
    dw.l = l;
    dw.alpha_l = p.alpha(l);
    dw.beta_g = Eigen::VectorXd::Zero(m);
    dw.beta_h = Eigen::VectorXd::Zero(m);
    if (dw.alpha_l == 0.0) return dw;
    const Eigen::MatrixXd Z = preactivations(p, d.X);
    const double al = dw.alpha_l;
    for (int j = 0; j < m; ++j) {
        const double t = 2.0 * d.y(j) * al;
        double g = relu(-t);
        double h = relu(t);
        for (int i = 0; i < p.N(); ++i) {
            if (i == l) continue;
            const double a = p.alpha(i) * al;
            const double s = relu(Z(j, i));
            g += 2.0 * relu(a) * s;
            h += 2.0 * relu(-a) * s;
        }
        dw.beta_g(j) = g / m;
        dw.beta_h(j) = h / m;
    }
    return dw;
}

double eval_g(const DcWeights& dw, const Dataset& d, const LossConfig& c, const Eigen::VectorXd& z) {
    const Eigen::VectorXd s = preactivation(d.X, z);
    const double m = d.m();
    double lin = 0.0, sq = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
        const double r = relu(s(j));
        lin += dw.beta_g(j) * r;
        sq += r * r;
    }
    return lin + dw.alpha_l * dw.alpha_l / m * sq + c.gamma / m * s.squaredNorm();
}

double eval_h(const DcWeights& dw, const Dataset& d, const Eigen::VectorXd& z) {
    const Eigen::VectorXd s = preactivation(d.X, z);
    double h = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j) h += dw.beta_h(j) * relu(s(j));
    return h;
}

SubdiffElement subdiff_element(const Params& p, const Dataset& d, const LossConfig& c,
                               const Eigen::MatrixXd& eps_g, const Eigen::MatrixXd& eps_h) {
    const int m = d.m(), n = d.n(), N = p.N();
    if (eps_g.rows() != m || eps_g.cols() != N || eps_h.rows() != m || eps_h.cols() != N)
        throw validation_error("epsilon selections must be m x N");
    const Eigen::MatrixXd Z = preactivations(p, d.X);
    SubdiffElement e;
    e.blocks = Eigen::MatrixXd::Zero(N, n + 1);
    e.v_alpha = Eigen::VectorXd::Zero(N);
    e.eps_g = eps_g;
    e.eps_h = eps_h;

    for (int l = 0; l < N; ++l) {
        const DcWeights dw = compute_betas(p, d, l);
        const double al2 = p.alpha(l) * p.alpha(l);
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);  // weight on (x_j, 1)
        for (int j = 0; j < m; ++j) {
            const double eg = eps_g(j, l), eh = eps_h(j, l), s = Z(j, l);
            if (!(eg >= 0.0 && eg <= 1.0 && eh >= 0.0 && eh <= 1.0)) {
                std::ostringstream msg;
                msg << "epsilon outside [0,1] at sample " << j << ", neuron " << l;
                throw validation_error(msg.str());
            }
            if (s != 0.0 && (eg != 1.0 || eh != 1.0)) {
                std::ostringstream msg;
                msg << "epsilon must be 1 at nonzero activation (sample " << j << ", neuron " << l << ")";
                throw validation_error(msg.str());
            }
            if (s == 0.0) {
                const double diff = dw.beta_g(j) * eg - dw.beta_h(j) * eh;
                if (diff < 0.0 || diff > dw.beta_g(j) - dw.beta_h(j)) e.pairing_holds = false;
            }
            const double H = heaviside(s);
            coef(j) = dw.beta_g(j) * H * eg + 2.0 * al2 / m * H * s + 2.0 * c.gamma / m * s -
                      dw.beta_h(j) * H * eh;
        }
        e.blocks.row(l).head(n) = (d.X.transpose() * coef).transpose();
        e.blocks(l, n) = coef.sum();
    }

    const Eigen::MatrixXd S = Z.unaryExpr([](double v) { return relu(v); });
    const Eigen::VectorXd resid = d.y - S * p.alpha;
    e.v_alpha = (-2.0 / m) * (S.transpose() * resid) + (2.0 * c.gamma / m) * p.alpha;
    return e;
}

}  // namespace dcon
