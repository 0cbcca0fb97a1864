#include "dcon/diagnostics.hpp"

#include <cfloat>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "dcon/errors.hpp"
#include "dcon/rng.hpp"

namespace dcon {

OrderEstimate estimate_order(const std::vector<double>& e_in, const OrderOptions& opt) {
    std::vector<double> e = e_in;
    OrderEstimate est;
    while (!e.empty() && !(e.back() >= opt.floor)) {
        e.pop_back();
        ++est.trimmed;
    }
    for (std::size_t k = 0; k < e.size(); ++k) {
        if (!(e[k] > 0.0) || !std::isfinite(e[k])) {
            std::ostringstream msg;
            msg << "error sequence entry " << k << " is not a positive finite number";
            throw validation_error(msg.str());
        }
    }
    const int len = static_cast<int>(e.size());
    const int start = static_cast<int>(std::floor(opt.transient_fraction * len));
    if (len - start < 3) {
        std::ostringstream msg;
        msg << "need at least 3 usable errors after trimming (" << est.trimmed << " trailing dropped, "
            << start << " transient dropped, " << len - start << " left)";
        throw validation_error(msg.str());
    }
    est.window_start = start;
    est.window_end = len - 1;
    const int np = len - 1 - start;
    double mx = 0, my = 0;
    for (int k = start; k < len - 1; ++k) {
        mx += std::log(e[k]);
        my += std::log(e[k + 1]);
    }
    mx /= np;
    my /= np;
    double sxx = 0, sxy = 0, syy = 0;
    for (int k = start; k < len - 1; ++k) {
        const double dx = std::log(e[k]) - mx, dy = std::log(e[k + 1]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw validation_error("error sequence is constant over the window; no order to estimate");
    est.slope = sxy / sxx;
    est.intercept = my - est.slope * mx;
    est.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return est;
}

double subdiff_norm(const Params& p, const Dataset& d, const LossConfig& c, double delta, int pg_iters) {
    const int m = d.m(), n = d.n(), N = p.N();
    const Eigen::MatrixXd Z = preactivations(p, d.X);
    Eigen::VectorXd blocks(N * (n + 1));
    for (int l = 0; l < N; ++l) {
        const DcWeights dw = compute_betas(p, d, l);
        const double al2 = p.alpha(l) * p.alpha(l);
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
        std::vector<int> J;
        for (int j = 0; j < m; ++j) {
            const double s = Z(j, l);
            const double H = heaviside(s);
            const double Hd = s > -delta ? 1.0 : 0.0;
            const bool varies = std::abs(s) <= delta;
            if (varies)
                J.push_back(j);
            else
                coef(j) += dw.beta_g(j) * Hd;
            coef(j) += 2.0 * al2 / m * H * s + 2.0 * c.gamma / m * s - dw.beta_h(j) * H;
        }
        auto xhat = [&](int j) {
            Eigen::VectorXd x(n + 1);
            x.head(n) = d.X.row(j).transpose();
            x(n) = 1.0;
            return x;
        };
        Eigen::VectorXd base(n + 1);
        base.head(n) = d.X.transpose() * coef;
        base(n) = coef.sum();
        Eigen::VectorXd v = base;
        if (!J.empty()) {
            Eigen::MatrixXd A(n + 1, static_cast<Eigen::Index>(J.size()));
            for (std::size_t i = 0; i < J.size(); ++i) {
                const int j = J[i];
                const double Hd = Z(j, l) > -delta ? 1.0 : 0.0;
                A.col(static_cast<Eigen::Index>(i)) = dw.beta_g(j) * Hd * xhat(j);
            }
            const double L = 2.0 * (A * A.transpose()).selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
            if (L > 0.0) {
                Eigen::VectorXd eps = Eigen::VectorXd::Ones(A.cols());
                for (int it = 0; it < pg_iters; ++it) {
                    const Eigen::VectorXd g = 2.0 * A.transpose() * (base + A * eps);
                    eps = (eps - g / L).cwiseMax(0.0).cwiseMin(1.0);
                }
                v = base + A * eps;
            } else {
                v = base;
            }
        }
        blocks.segment(l * (n + 1), n + 1) = v;
    }
    const Eigen::MatrixXd S = Z.unaryExpr([](double v) { return relu(v); });
    const Eigen::VectorXd va = (-2.0 / m) * (S.transpose() * (d.y - S * p.alpha)) + (2.0 * c.gamma / m) * p.alpha;
    return std::sqrt(blocks.squaredNorm() + va.squaredNorm());
}

double prox_norm_update(int q, double lambda, double R) {
    if (q < 2) throw validation_error("prox demo needs q >= 2");
    if (!(lambda > 0.0)) throw validation_error("prox demo needs lambda > 0");
    if (!(R > 0.0)) return 0.0;
    const double c = 2.0 * q * lambda / (2.0 * q - 1.0);
    const double expo = 1.0 / (2.0 * q - 1.0);
    // (1 + c r^{2(1-q)/(2q-1)}) r = r + c r^{1/(2q-1)}, increasing in r
    auto phi = [&](double r) { return r + c * std::pow(r, expo); };
    double lo = 0.0, hi = R;
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (phi(mid) < R)
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(phi(lo) - R) < std::abs(phi(hi) - R) ? lo : hi;
}

ProxTrajectory prox_kl_trajectory(int q, double lambda, const Eigen::VectorXd& x0, int max_iters) {
    ProxTrajectory tr;
    double r = x0.norm();
    tr.norms.push_back(r);
    for (int k = 0; k < max_iters && r > 0.0; ++k) {
        const double next = prox_norm_update(q, lambda, r);
        // stop before subnormal range, where pow loses relative accuracy
        if (next < DBL_MIN) break;
        // the direction is preserved, so the step length is the drop in norm
        tr.steps.push_back(r - next);
        tr.norms.push_back(next);
        r = next;
    }
    return tr;
}

double prox_order_ratio(const std::vector<double>& d) {
    for (int k = static_cast<int>(d.size()) - 2; k >= 1; --k) {
        if (d[k - 1] > 0.0 && d[k] > 0.0 && d[k + 1] > 0.0 && d[k] != d[k - 1])
            return std::log(d[k + 1] / d[k]) / std::log(d[k] / d[k - 1]);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::vector<ProxTrial> prox_kl_demo(int q, int dim, double lambda, int trials, std::uint64_t seed) {
    if (dim < 1 || trials < 1) throw validation_error("prox demo needs dim >= 1 and trials >= 1");
    std::vector<ProxTrial> out;
    for (int t = 0; t < trials; ++t) {
        Philox rng = make_stream(seed, "prox-start", static_cast<std::uint64_t>(t));
        Eigen::VectorXd x0(dim);
        for (int i = 0; i < dim; ++i) x0(i) = rng.normal();
        const ProxTrajectory tr = prox_kl_trajectory(q, lambda, x0);
        ProxTrial trial;
        trial.iterations = static_cast<int>(tr.steps.size());
        trial.order = prox_order_ratio(tr.steps);
        out.push_back(trial);
    }
    return out;
}

std::vector<DecreaseViolation> sufficient_decrease_audit(double initial_loss, const std::vector<double>& loss,
                                                         const std::vector<double>& dist, double a, double slack) {
    if (loss.size() != dist.size()) throw validation_error("loss and distance traces differ in length");
    std::vector<DecreaseViolation> out;
    double prev = initial_loss;
    for (std::size_t k = 0; k < loss.size(); ++k) {
        const double dec = prev - loss[k];
        const double req = a * dist[k] * dist[k];
        if (dec < req - slack) out.push_back({static_cast<int>(k) + 1, dec, req});
        prev = loss[k];
    }
    return out;
}

std::vector<DecreaseViolation> sufficient_decrease_audit(const TrainReport& report, double a, double slack) {
    std::vector<double> loss, dist;
    for (const auto& e : report.epochs) {
        loss.push_back(e.reg_loss);
        dist.push_back(e.step_norm);
    }
    return sufficient_decrease_audit(report.initial_reg_loss, loss, dist, a, slack);
}

double h1_constant(double gamma, double sigma_min, int K, int m) {
    return std::min(2.0 * gamma * sigma_min / (static_cast<double>(K) * m), gamma / 2.0);
}

void write_trace_csv(std::ostream& out, const TrainReport& report) {
    out << "epoch,loss,mse,dist,subdiff_norm\n";
    for (const auto& e : report.epochs) {
        out << fmt::format("{},{:.17g},{:.17g},{:.17g},", e.epoch, e.reg_loss, e.mse, e.step_norm);
        if (e.subdiff_norm >= 0.0) out << fmt::format("{:.17g}", e.subdiff_norm);
        out << '\n';
    }
}

TraceTable read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw validation_error("cannot open trace file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    std::istringstream in(ss.str());
    std::string line;
    if (!std::getline(in, line)) throw validation_error(path + ": empty trace file");
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            header.push_back(cell);
        }
    }
    auto col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int ce = col("epoch"), cl = col("loss"), cm = col("mse"), cd = col("dist"), cs = col("subdiff_norm");
    if (cd < 0) throw validation_error(path + ": trace needs a 'dist' column");
    TraceTable t;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells;
        std::istringstream r(line);
        std::string cell;
        while (std::getline(r, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        auto num = [&](int c, double fallback) {
            if (c < 0 || c >= static_cast<int>(cells.size()) || cells[c].empty() || cells[c] == "\r") return fallback;
            try {
                return std::stod(cells[c]);
            } catch (const std::exception&) {
                std::ostringstream msg;
                msg << path << ": line " << line_no << ", column '" << header[c] << "' is not a number";
                throw validation_error(msg.str());
            }
        };
        const double nan = std::numeric_limits<double>::quiet_NaN();
        t.epoch.push_back(ce >= 0 ? static_cast<int>(num(ce, 0)) : static_cast<int>(t.epoch.size()) + 1);
        t.loss.push_back(num(cl, nan));
        t.mse.push_back(num(cm, nan));
        t.dist.push_back(num(cd, nan));
        t.subdiff.push_back(num(cs, nan));
    }
    return t;
}

}  // namespace dcon
