#include "dcon/trainer.hpp"

#include <chrono>
#include <cmath>

#include "dcon/alpha.hpp"
#include "dcon/diagnostics.hpp"
#include "dcon/errors.hpp"
#include "dcon/rng.hpp"

namespace dcon {

void TrainConfig::validate() const {
    if (hidden_units < 1) throw validation_error("hidden units must be at least 1");
    if (!(gamma > 0.0)) throw validation_error("gamma must be positive");
    if (epochs && *epochs < 1) throw validation_error("epochs must be at least 1");
    if (max_auto_epochs < 1) throw validation_error("max_auto_epochs must be at least 1");
    if (!(auto_stop_tol > 0.0)) throw validation_error("auto_stop_tol must be positive");
    dca.validate();
    admm.validate();
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::epochs_exhausted: return "epochs_exhausted";
        case StopReason::auto_converged: return "auto_converged";
        case StopReason::error: return "error";
    }
    return "unknown";
}

Params xavier_init(int N, int n, std::uint64_t seed) {
    Philox rng = make_stream(seed, "init");
    Params p = zero_params(N, n);
    const double bw = std::sqrt(6.0 / (n + N));
    const double ba = std::sqrt(6.0 / (N + 1));
    for (int l = 0; l < N; ++l)
        for (int t = 0; t < n; ++t) p.W(l, t) = rng.uniform(-bw, bw);
    for (int l = 0; l < N; ++l) p.alpha(l) = rng.uniform(-ba, ba);
    return p;
}

double evaluate(const Params& p, const Dataset& d) {
    return (d.y - predict_all(p, d.X)).squaredNorm() / d.m();
}

TrainResult train(const Dataset& d, const DesignMatrix& dm, const TrainConfig& cfg, bool keep_trace) {
    cfg.validate();
    if (dm.m() != d.m() || dm.n() != d.n()) throw validation_error("design matrix does not match the dataset");
    if (!(dm.sigma_min > 0.0)) throw validation_error("design matrix is rank deficient");

    TrainResult out;
    TrainReport& rep = out.report;
    Params& p = out.params;
    p = xavier_init(cfg.hidden_units, d.n(), cfg.seed);
    const LossConfig c{cfg.gamma};
    rep.seed = cfg.seed;
    rep.sigma_min = dm.sigma_min;
    rep.initial_reg_loss = reg_loss(p, d, c);
    for (int l = 0; l < p.N(); ++l) rep.observed_param_norm_max = std::max(rep.observed_param_norm_max, p.block(l).squaredNorm());
    rep.observed_alpha_norm_max = p.alpha.squaredNorm();

    std::vector<AdmmSolver> solvers;
    solvers.reserve(static_cast<std::size_t>(p.N()));
    for (int l = 0; l < p.N(); ++l) solvers.emplace_back(dm, cfg.admm);
    Philox perm_rng = make_stream(cfg.seed, "permutation");

    const int max_epochs = cfg.epochs ? *cfg.epochs : cfg.max_auto_epochs;
    Eigen::VectorXd theta_prev = p.flatten();
    rep.stop = StopReason::epochs_exhausted;
    try {
        for (int epoch = 1; epoch <= max_epochs; ++epoch) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::vector<int> perm = random_permutation(p.N(), perm_rng);
            for (int l : perm) {
                const DcaState st = solve_dc_subproblem(p, d, dm, c, l, cfg.dca, solvers[l]);
                p.set_block(l, st.z);
                ++rep.dc_solves;
                rep.dca_iterations += st.iterations;
                rep.restarts += st.restarts;
                if (st.stop == DcaStop::max_iters) ++rep.dca_cap_hits;
                if (st.stop == DcaStop::rejected_step) ++rep.dca_rejected_steps;
                rep.observed_param_norm_max = std::max(rep.observed_param_norm_max, st.z.squaredNorm());
            }
            p.alpha = solve_alpha(build_sigma(p, d.X), d.y, cfg.gamma);
            ++rep.alpha_solves;
            rep.observed_alpha_norm_max = std::max(rep.observed_alpha_norm_max, p.alpha.squaredNorm());

            const Eigen::VectorXd theta = p.flatten();
            EpochRecord rec;
            rec.epoch = epoch;
            rec.reg_loss = reg_loss(p, d, c);
            rec.mse = evaluate(p, d);
            rec.step_norm = (theta - theta_prev).norm();
            if (cfg.record_subdiff) rec.subdiff_norm = subdiff_norm(p, d, c, cfg.subdiff_delta);
            rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rep.epochs.push_back(rec);
            if (keep_trace) out.trace.push_back(p);
            theta_prev = theta;
            if (!cfg.epochs && rec.step_norm < cfg.auto_stop_tol) {
                rep.stop = StopReason::auto_converged;
                break;
            }
        }
    } catch (const numerical_error& e) {
        rep.stop = StopReason::error;
        rep.error_message = e.what();
    }
    for (const auto& s : solvers) rep.admm_iterations += s.total_iterations();
    return out;
}

}  // namespace dcon
