#include "dcon/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <tuple>

#include <fmt/format.h>

#include "dcon/errors.hpp"
#include "dcon/rng.hpp"
#include "dcon/trainer.hpp"

namespace dcon {

void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& st, const AdamConfig& cfg) {
    if (st.m.size() != theta.size()) {
        st.m = Eigen::VectorXd::Zero(theta.size());
        st.v = Eigen::VectorXd::Zero(theta.size());
        st.t = 0;
    }
    ++st.t;
    st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * grad;
    st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    theta.array() -= cfg.learning_rate * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + cfg.epsilon);
}

double adam_objective(const Params& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l2_reg) {
    const double B = static_cast<double>(y.size());
    return (predict_all(p, X) - y).squaredNorm() / B + l2_reg * (p.W.squaredNorm() + p.alpha.squaredNorm());
}

Eigen::VectorXd adam_gradient(const Params& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l2_reg) {
    const int N = p.N(), n = p.n();
    const double B = static_cast<double>(y.size());
    const Eigen::MatrixXd Z = preactivations(p, X);
    const Eigen::MatrixXd S = Z.unaryExpr([](double v) { return relu(v); });
    const Eigen::MatrixXd Hm = Z.unaryExpr([](double v) { return heaviside(v); });
    const Eigen::VectorXd r = (2.0 / B) * (S * p.alpha - y);

    Params g = zero_params(N, n);
    g.alpha = S.transpose() * r + 2.0 * l2_reg * p.alpha;
    // back through the hidden layer: delta_ji = r_j alpha_i H(z_ji)
    const Eigen::MatrixXd delta = Hm.array().rowwise() * p.alpha.transpose().array();
    const Eigen::MatrixXd D = delta.array().colwise() * r.array();
    g.W = D.transpose() * X + 2.0 * l2_reg * p.W;
    g.b = D.colwise().sum().transpose();
    return g.flatten();
}

Params adam_train(const Dataset& train, const Dataset* val, int N, const AdamConfig& cfg, std::uint64_t seed) {
    if (N < 1) throw validation_error("Adam baseline needs at least one hidden unit");
    if (!(cfg.learning_rate > 0.0) || cfg.max_epochs < 1 || cfg.patience < 1)
        throw validation_error("invalid Adam configuration");
    const int m = train.m(), n = train.n();
    Params p = xavier_init(N, n, seed);
    Eigen::VectorXd theta = p.flatten();
    AdamState st;
    Philox rng = make_stream(seed, "adam-batch");
    const int B = (cfg.batch_size <= 0 || cfg.batch_size > m) ? m : cfg.batch_size;
    const bool use_val = val != nullptr && val->m() > 0;

    auto monitor = [&](const Params& q) {
        return use_val ? (predict_all(q, val->X) - val->y).squaredNorm() / val->m()
                       : adam_objective(q, train.X, train.y, cfg.l2_reg);
    };
    Params best = p;
    double best_score = monitor(p);
    int wait = 0;
    Eigen::MatrixXd Xb;
    Eigen::VectorXd yb;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const std::vector<int> perm = random_permutation(m, rng);
        for (int start = 0; start < m; start += B) {
            const int cnt = std::min(B, m - start);
            Xb.resize(cnt, n);
            yb.resize(cnt);
            for (int i = 0; i < cnt; ++i) {
                Xb.row(i) = train.X.row(perm[start + i]);
                yb(i) = train.y(perm[start + i]);
            }
            const Params cur = Params::unflatten(theta, N, n);
            adam_step(theta, adam_gradient(cur, Xb, yb, cfg.l2_reg), st, cfg);
        }
        if (!theta.allFinite()) throw numerical_error("Adam produced non-finite parameters");
        const Params cur = Params::unflatten(theta, N, n);
        const double score = monitor(cur);
        if (!std::isfinite(score)) throw numerical_error("Adam loss became non-finite");
        if (score < best_score) {
            best_score = score;
            best = cur;
            wait = 0;
        } else if (++wait >= cfg.patience) {
            break;
        }
    }
    return best;
}

Eigen::VectorXd linreg_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    return augment_ones(X).completeOrthogonalDecomposition().solve(y);
}

double linreg_mse(const Eigen::VectorXd& coef, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    return (augment_ones(X) * coef - y).squaredNorm() / static_cast<double>(y.size());
}

const BenchRow* BenchResult::find(std::uint64_t split_seed, int N, const std::string& method) const {
    for (const auto& r : rows)
        if (r.split_seed == split_seed && r.N == N && r.method == method) return &r;
    return nullptr;
}

std::vector<BenchSummaryRow> BenchResult::summary(const std::string& baseline) const {
    std::map<int, std::tuple<double, double, int>> acc;
    for (const auto& r : rows) {
        if (r.method != "dcon") continue;
        const BenchRow* b = find(r.split_seed, r.N, baseline);
        if (!b) continue;
        auto& [tr, te, cnt] = acc[r.N];
        tr += relative_improvement(b->train_mse, r.train_mse);
        te += relative_improvement(b->test_mse, r.test_mse);
        ++cnt;
    }
    std::vector<BenchSummaryRow> out;
    for (const auto& [N, v] : acc) {
        const auto& [tr, te, cnt] = v;
        out.push_back({N, tr / cnt, te / cnt});
    }
    return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mse(const Params& p, const Dataset& d) { return (predict_all(p, d.X) - d.y).squaredNorm() / d.m(); }

}  // namespace

BenchResult run_benchmark(const Dataset& raw, const BenchConfig& cfg) {
    if (cfg.splits < 1 || cfg.hidden.empty() || cfg.grids.gammas.empty())
        throw validation_error("benchmark needs at least one split, one layer size and one gamma");
    BenchResult res;
    for (int s = 0; s < cfg.splits; ++s) {
        const std::uint64_t split_seed = cfg.seed + static_cast<std::uint64_t>(s);
        res.split_seeds.push_back(split_seed);
        const SplitResult sp = scale_split(split(raw, SplitSpec{0.8, 0.1, 0.1, split_seed}));
        const DesignMatrix dm = build_design_matrix(sp.train);

        auto t_lin = std::chrono::steady_clock::now();
        const Eigen::VectorXd coef = linreg_fit(sp.train.X, sp.train.y);
        const double lin_train = linreg_mse(coef, sp.train.X, sp.train.y);
        const double lin_test = linreg_mse(coef, sp.test.X, sp.test.y);
        const double lin_secs = seconds_since(t_lin);

        for (int N : cfg.hidden) {
            res.rows.push_back({cfg.dataset_name, split_seed, N, "linreg", "ols", lin_train, lin_test, lin_secs});

            // DCON: gamma by validation MSE, first best wins
            double best_val = std::numeric_limits<double>::infinity();
            BenchRow best_row;
            for (double g : cfg.grids.gammas) {
                TrainConfig tc;
                tc.hidden_units = N;
                tc.gamma = g;
                tc.epochs = cfg.dcon_epochs;
                tc.dca.max_iters = cfg.dca_iters;
                tc.seed = split_seed;
                const auto t0 = std::chrono::steady_clock::now();
                const TrainResult tr = train(sp.train, dm, tc);
                const double secs = seconds_since(t0);
                if (tr.report.stop == StopReason::error)
                    throw numerical_error("DCON failed during benchmark: " + tr.report.error_message);
                const double v = mse(tr.params, sp.val);
                if (v < best_val) {
                    best_val = v;
                    best_row = {cfg.dataset_name, split_seed, N, "dcon", fmt::format("{:g}", g),
                                mse(tr.params, sp.train), mse(tr.params, sp.test), secs};
                }
            }
            res.rows.push_back(best_row);

            if (!cfg.include_adam) continue;
            // ties: smallest validation MSE, then smallest learning rate, then smallest batch
            std::tuple<double, double, int> best_key{std::numeric_limits<double>::infinity(), 0.0, 0};
            BenchRow best_adam;
            bool have = false;
            for (double lr : cfg.grids.learning_rates)
                for (double b1 : cfg.grids.beta1s)
                    for (int batch : cfg.grids.batch_sizes)
                        for (double reg : cfg.grids.l2_regs) {
                            AdamConfig ac;
                            ac.learning_rate = lr;
                            ac.beta1 = b1;
                            ac.batch_size = batch;
                            ac.l2_reg = reg;
                            ac.max_epochs = cfg.adam_max_epochs;
                            const auto t0 = std::chrono::steady_clock::now();
                            const Params p = adam_train(sp.train, &sp.val, N, ac, split_seed);
                            const double secs = seconds_since(t0);
                            const int eff_batch = (batch <= 0 || batch > sp.train.m()) ? sp.train.m() : batch;
                            const std::tuple<double, double, int> key{mse(p, sp.val), lr, eff_batch};
                            if (!have || key < best_key) {
                                have = true;
                                best_key = key;
                                best_adam = {cfg.dataset_name, split_seed, N, "adam",
                                             fmt::format("lr={:g};beta1={:g};batch={};reg={:g}", lr, b1,
                                                         batch <= 0 ? std::string("full") : std::to_string(batch), reg),
                                             mse(p, sp.train), mse(p, sp.test), secs};
                            }
                        }
            if (have) res.rows.push_back(best_adam);
        }
    }
    return res;
}

void write_bench_csv(std::ostream& out, const BenchResult& r) {
    out << "dataset,split_seed,N,method,gamma_or_grid_id,train_mse,test_mse,wall_seconds\n";
    for (const auto& row : r.rows)
        out << fmt::format("{},{},{},{},{},{:.17g},{:.17g},{:.6f}\n", row.dataset, row.split_seed, row.N, row.method,
                           row.gamma_or_grid_id, row.train_mse, row.test_mse, row.wall_seconds);
}

void write_bench_summary(std::ostream& out, const BenchResult& r) {
    out << "N,train_improvement_vs_adam,test_improvement_vs_adam,train_improvement_vs_linreg,test_improvement_vs_linreg\n";
    const auto a = r.summary("adam");
    const auto l = r.summary("linreg");
    for (const auto& sl : l) {
        double atr = std::numeric_limits<double>::quiet_NaN(), ate = atr;
        for (const auto& sa : a)
            if (sa.N == sl.N) {
                atr = sa.train_improvement;
                ate = sa.test_improvement;
            }
        out << fmt::format("{},{:.6g},{:.6g},{:.6g},{:.6g}\n", sl.N, atr, ate, sl.train_improvement, sl.test_improvement);
    }
}

Dataset make_teacher_data(int m, int n, int teacher_N, double noise, std::uint64_t seed) {
    if (m < 1 || n < 1 || teacher_N < 1) throw validation_error("teacher data needs positive sizes");
    Philox rng = make_stream(seed, "data");
    Params t = zero_params(teacher_N, n);
    for (int l = 0; l < teacher_N; ++l) {
        for (int i = 0; i < n; ++i) t.W(l, i) = rng.normal();
        t.b(l) = 0.5 * rng.normal();
        t.alpha(l) = rng.normal();
    }
    Dataset d;
    d.X.resize(m, n);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) d.X(j, i) = rng.uniform();
    d.y = predict_all(t, d.X);
    for (int j = 0; j < m; ++j) d.y(j) += noise * rng.normal();
    for (int i = 0; i < n; ++i) d.feature_names.push_back("x" + std::to_string(i + 1));
    d.target_name = "y";
    return d;
}

}  // namespace dcon
