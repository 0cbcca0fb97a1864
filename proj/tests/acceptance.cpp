// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <iostream>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "dcon/bench.hpp"
#include "dcon/dca.hpp"
#include "dcon/diagnostics.hpp"
#include "dcon/model.hpp"
#include "dcon/qp.hpp"
#include "dcon/trainer.hpp"
#include "oracles.hpp"

using namespace dcon;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = budget_seconds <= 0 || secs < budget_seconds;
    if (!in_time) o.detail += fmt::format(" [over the {:.0f} s budget]", budget_seconds);
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::cout << fmt::format("criterion {:>2} {}: {}  ({:.1f} s)  {}\n", id, pass ? "PASS" : "FAIL", name, secs, o.detail)
              << std::flush;
}

struct QpInstance {
    Dataset d;
    DesignMatrix dm;
    DcWeights dw;
    QpProblem qp;
};

std::unique_ptr<QpInstance> qp_instance(int m, int n, double gamma, Philox& r, double ystar_scale) {
    auto in = std::make_unique<QpInstance>();
    in->d = oracle::random_dataset(m, n, r);
    in->dm = build_design_matrix(in->d);
    const Params p = oracle::random_params(3, n, r);
    in->dw = compute_betas(p, in->d, static_cast<int>(r.below(3)));
    in->qp = build_qp(in->dm, in->dw.alpha_l, gamma, in->dw.beta_g, oracle::random_vector(n + 1, r, ystar_scale));
    return in;
}

Dataset teacher_scenario() { return minmax_scale(make_teacher_data(128, 4, 3, 0.05, 7)); }

TrainConfig teacher_config() {
    TrainConfig cfg;
    cfg.hidden_units = 8;
    cfg.gamma = 1e-3;
    cfg.epochs = 30;
    cfg.seed = 1;
    return cfg;
}

Outcome c1_dc_identity() {
    Philox r(1001, 1);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int m = 3 + static_cast<int>(r.below(28)), n = 1 + static_cast<int>(r.below(4));
        const int N = 1 + static_cast<int>(r.below(6));
        const double gamma = t % 2 ? 1e-3 : 1e-2;
        const Dataset d = oracle::random_dataset(m, n, r);
        const Params p = oracle::random_params(N, n, r);
        for (int l = 0; l < N; ++l) {
            const DcWeights dw = compute_betas(p, d, l);
            double lo = INFINITY, hi = -INFINITY, mean = 0.0;
            for (int k = 0; k < 20; ++k) {
                Params q = p;
                q.set_block(l, oracle::random_vector(n + 1, r));
                const double v = reg_loss(q, d, LossConfig{gamma}) - eval_dc(dw, d, LossConfig{gamma}, q.block(l));
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                mean += v / 20;
            }
            worst = std::max(worst, (hi - lo) / (1.0 + std::abs(mean)));
        }
    }
    return {worst <= 1e-8, fmt::format("max relative spread {:.2e}", worst)};
}

Outcome c2_conjugate() {
    Philox r(1002, 1);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int m = 3 + static_cast<int>(r.below(8)), n = 1 + static_cast<int>(r.below(2));
        auto in = qp_instance(m, n, t % 2 ? 1e-2 : 1e-3, r, 0.5);
        const double gstar = conjugate_value(in->qp, solve_admm(in->qp));
        worst = std::max(worst, std::abs(gstar - oracle::conjugate_sup(in->qp, 8, 500 + t)));
    }
    return {worst <= 1e-3, fmt::format("max |QP - sup oracle| {:.2e}", worst)};
}

Outcome c3_kkt() {
    Philox r(1003, 1);
    double gap = 0.0, comp = 0.0;
    for (int t = 0; t < 30; ++t) {
        const int m = 3 + static_cast<int>(r.below(4)), n = 1 + static_cast<int>(r.below(2));
        auto in = qp_instance(m, n, t % 2 ? 1e-2 : 1e-3, r, 1.0);
        const QpSolution sol = solve_admm(in->qp);
        const oracle::KktResult ref = oracle::kkt_enumeration(in->qp);
        gap = std::max(gap, std::abs(sol.objective - ref.value) / std::max(1.0, std::abs(ref.value)));
        comp = std::max(comp, sol.v1.cwiseMin(sol.v2).maxCoeff());
    }
    return {gap <= 1e-4 && comp <= 1e-5, fmt::format("max relative gap {:.2e}, complementarity {:.2e}", gap, comp)};
}

Outcome c4_dca_decrease() {
    Philox r(1004, 1);
    double worst = INFINITY;
    int checked = 0;
    for (int t = 0; t < 20; ++t) {
        const int m = 5 + static_cast<int>(r.below(26)), n = 1 + static_cast<int>(r.below(4));
        const int N = 1 + static_cast<int>(r.below(6));
        const Dataset d = oracle::random_dataset(m, n, r);
        const DesignMatrix dm = build_design_matrix(d);
        const LossConfig c{t % 2 ? 1e-2 : 1e-3};
        const Params p = oracle::random_params(N, n, r);
        const int l = static_cast<int>(r.below(static_cast<std::uint64_t>(N)));
        const DcaState st = solve_dc_subproblem(p, d, dm, c, l, DcaConfig{});
        if (st.iterations == 0) continue;
        ++checked;
        const double bound = 2.0 * c.gamma * dm.sigma_min / (st.iterations * m) * (st.z - p.block(l)).squaredNorm();
        const double dec = st.objective.front() - st.objective.back();
        worst = std::min(worst, dec - bound);
    }
    return {worst >= -1e-6, fmt::format("{} runs, min(decrease - bound) {:.3e}", checked, worst)};
}

Outcome c5_h1(TrainResult& keep) {
    const Dataset d = teacher_scenario();
    const DesignMatrix dm = build_design_matrix(d);
    const TrainConfig cfg = teacher_config();
    keep = train(d, dm, cfg);
    const TrainReport& rep = keep.report;
    if (rep.stop == StopReason::error) return {false, "training failed: " + rep.error_message};
    bool monotone = true;
    double prev = rep.initial_reg_loss;
    for (const auto& e : rep.epochs) {
        monotone &= e.reg_loss <= prev;
        prev = e.reg_loss;
    }
    const double a = h1_constant(cfg.gamma, dm.sigma_min, cfg.dca.max_iters, d.m());
    const auto viol = sufficient_decrease_audit(rep, a, 1e-6);
    return {monotone && viol.empty() && rep.epochs.size() == 30,
            fmt::format("monotone={} a={:.3e} violations={} final reg_loss {:.6g}", monotone, a, viol.size(),
                        rep.epochs.back().reg_loss)};
}

Outcome c6_stationarity() {
    const Dataset d = teacher_scenario();
    const DesignMatrix dm = build_design_matrix(d);
    TrainConfig cfg = teacher_config();
    cfg.epochs = std::nullopt;
    const TrainResult res = train(d, dm, cfg);
    if (res.report.stop != StopReason::auto_converged)
        return {false, fmt::format("stopped as {} after {} epochs {}", to_string(res.report.stop),
                                   res.report.epochs.size(), res.report.error_message)};
    const double sn = subdiff_norm(res.params, d, LossConfig{cfg.gamma});
    return {sn <= 1e-2, fmt::format("{} epochs, subdiff_norm {:.3e}", res.report.epochs.size(), sn)};
}

Outcome c7_prox() {
    std::string detail;
    bool ok = true;
    const struct {
        int q;
        double ref_mean, ref_std;
    } rows[] = {{2, 2.9931, 0.0325}, {3, 4.9834, 0.0702}};
    for (const auto& row : rows) {
        const auto trials = prox_kl_demo(row.q, 10, 0.1, 100, 0);
        double mean = 0.0;
        for (const auto& t : trials) mean += t.order / trials.size();
        ok &= std::abs(mean - row.ref_mean) <= 3.0 * row.ref_std;
        detail += fmt::format("q={} mean {:.4f} (ref {:.4f}) ", row.q, mean, row.ref_mean);
    }
    return {ok, detail};
}

Outcome c8_order() {
    std::vector<double> geo, sq{0.5};
    for (int k = 0; k < 40; ++k) geo.push_back(std::pow(0.7, k));
    while (sq.size() < 10) sq.push_back(sq.back() * sq.back());
    const double s1 = estimate_order(geo).slope, s2 = estimate_order(sq).slope;
    return {std::abs(s1 - 1.0) <= 1e-6 && std::abs(s2 - 2.0) <= 1e-6, fmt::format("slopes {:.9f} {:.9f}", s1, s2)};
}

Outcome c9_bench() {
    const Dataset raw = make_teacher_data(500, 4, 6, 0.05, 0);
    BenchConfig cfg;
    cfg.dataset_name = "teacher";
    cfg.splits = 5;
    cfg.grids.batch_sizes = {0};
    const BenchResult res = run_benchmark(raw, cfg);
    int cells = 0, beat_lin = 0, beat_adam = 0;
    for (auto s : res.split_seeds) {
        for (int N : cfg.hidden) {
            const BenchRow* dc = res.find(s, N, "dcon");
            const BenchRow* lin = res.find(s, N, "linreg");
            const BenchRow* ad = res.find(s, N, "adam");
            if (!dc || !lin || !ad) return {false, "missing benchmark rows"};
            ++cells;
            beat_lin += dc->train_mse < lin->train_mse;
            beat_adam += dc->train_mse < ad->train_mse;
        }
    }
    const double fl = static_cast<double>(beat_lin) / cells, fa = static_cast<double>(beat_adam) / cells;
    return {fl >= 0.9 && fa >= 0.6,
            fmt::format("beats linreg {}/{}, beats adam {}/{}", beat_lin, cells, beat_adam, cells)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome c10_determinism() {
    const fs::path dir = fs::temp_directory_path() / ("dcon_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const Dataset raw = make_teacher_data(60, 3, 2, 0.05, 3);
    {
        std::ofstream f(dir / "data.csv");
        f << "x1,x2,x3,y\n";
        for (int j = 0; j < raw.m(); ++j)
            f << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", raw.X(j, 0), raw.X(j, 1), raw.X(j, 2), raw.y(j));
    }
    auto run = [&](const std::string& tag) {
        const std::string cmd = fmt::format(
            "'{}' train --data '{}' --target y --hidden 4 --epochs 10 --seed 42 --out '{}' --trace '{}' >/dev/null 2>&1",
            DCON_BIN, (dir / "data.csv").string(), (dir / ("model_" + tag + ".json")).string(),
            (dir / ("trace_" + tag + ".csv")).string());
        const int st = std::system(cmd.c_str());
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    };
    const int ra = run("a"), rb = run("b");
    const std::string ma = slurp(dir / "model_a.json"), mb = slurp(dir / "model_b.json");
    const std::string ta = slurp(dir / "trace_a.csv"), tb = slurp(dir / "trace_b.csv");
    std::error_code ec;
    fs::remove_all(dir, ec);
    const bool ok = ra == 0 && rb == 0 && !ma.empty() && !ta.empty() && ma == mb && ta == tb;
    return {ok, fmt::format("exit codes {} {}, model identical={}, trace identical={}", ra, rb, ma == mb, ta == tb)};
}

}  // namespace

int main() {
    TrainResult h1_run;
    criterion(1, "DC decomposition identity", 10, c1_dc_identity);
    criterion(2, "conjugate vs numerical supremum", 60, c2_conjugate);
    criterion(3, "ADMM vs exhaustive KKT", 30, c3_kkt);
    criterion(4, "DCA sufficient decrease (stated constant)", 60, c4_dca_decrease);
    criterion(5, "outer-loop sufficient decrease", 300, [&] { return c5_h1(h1_run); });
    criterion(6, "stationarity at AUTO stop", 900, c6_stationarity);
    criterion(7, "prox convergence order", 60, c7_prox);
    criterion(8, "order estimator sanity", 0, c8_order);
    criterion(9, "benchmark harness", 0, c9_bench);
    criterion(10, "CLI determinism", 0, c10_determinism);
    std::cout << (failures ? fmt::format("{} criteria failed\n", failures) : "all criteria passed\n");
    return failures ? 1 : 0;
}
