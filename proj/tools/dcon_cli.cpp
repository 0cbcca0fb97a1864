#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dcon/bench.hpp"
#include "dcon/data.hpp"
#include "dcon/diagnostics.hpp"
#include "dcon/errors.hpp"
#include "dcon/model_io.hpp"
#include "dcon/trainer.hpp"

using namespace dcon;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw validation_error("cannot write '" + path + "'");
    return f;
}

struct TrainFlags {
    std::string data, target, out, trace, epochs = "30";
    int hidden = 10;
    double gamma = 1e-3;
    int dca_iters = 50;
    std::uint64_t seed = 0;
    bool restart = false;
    double rho = AdmmConfig{}.rho;
    bool record_subdiff = false;
};

int cmd_train(const TrainFlags& f) {
    TrainConfig cfg;
    cfg.hidden_units = f.hidden;
    cfg.gamma = f.gamma;
    if (f.epochs == "auto") {
        cfg.epochs = std::nullopt;
    } else {
        int e = 0;
        std::size_t used = 0;
        try {
            e = std::stoi(f.epochs, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != f.epochs.size() || e < 1) throw validation_error("--epochs must be a positive integer or 'auto'");
        cfg.epochs = e;
    }
    cfg.dca.max_iters = f.dca_iters;
    cfg.dca.restart_enabled = f.restart;
    cfg.admm.rho = f.rho;
    cfg.seed = f.seed;
    cfg.record_subdiff = f.record_subdiff;
    cfg.validate();

    const Dataset raw = load_csv(f.data, f.target);
    const Dataset d = minmax_scale(raw);
    const DesignMatrix dm = build_design_matrix(d);
    const TrainResult r = train(d, dm, cfg);
    const TrainReport& rep = r.report;

    if (!f.trace.empty()) {
        auto out = open_out(f.trace);
        write_trace_csv(out, rep);
    }
    if (rep.stop == StopReason::error) {
        std::cerr << "error: training failed: " << rep.error_message << "\n";
        return exit_numerical;
    }
    ModelFile mf;
    mf.params = r.params;
    mf.scaler = d.scaler;
    mf.feature_names = d.feature_names;
    mf.target_name = d.target_name;
    mf.gamma = cfg.gamma;
    mf.seed = cfg.seed;
    mf.epochs = static_cast<int>(rep.epochs.size());
    mf.stopping_reason = to_string(rep.stop);
    mf.initial_reg_loss = rep.initial_reg_loss;
    save_model(f.out, mf);

    const auto& last = rep.epochs.back();
    std::cout << fmt::format("epochs {}  stop {}  reg_loss {:.10g}  mse {:.10g}  last_step {:.3e}\n", last.epoch,
                             to_string(rep.stop), last.reg_loss, last.mse, last.step_norm);
    return exit_ok;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out_path) {
    const ModelFile mf = load_model(model_path);
    const Dataset raw = load_csv(data_path, mf.target_name, true);
    if (raw.feature_names != mf.feature_names) {
        std::string want, got;
        for (const auto& s : mf.feature_names) want += (want.empty() ? "" : ",") + s;
        for (const auto& s : raw.feature_names) got += (got.empty() ? "" : ",") + s;
        throw validation_error("feature columns [" + got + "] do not match the model's [" + want + "]");
    }
    const Dataset d = apply_scaler(raw, mf.scaler);
    const Eigen::VectorXd pred = predict_all(mf.params, d.X);

    std::ostringstream csv;
    csv << "prediction\n";
    for (Eigen::Index j = 0; j < pred.size(); ++j)
        csv << fmt::format("{:.17g}\n", mf.scaler.unscale_value(pred(j), mf.scaler.target));
    if (out_path.empty() || out_path == "-") {
        std::cout << csv.str();
    } else {
        auto out = open_out(out_path);
        out << csv.str();
    }
    if (d.y.size() > 0) {
        const double mse_scaled = (pred - d.y).squaredNorm() / d.m();
        std::cerr << fmt::format("mse_scaled {:.17g}\n", mse_scaled);
    }
    return exit_ok;
}

struct BenchFlags {
    std::string data, target, out = "bench_results.csv", summary;
    std::vector<int> hidden{5, 10};
    int splits = 5;
    std::uint64_t seed = 0;
    int epochs = 30, dca_iters = 50, adam_epochs = 500;
    bool no_adam = false;
    int synth_m = 500, synth_n = 4, synth_teacher = 6;
    double synth_noise = 0.05;
    std::vector<double> gammas, lrs, beta1s, regs;
    std::vector<int> batches;
};

int cmd_bench(const BenchFlags& f) {
    BenchConfig cfg;
    Dataset raw;
    if (!f.data.empty()) {
        if (f.target.empty()) throw validation_error("--target is required with --data");
        raw = load_csv(f.data, f.target);
        cfg.dataset_name = f.data.substr(f.data.find_last_of("/\\") + 1);
    } else {
        raw = make_teacher_data(f.synth_m, f.synth_n, f.synth_teacher, f.synth_noise, f.seed);
        cfg.dataset_name = "teacher";
    }
    cfg.hidden = f.hidden;
    cfg.splits = f.splits;
    cfg.seed = f.seed;
    cfg.dcon_epochs = f.epochs;
    cfg.dca_iters = f.dca_iters;
    cfg.adam_max_epochs = f.adam_epochs;
    cfg.include_adam = !f.no_adam;
    if (!f.gammas.empty()) cfg.grids.gammas = f.gammas;
    if (!f.lrs.empty()) cfg.grids.learning_rates = f.lrs;
    if (!f.beta1s.empty()) cfg.grids.beta1s = f.beta1s;
    if (!f.batches.empty()) cfg.grids.batch_sizes = f.batches;
    if (!f.regs.empty()) cfg.grids.l2_regs = f.regs;

    const BenchResult r = run_benchmark(raw, cfg);
    {
        auto out = open_out(f.out);
        write_bench_csv(out, r);
    }
    if (!f.summary.empty()) {
        auto out = open_out(f.summary);
        write_bench_summary(out, r);
    }
    write_bench_summary(std::cout, r);
    return exit_ok;
}

int cmd_diagnose(const std::string& trace, const std::string& column, double transient, double floor,
                 double a, double slack, std::optional<double> initial_loss, const std::string& model_path) {
    const TraceTable t = read_trace_csv(trace);
    const std::vector<double>* series = nullptr;
    if (column == "dist") series = &t.dist;
    else if (column == "loss") series = &t.loss;
    else if (column == "mse") series = &t.mse;
    else if (column == "subdiff_norm") series = &t.subdiff;
    else throw validation_error("--column must be one of dist, loss, mse, subdiff_norm");

    const OrderEstimate oe = estimate_order(*series, OrderOptions{transient, floor});
    std::cout << fmt::format("order column={} slope={:.6f} intercept={:.6g} r2={:.6f} window=[{},{}] trimmed={}\n",
                             column, oe.slope, oe.intercept, oe.r_squared, oe.window_start, oe.window_end,
                             oe.trimmed);

    if (!initial_loss && !model_path.empty()) initial_loss = load_model(model_path).initial_reg_loss;
    std::vector<double> loss = t.loss, dist = t.dist;
    double start;
    if (initial_loss) {
        start = *initial_loss;
    } else {
        // without the initial loss the first row only serves as the baseline
        start = loss.front();
        loss.erase(loss.begin());
        dist.erase(dist.begin());
    }
    const auto viol = sufficient_decrease_audit(start, loss, dist, a, slack);
    const int offset = initial_loss ? 0 : 1;
    std::cout << fmt::format("h1 a={:.6g} slack={:.3g} checked={} violations={}\n", a, slack, loss.size(), viol.size());
    for (const auto& v : viol)
        std::cout << fmt::format("  epoch {}: decrease {:.6g} < required {:.6g}\n", t.epoch[v.epoch - 1 + offset],
                                 v.decrease, v.required);
    return exit_ok;
}

int cmd_prox_demo(int q, int dim, double lambda, int trials, std::uint64_t seed) {
    const auto res = prox_kl_demo(q, dim, lambda, trials, seed);
    double mean = 0.0, sq = 0.0, lo = INFINITY, hi = -INFINITY;
    for (const auto& r : res) mean += r.order;
    mean /= res.size();
    for (const auto& r : res) {
        sq += (r.order - mean) * (r.order - mean);
        lo = std::min(lo, r.order);
        hi = std::max(hi, r.order);
    }
    const double sd = res.size() > 1 ? std::sqrt(sq / (res.size() - 1)) : 0.0;
    std::cout << fmt::format("q={} dim={} lambda={:g} trials={} mean_order={:.6f} std={:.6f} min={:.6f} max={:.6f}\n",
                             q, dim, lambda, trials, mean, sd, lo, hi);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DCON: block-coordinate DC training for one-hidden-layer ReLU networks"};
    app.require_subcommand(1);

    TrainFlags tf;
    auto* train_cmd = app.add_subcommand("train", "train a model on a CSV file");
    train_cmd->add_option("--data", tf.data, "training CSV")->required();
    train_cmd->add_option("--target", tf.target, "target column name or 0-based index")->required();
    train_cmd->add_option("--hidden", tf.hidden, "hidden units")->capture_default_str();
    train_cmd->add_option("--gamma", tf.gamma, "regularization weight")->capture_default_str();
    train_cmd->add_option("--epochs", tf.epochs, "number of epochs or 'auto'")->capture_default_str();
    train_cmd->add_option("--dca-iters", tf.dca_iters, "DCA iterations per block")->capture_default_str();
    train_cmd->add_option("--seed", tf.seed, "random seed")->capture_default_str();
    train_cmd->add_option("--out", tf.out, "model JSON output")->required();
    train_cmd->add_option("--trace", tf.trace, "per-epoch trace CSV output");
    train_cmd->add_flag("--restart", tf.restart, "certify DCA fixed points and restart when possible");
    train_cmd->add_option("--admm-rho", tf.rho, "ADMM penalty")->capture_default_str();
    train_cmd->add_flag("--record-subdiff", tf.record_subdiff, "fill the subdiff_norm trace column");

    std::string model_path, pred_data, pred_out;
    auto* predict_cmd = app.add_subcommand("predict", "predict with a saved model");
    predict_cmd->add_option("--model", model_path, "model JSON")->required();
    predict_cmd->add_option("--data", pred_data, "input CSV")->required();
    predict_cmd->add_option("--out", pred_out, "predictions CSV (stdout when omitted)");

    BenchFlags bf;
    auto* bench_cmd = app.add_subcommand("bench", "compare DCON, Adam and linear regression over random splits");
    bench_cmd->add_option("--data", bf.data, "CSV dataset (synthetic teacher data when omitted)");
    bench_cmd->add_option("--target", bf.target, "target column");
    bench_cmd->add_option("--hidden", bf.hidden, "hidden layer sizes")->delimiter(',');
    bench_cmd->add_option("--splits", bf.splits, "number of random splits")->capture_default_str();
    bench_cmd->add_option("--seed", bf.seed, "base seed")->capture_default_str();
    bench_cmd->add_option("--epochs", bf.epochs, "DCON epochs")->capture_default_str();
    bench_cmd->add_option("--dca-iters", bf.dca_iters, "DCA iterations per block")->capture_default_str();
    bench_cmd->add_option("--adam-epochs", bf.adam_epochs, "Adam epoch cap")->capture_default_str();
    bench_cmd->add_flag("--no-adam", bf.no_adam, "skip the Adam baseline");
    bench_cmd->add_option("--gammas", bf.gammas, "DCON gamma grid")->delimiter(',');
    bench_cmd->add_option("--lrs", bf.lrs, "Adam learning rates")->delimiter(',');
    bench_cmd->add_option("--beta1s", bf.beta1s, "Adam beta1 values")->delimiter(',');
    bench_cmd->add_option("--batches", bf.batches, "Adam batch sizes, 0 = full batch")->delimiter(',');
    bench_cmd->add_option("--regs", bf.regs, "Adam l2 weights")->delimiter(',');
    bench_cmd->add_option("--synth-m", bf.synth_m, "synthetic rows")->capture_default_str();
    bench_cmd->add_option("--synth-n", bf.synth_n, "synthetic features")->capture_default_str();
    bench_cmd->add_option("--synth-teacher", bf.synth_teacher, "teacher hidden units")->capture_default_str();
    bench_cmd->add_option("--synth-noise", bf.synth_noise, "teacher noise level")->capture_default_str();
    bench_cmd->add_option("--out", bf.out, "results CSV")->capture_default_str();
    bench_cmd->add_option("--summary", bf.summary, "summary CSV");

    std::string trace_path, column = "dist", diag_model;
    double transient = 0.25, floor = 1e-14, a = 0.0, slack = 1e-6;
    std::optional<double> initial_loss;
    auto* diag_cmd = app.add_subcommand("diagnose", "order estimate and sufficient-decrease audit of a trace");
    diag_cmd->add_option("--trace", trace_path, "trace CSV")->required();
    diag_cmd->add_option("--column", column, "series for the order fit")->capture_default_str();
    diag_cmd->add_option("--transient", transient, "leading fraction dropped")->capture_default_str();
    diag_cmd->add_option("--floor", floor, "values below this are trimmed from the tail")->capture_default_str();
    diag_cmd->add_option("--a", a, "sufficient decrease constant")->capture_default_str();
    diag_cmd->add_option("--slack", slack, "audit slack")->capture_default_str();
    diag_cmd->add_option("--initial-loss", initial_loss, "loss before the first epoch");
    diag_cmd->add_option("--model", diag_model, "model file supplying the initial loss");

    int q = 2, dim = 10, trials = 100;
    double lambda = 0.1;
    std::uint64_t prox_seed = 0;
    auto* prox_cmd = app.add_subcommand("prox-demo", "proximal point convergence-order experiment");
    prox_cmd->add_option("--q", q, "exponent parameter (>= 2)")->capture_default_str();
    prox_cmd->add_option("--dim", dim, "dimension")->capture_default_str();
    prox_cmd->add_option("--lambda", lambda, "proximal step")->capture_default_str();
    prox_cmd->add_option("--trials", trials, "random starts")->capture_default_str();
    prox_cmd->add_option("--seed", prox_seed, "random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const CLI::App* sub = nullptr;
        for (const auto* s : app.get_subcommands()) sub = s;
        std::cerr << (sub ? sub->help() : app.help());
        return exit_validation;
    }

    try {
        if (*train_cmd) return cmd_train(tf);
        if (*predict_cmd) return cmd_predict(model_path, pred_data, pred_out);
        if (*bench_cmd) return cmd_bench(bf);
        if (*diag_cmd) return cmd_diagnose(trace_path, column, transient, floor, a, slack, initial_loss, diag_model);
        if (*prox_cmd) return cmd_prox_demo(q, dim, lambda, trials, prox_seed);
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
    return exit_validation;
}
