#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dcon/data.hpp"
#include "dcon/model.hpp"

namespace dcon {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 64;  // <= 0 means full batch
    int max_epochs = 500;
    int patience = 10;
    double l2_reg = 1e-3;
};

// One Adam moment state per parameter vector.
struct AdamState {
    Eigen::VectorXd m, v;
    long t = 0;
};

// theta <- theta - lr * mhat / (sqrt(vhat) + eps)
void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& st,
               const AdamConfig& cfg);

// Objective: (1/B) sum (pred - y)^2 + l2_reg (||W||^2 + ||alpha||^2); biases unpenalized.
double adam_objective(const Params& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      double l2_reg);
Eigen::VectorXd adam_gradient(const Params& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double l2_reg);  // in Params::flatten order

// Early stopping monitors validation MSE when val is non-empty, training loss otherwise.
// The best parameters seen are returned.
Params adam_train(const Dataset& train, const Dataset* val, int N, const AdamConfig& cfg,
                  std::uint64_t seed);

// Least squares on [X | 1]; returns coefficients (w, b).
Eigen::VectorXd linreg_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
double linreg_mse(const Eigen::VectorXd& coef, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct BenchGrids {
    std::vector<double> gammas{1e-2, 1e-3, 1e-4, 1e-5};
    std::vector<double> learning_rates{1e-3, 5e-3, 5e-4};
    std::vector<double> beta1s{0.9, 0.99};
    std::vector<int> batch_sizes{64, 128, 0};  // 0 = full batch
    std::vector<double> l2_regs{1e-2, 1e-3};
};

struct BenchConfig {
    std::string dataset_name = "data";
    std::vector<int> hidden{5, 10};
    int splits = 5;
    std::uint64_t seed = 0;
    int dcon_epochs = 30;
    int dca_iters = 50;
    int adam_max_epochs = 500;
    bool include_adam = true;
    BenchGrids grids;
};

struct BenchRow {
    std::string dataset;
    std::uint64_t split_seed = 0;
    int N = 0;
    std::string method;  // dcon, adam, linreg
    std::string gamma_or_grid_id;
    double train_mse = 0.0;
    double test_mse = 0.0;
    double wall_seconds = 0.0;
};

struct BenchSummaryRow {
    int N = 0;
    double train_improvement = 0.0;  // mean of baseline/dcon - 1 over splits
    double test_improvement = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::vector<std::uint64_t> split_seeds;

    const BenchRow* find(std::uint64_t split_seed, int N, const std::string& method) const;
    std::vector<BenchSummaryRow> summary(const std::string& baseline = "adam") const;
};

inline double relative_improvement(double baseline, double dcon) { return baseline / dcon - 1.0; }

// raw is unscaled; every split fits its own scaler on the training part.
BenchResult run_benchmark(const Dataset& raw, const BenchConfig& cfg);

void write_bench_csv(std::ostream& out, const BenchResult& r);
void write_bench_summary(std::ostream& out, const BenchResult& r);

// Teacher-student data: x ~ U[0,1]^n, y = teacher(x) + noise * N(0,1).
Dataset make_teacher_data(int m, int n, int teacher_N, double noise, std::uint64_t seed);

}  // namespace dcon
