#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcon/model.hpp"
#include "dcon/trainer.hpp"

namespace dcon {

struct OrderEstimate {
    double slope = 0.0;
    double intercept = 0.0;
    int window_start = 0;  // indices into the input sequence, inclusive
    int window_end = 0;
    double r_squared = 0.0;
    int trimmed = 0;       // trailing entries dropped below the floor
};

struct OrderOptions {
    double transient_fraction = 0.25;
    double floor = 1e-14;
};

// Least-squares slope of ln e_{k+1} against ln e_k.
OrderEstimate estimate_order(const std::vector<double>& e, const OrderOptions& opt = {});

// Stationarity measure with eps_h = 1 and eps_g chosen by box-constrained least squares
// on near-zero activations (|pre| <= delta), using the shifted step H(x > -delta).
double subdiff_norm(const Params& p, const Dataset& d, const LossConfig& c, double delta = 1e-6,
                    int pg_iters = 500);

// Proximal point iteration on f(x) = ||x||^{2q/(2q-1)}.
struct ProxTrajectory {
    std::vector<double> norms;  // ||x^k||
    std::vector<double> steps;  // ||x^{k+1} - x^k||
};

// Solves (1 + c r^{2(1-q)/(2q-1)}) r = R for r in [0, R], c = 2 q lambda / (2q - 1).
double prox_norm_update(int q, double lambda, double R);
ProxTrajectory prox_kl_trajectory(int q, double lambda, const Eigen::VectorXd& x0,
                                  int max_iters = 200);
// log(d_{k+1}/d_k) / log(d_k/d_{k-1}) at the last k with all three steps positive.
double prox_order_ratio(const std::vector<double>& steps);

struct ProxTrial {
    double order = 0.0;
    int iterations = 0;
};

std::vector<ProxTrial> prox_kl_demo(int q, int dim, double lambda, int trials, std::uint64_t seed);

struct DecreaseViolation {
    int epoch = 0;  // 1-based epoch whose step broke the inequality
    double decrease = 0.0;
    double required = 0.0;
};

// Flags epochs with loss_{k-1} - loss_k < a * step_k^2 - slack.
std::vector<DecreaseViolation> sufficient_decrease_audit(const TrainReport& report, double a,
                                                         double slack = 1e-6);
std::vector<DecreaseViolation> sufficient_decrease_audit(double initial_loss,
                                                         const std::vector<double>& loss,
                                                         const std::vector<double>& dist,
                                                         double a, double slack = 1e-6);

double h1_constant(double gamma, double sigma_min, int K, int m);

// Trace CSV: epoch,loss,mse,dist,subdiff_norm
void write_trace_csv(std::ostream& out, const TrainReport& report);
struct TraceTable {
    std::vector<int> epoch;
    std::vector<double> loss, mse, dist, subdiff;
};
TraceTable read_trace_csv(const std::string& path);

}  // namespace dcon
