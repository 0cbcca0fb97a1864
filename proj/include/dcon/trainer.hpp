#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcon/data.hpp"
#include "dcon/dca.hpp"
#include "dcon/model.hpp"
#include "dcon/qp.hpp"

namespace dcon {

struct TrainConfig {
    int hidden_units = 10;
    double gamma = 1e-3;
    std::optional<int> epochs = 30;  // nullopt means run until the iterate settles
    int max_auto_epochs = 100000;
    DcaConfig dca;
    AdmmConfig admm;
    double auto_stop_tol = 1e-6;
    std::uint64_t seed = 0;
    bool record_subdiff = false;
    double subdiff_delta = 1e-6;

    void validate() const;
};

enum class StopReason { epochs_exhausted, auto_converged, error };
const char* to_string(StopReason r);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double reg_loss = 0.0;
    double mse = 0.0;
    double step_norm = 0.0;  // ||theta_k - theta_{k-1}||
    double subdiff_norm = -1.0;  // negative when not recorded
    double wall_seconds = 0.0;
};

struct TrainReport {
    double initial_reg_loss = 0.0;
    std::vector<EpochRecord> epochs;
    StopReason stop = StopReason::epochs_exhausted;
    std::string error_message;
    std::uint64_t seed = 0;
    double observed_param_norm_max = 0.0;  // max over neurons/epochs of ||(w_l,b_l)||^2
    double observed_alpha_norm_max = 0.0;  // max over epochs of ||alpha||^2
    long dc_solves = 0;
    long alpha_solves = 0;
    long dca_iterations = 0;
    long admm_iterations = 0;
    long dca_cap_hits = 0;
    long dca_rejected_steps = 0;  // passes cut short by an inexact QP step
    long restarts = 0;
    double sigma_min = 0.0;
};

struct TrainResult {
    Params params;
    TrainReport report;
    std::vector<Params> trace;  // theta after each epoch, only when keep_trace
};

Params xavier_init(int N, int n, std::uint64_t seed);

TrainResult train(const Dataset& d, const DesignMatrix& dm, const TrainConfig& cfg,
                  bool keep_trace = false);

double evaluate(const Params& p, const Dataset& d);

}  // namespace dcon
