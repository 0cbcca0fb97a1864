#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dcon {

struct ColumnRange {
    double min = 0.0;
    double max = 1.0;
};

// Affine min-max map per column. An unfitted scaler is the identity.
struct ScalerState {
    bool fitted = false;
    std::vector<ColumnRange> features;
    ColumnRange target;

    double scale_value(double v, const ColumnRange& r) const;
    double unscale_value(double v, const ColumnRange& r) const;
};

struct Dataset {
    Eigen::MatrixXd X;  // m x n
    Eigen::VectorXd y;  // m
    std::vector<std::string> feature_names;
    std::string target_name;
    ScalerState scaler;

    int m() const { return static_cast<int>(X.rows()); }
    int n() const { return static_cast<int>(X.cols()); }
};

// M = [X | 1] and a thin SVD M = U_M diag(s) V_M^T, i.e. M^T = V_M diag(s) U_M^T.
struct DesignMatrix {
    Eigen::MatrixXd M;      // m x (n+1)
    Eigen::MatrixXd U;      // m x (n+1), left singular vectors of M
    Eigen::VectorXd s;      // n+1 singular values, descending
    Eigen::MatrixXd V;      // (n+1) x (n+1), right singular vectors of M
    double sigma_min = 0.0;

    int m() const { return static_cast<int>(M.rows()); }
    int n() const { return static_cast<int>(M.cols()) - 1; }
};

struct SplitSpec {
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct SplitResult {
    Dataset train, val, test;
    std::vector<int> train_idx, val_idx, test_idx;
};

inline constexpr double default_rank_tol = 1e-10;

// target may be a header name or, failing that, a 0-based column index.
// With target_optional a missing target yields an empty y.
Dataset load_csv(const std::string& path, const std::string& target, bool target_optional = false);
Dataset parse_csv(const std::string& text, const std::string& target,
                  const std::string& source = "<memory>", bool target_optional = false);

ScalerState fit_minmax(const Dataset& d);
Dataset apply_scaler(const Dataset& d, const ScalerState& s);
Dataset minmax_scale(const Dataset& d);  // fit on d, then apply
Dataset unscale(const Dataset& d);

// Smallest singular value of A in the sense sqrt(lambda_min(A^T A)),
// so a wide matrix reports 0.
double smallest_singular_value(const Eigen::MatrixXd& A);

Eigen::MatrixXd augment_ones(const Eigen::MatrixXd& X);
DesignMatrix build_design_matrix(const Dataset& d, double rank_tol = default_rank_tol);

Dataset subset(const Dataset& d, const std::vector<int>& rows);
SplitResult split(const Dataset& d, const SplitSpec& s);

// Scales train, then applies the train-fitted scaler to val and test.
SplitResult scale_split(const SplitResult& raw);

}  // namespace dcon
