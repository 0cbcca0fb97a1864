#include <cmath>
#include <limits>

#include <doctest.h>

#include "dcon/bvls.hpp"
#include "dcon/rng.hpp"
#include "oracles.hpp"

using namespace dcon;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// every variable at lo, at hi, or free
double brute_force(const MatrixXd& A, const VectorXd& r, const VectorXd& lo, const VectorXd& hi) {
    const int k = static_cast<int>(A.cols());
    int total = 1;
    for (int i = 0; i < k; ++i) total *= 3;
    double best = std::numeric_limits<double>::infinity();
    for (int code = 0; code < total; ++code) {
        VectorXd t(k);
        std::vector<int> free;
        int c = code;
        for (int i = 0; i < k; ++i, c /= 3) {
            if (c % 3 == 0) t(i) = lo(i);
            else if (c % 3 == 1) t(i) = hi(i);
            else free.push_back(i);
        }
        if (!free.empty()) {
            MatrixXd Af(A.rows(), free.size());
            VectorXd fixed = r;
            for (int i = 0; i < k; ++i) {
                bool is_free = false;
                for (int f : free) is_free |= f == i;
                if (!is_free) fixed -= A.col(i) * t(i);
            }
            for (std::size_t j = 0; j < free.size(); ++j) Af.col(j) = A.col(free[j]);
            const VectorXd tf = Af.completeOrthogonalDecomposition().solve(fixed);
            bool ok = true;
            for (std::size_t j = 0; j < free.size(); ++j) {
                t(free[j]) = tf(j);
                ok &= tf(j) >= lo(free[j]) - 1e-12 && tf(j) <= hi(free[j]) + 1e-12;
            }
            if (!ok) continue;
        }
        best = std::min(best, (A * t - r).norm());
    }
    return best;
}

}  // namespace

TEST_SUITE("bvls") {

TEST_CASE("unconstrained interior solution is plain least squares") {
    MatrixXd A(3, 2);
    A << 1, 0, 0, 1, 1, 1;
    const VectorXd t0 = Eigen::Vector2d(0.3, -0.2);
    const BvlsResult res = bvls(A, A * t0, VectorXd::Constant(2, -1), VectorXd::Constant(2, 1));
    CHECK(res.optimal);
    CHECK((res.t - t0).norm() <= 1e-12);
    CHECK(res.residual_norm <= 1e-12);
}

TEST_CASE("bounds are active when the unconstrained optimum leaves the box") {
    const MatrixXd A = MatrixXd::Identity(2, 2);
    const BvlsResult res = bvls(A, Eigen::Vector2d(3, -3), VectorXd::Zero(2), VectorXd::Ones(2));
    CHECK(res.optimal);
    CHECK(res.t(0) == 1.0);
    CHECK(res.t(1) == 0.0);
}

TEST_CASE("agrees with brute-force face enumeration") {
    Philox rng(40, 1);
    for (int trial = 0; trial < 60; ++trial) {
        const int rows = 2 + static_cast<int>(rng.below(6)), k = 1 + static_cast<int>(rng.below(5));
        MatrixXd A(rows, k);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < k; ++j) A(i, j) = rng.normal();
        if (trial % 5 == 0) A.col(0) = A.col(k - 1);  // rank deficient now and then
        const VectorXd r = oracle::random_vector(rows, rng, 2.0);
        VectorXd lo(k), hi(k);
        for (int j = 0; j < k; ++j) {
            lo(j) = -rng.uniform(0.0, 1.0);
            hi(j) = rng.uniform(0.0, 1.0);
        }
        const BvlsResult res = bvls(A, r, lo, hi);
        CHECK(res.optimal);
        CHECK((res.t - lo).minCoeff() >= -1e-12);
        CHECK((hi - res.t).minCoeff() >= -1e-12);
        CHECK(res.residual_norm == doctest::Approx((A * res.t - r).norm()).epsilon(1e-12));
        CHECK(res.residual_norm <= brute_force(A, r, lo, hi) + 1e-9);
    }
}

}
