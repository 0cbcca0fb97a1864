#include <doctest.h>

#include "dcon/alpha.hpp"
#include "dcon/errors.hpp"
#include "dcon/model.hpp"
#include "oracles.hpp"

using namespace dcon;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE("alpha") {

TEST_CASE("build_sigma examples") {
    Philox r(60, 1);
    const Dataset d = oracle::random_dataset(6, 2, r);
    CHECK(build_sigma(zero_params(3, 2), d.X).isZero(0.0));
    Params p = zero_params(1, 1);
    p.W(0, 0) = 1.0;
    MatrixXd X(2, 1);
    X << 1.0, -1.0;
    const MatrixXd S = build_sigma(p, X);
    CHECK(S(0, 0) == 1.0);
    CHECK(S(1, 0) == 0.0);
    const Params q = oracle::random_params(4, 2, r);
    CHECK(build_sigma(q, d.X).minCoeff() >= 0.0);
}

TEST_CASE("solve_alpha closed forms") {
    const VectorXd y = Eigen::Vector3d(1.0, -2.0, 0.5);
    CHECK(solve_alpha(MatrixXd::Identity(3, 3), y, 1.0).isApprox(y / 2, 1e-14));
    CHECK(solve_alpha(MatrixXd::Zero(3, 2), y, 1e-3).isZero(0.0));
    CHECK_THROWS_AS(solve_alpha(MatrixXd::Identity(3, 3), y, 0.0), validation_error);
    CHECK_THROWS_AS(solve_alpha(MatrixXd::Identity(2, 2), y, 1.0), validation_error);
}

TEST_CASE("solution zeroes the gradient and matches the normal equations") {
    Philox r(61, 1);
    for (int t = 0; t < 20; ++t) {
        const Dataset d = oracle::random_dataset(30, 3, r);
        const Params p = oracle::random_params(5, 3, r);
        const MatrixXd S = build_sigma(p, d.X);
        const double g = t % 2 ? 1e-3 : 1e-1;
        const VectorXd a = solve_alpha(S, d.y, g);
        const VectorXd grad = (2.0 / 30) * (S.transpose() * (S * a - d.y) + g * a);
        CHECK(grad.cwiseAbs().maxCoeff() <= 1e-10);
        const MatrixXd A = S.transpose() * S + g * MatrixXd::Identity(5, 5);
        CHECK((a - A.ldlt().solve(S.transpose() * d.y)).norm() <= 1e-8 * (1 + a.norm()));
    }
}

TEST_CASE("dead neurons get zero weight") {
    Philox r(62, 1);
    const Dataset d = oracle::random_dataset(10, 2, r);
    Params p = oracle::random_params(3, 2, r);
    p.W.row(1).setZero();
    p.b(1) = -1.0;
    const VectorXd a = solve_alpha(build_sigma(p, d.X), d.y, 1e-3);
    CHECK(std::abs(a(1)) <= 1e-14);
}

TEST_CASE("objective decrease equals the exact quadratic form") {
    Philox r(63, 1);
    for (int t = 0; t < 20; ++t) {
        const int m = 30, N = 5;
        const Dataset d = oracle::random_dataset(m, 2, r);
        const MatrixXd S = build_sigma(oracle::random_params(N, 2, r), d.X);
        const double g = 1e-2;
        const VectorXd a_old = oracle::random_vector(N, r);
        const VectorXd a = solve_alpha(S, d.y, g);
        const VectorXd delta = a_old - a;
        const double dec = alpha_objective(S, d.y, g, a_old) - alpha_objective(S, d.y, g, a);
        const double exact = delta.dot((S.transpose() * S + g * MatrixXd::Identity(N, N)) * delta) / m;
        CHECK(dec == doctest::Approx(exact).epsilon(1e-8));
        // the weaker (gamma/m) ||delta||^2 form follows
        CHECK(dec >= g / m * delta.squaredNorm() - 1e-12);
    }
}

TEST_CASE("two solves agree bitwise") {
    Philox r(64, 1);
    const Dataset d = oracle::random_dataset(25, 3, r);
    const MatrixXd S = build_sigma(oracle::random_params(6, 3, r), d.X);
    const VectorXd a = solve_alpha(S, d.y, 1e-3), b = solve_alpha(S, d.y, 1e-3);
    CHECK(a == b);
}

}
