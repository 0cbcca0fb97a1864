#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "dcon/data.hpp"
#include "dcon/errors.hpp"
#include "dcon/trainer.hpp"
#include "oracles.hpp"

using namespace dcon;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Dataset teacher1() {
    return minmax_scale(load_csv(std::string(DCON_TEST_DATA_DIR) + "/teacher1.csv", "y"));
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("xavier init is deterministic, bounded and seed dependent") {
    const Params a = xavier_init(6, 4, 3), b = xavier_init(6, 4, 3), c = xavier_init(6, 4, 4);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.flatten() != c.flatten());
    CHECK(a.W.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 10));
    CHECK(a.alpha.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 7));
    CHECK(a.b.isZero(0.0));
}

TEST_CASE("evaluate examples") {
    Philox r(70, 1);
    Dataset d = oracle::random_dataset(10, 2, r);
    const Params p = oracle::random_params(3, 2, r);
    d.y = predict_all(p, d.X);
    CHECK(evaluate(p, d) == 0.0);
    d.y = oracle::random_vector(10, r);
    d.y.array() -= d.y.mean();
    const double var = d.y.squaredNorm() / 10;
    CHECK(evaluate(zero_params(3, 2), d) == doctest::Approx(var).epsilon(1e-14));
    CHECK(std::abs(evaluate(p, d) - reg_loss(p, d, LossConfig{0.0})) <= 1e-12);
}

TEST_CASE("one epoch performs N DC solves and one alpha solve") {
    Philox r(71, 1);
    const Dataset d = oracle::random_dataset(20, 2, r);
    const DesignMatrix dm = build_design_matrix(d);
    TrainConfig cfg;
    cfg.hidden_units = 4;
    cfg.epochs = 1;
    const TrainResult res = train(d, dm, cfg);
    CHECK(res.report.dc_solves == 4);
    CHECK(res.report.alpha_solves == 1);
    CHECK(res.report.epochs.size() == 1);
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(d, dm, cfg), validation_error);
}

TEST_CASE("training is deterministic and the loss never rises") {
    Philox r(72, 1);
    const Dataset d = oracle::random_dataset(30, 3, r);
    const DesignMatrix dm = build_design_matrix(d);
    TrainConfig cfg;
    cfg.hidden_units = 4;
    cfg.epochs = 8;
    cfg.seed = 5;
    const TrainResult a = train(d, dm, cfg, true), b = train(d, dm, cfg, true);
    REQUIRE(a.report.stop == StopReason::epochs_exhausted);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) CHECK(a.trace[k].flatten() == b.trace[k].flatten());
    double prev = a.report.initial_reg_loss;
    for (const auto& e : a.report.epochs) {
        CHECK(e.reg_loss <= prev + 1e-9);
        prev = e.reg_loss;
    }
}

TEST_CASE("each epoch visits every neuron once") {
    Philox r(73, 1);
    const Dataset d = oracle::random_dataset(15, 2, r);
    const DesignMatrix dm = build_design_matrix(d);
    TrainConfig cfg;
    cfg.hidden_units = 5;
    cfg.epochs = 3;
    const TrainResult res = train(d, dm, cfg);
    CHECK(res.report.dc_solves == 15);
    Philox perm = make_stream(cfg.seed, "permutation");
    for (int k = 0; k < 3; ++k) {
        std::vector<int> p = random_permutation(5, perm);
        std::sort(p.begin(), p.end());
        for (int l = 0; l < 5; ++l) CHECK(p[l] == l);
    }
}

TEST_CASE("single ReLU teacher is fit by a single neuron") {
    const Dataset d = teacher1();
    const DesignMatrix dm = build_design_matrix(d);
    TrainConfig cfg;
    cfg.hidden_units = 1;
    cfg.epochs = std::nullopt;
    const TrainResult res = train(d, dm, cfg);
    CHECK(res.report.stop == StopReason::auto_converged);
    CHECK(evaluate(res.params, d) <= 1e-4);
}

TEST_CASE("iterates stay within the boundedness witness") {
    Philox r(74, 1);
    for (int t = 0; t < 3; ++t) {
        const Dataset d = oracle::random_dataset(25, 2, r);
        const DesignMatrix dm = build_design_matrix(d);
        TrainConfig cfg;
        cfg.hidden_units = 4;
        cfg.gamma = 1e-2;
        cfg.epochs = 10;
        cfg.seed = static_cast<std::uint64_t>(t);
        const TrainResult res = train(d, dm, cfg);
        const TrainReport& rep = res.report;
        const double L0 = rep.initial_reg_loss, m = d.m(), s = dm.sigma_min;
        CHECK(rep.observed_param_norm_max <= m * L0 / (cfg.gamma * s * s));
        CHECK(rep.observed_alpha_norm_max <= m * L0 / cfg.gamma);
    }
}

TEST_CASE("mismatched design matrix is rejected") {
    Philox r(75, 1);
    const Dataset d = oracle::random_dataset(10, 2, r), e = oracle::random_dataset(12, 2, r);
    CHECK_THROWS_AS(train(d, build_design_matrix(e), TrainConfig{}), validation_error);
}

}
