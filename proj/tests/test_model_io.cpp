#include <cstdio>
#include <limits>

#include <doctest.h>

#include "dcon/errors.hpp"
#include "dcon/model_io.hpp"
#include "oracles.hpp"

using namespace dcon;

namespace {

ModelFile sample(std::uint64_t seed) {
    Philox r(seed, 9);
    ModelFile mf;
    mf.params = oracle::random_params(3, 2, r);
    mf.params.alpha(0) = 1.0 / 3.0;
    mf.params.W(1, 1) = -std::numeric_limits<double>::denorm_min();
    mf.params.b(2) = 1e300;
    mf.scaler.fitted = true;
    mf.scaler.features = {{0.1, 2.0}, {-3.0, 3.0}};
    mf.scaler.target = {0.0, 1.0 / 7.0};
    mf.feature_names = {"x \"one\"", "x2"};
    mf.target_name = "y";
    mf.gamma = 1e-3;
    mf.seed = 18446744073709551615ULL;
    mf.epochs = 30;
    mf.stopping_reason = "epochs_exhausted";
    mf.initial_reg_loss = 0.123456789012345678;
    return mf;
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("JSON round trip is bitwise") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const ModelFile a = sample(s);
        const ModelFile b = model_from_json(model_to_json(a));
        CHECK(b.params.alpha == a.params.alpha);
        CHECK(b.params.W == a.params.W);
        CHECK(b.params.b == a.params.b);
        CHECK(b.scaler.fitted);
        CHECK(b.scaler.features[1].min == a.scaler.features[1].min);
        CHECK(b.scaler.target.max == a.scaler.target.max);
        CHECK(b.feature_names == a.feature_names);
        CHECK(b.target_name == a.target_name);
        CHECK(b.gamma == a.gamma);
        CHECK(b.seed == a.seed);
        CHECK(b.epochs == a.epochs);
        CHECK(b.stopping_reason == a.stopping_reason);
        CHECK(b.initial_reg_loss == a.initial_reg_loss);
        CHECK(model_to_json(b) == model_to_json(a));
    }
}

TEST_CASE("file round trip") {
    const ModelFile a = sample(3);
    const std::string path = "model_io_roundtrip.json";
    save_model(path, a);
    const ModelFile b = load_model(path);
    std::remove(path.c_str());
    CHECK(b.params.flatten() == a.params.flatten());
    CHECK_THROWS_AS(load_model("no/such/model.json"), validation_error);
}

TEST_CASE("malformed model files are rejected") {
    const std::string good = model_to_json(sample(1));
    CHECK_THROWS_AS(model_from_json("{"), validation_error);
    CHECK_THROWS_AS(model_from_json("[]"), validation_error);
    auto replaced = [&](const std::string& from, const std::string& to) {
        std::string s = good;
        const auto pos = s.find(from);
        REQUIRE(pos != std::string::npos);
        s.replace(pos, from.size(), to);
        return s;
    };
    CHECK_THROWS_AS(model_from_json(replaced("\"schema_version\": 1", "\"schema_version\": 2")), validation_error);
    CHECK_THROWS_AS(model_from_json(replaced("\"N\": 3", "\"N\": 4")), validation_error);
    CHECK_THROWS_AS(model_from_json(replaced("\"n\": 2", "\"n\": 3")), validation_error);
    CHECK_THROWS_AS(model_from_json(replaced("\"alpha\"", "\"alpha_missing\"")), validation_error);
    CHECK_THROWS_AS(model_from_json(replaced("\"gamma\": 0.001", "\"gamma\": \"x\"")), validation_error);
}

}
