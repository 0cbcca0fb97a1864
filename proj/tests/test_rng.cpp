#include <doctest.h>

#include <algorithm>
#include <set>

#include "dcon/rng.hpp"

using namespace dcon;

TEST_SUITE("rng") {

TEST_CASE("philox known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(Philox::block(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox::block(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox::block(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
    Philox a = make_stream(42, "init"), b = make_stream(42, "init"), c = make_stream(42, "permutation");
    bool differs = false;
    for (int i = 0; i < 64; ++i) {
        const auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
        CHECK(x == y);
        if (x != z) differs = true;
    }
    CHECK(differs);
    CHECK(stream_id("prox-start", 0) != stream_id("prox-start", 1));
    CHECK(stream_id("init") != stream_id("permutation"));
}

TEST_CASE("uniform and normal draws are in range with sane moments") {
    Philox r(7, 3);
    double sum = 0, sq = 0, nsum = 0, nsq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
        const double g = r.normal();
        nsum += g;
        nsq += g * g;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
    CHECK(std::abs(nsum / n) < 0.01);
    CHECK(nsq / n == doctest::Approx(1.0).epsilon(0.02));
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform(-2.0, 3.0);
        CHECK(u >= -2.0);
        CHECK(u < 3.0);
    }
}

TEST_CASE("below covers its range evenly") {
    Philox r(1, 1);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("random permutation is a permutation") {
    Philox r(3, 9);
    for (int n : {0, 1, 2, 10, 57}) {
        auto p = random_permutation(n, r);
        std::vector<int> s = p;
        std::sort(s.begin(), s.end());
        for (int i = 0; i < n; ++i) CHECK(s[i] == i);
    }
}

}
