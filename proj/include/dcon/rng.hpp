#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dcon {

// Philox4x32-10 counter-based generator.
// key = 64-bit seed, counter = (block index, stream id). Each named stream is an
// independent sequence, so adding draws to one subsystem never shifts another.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream);

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    double uniform();                       // [0, 1), 53 random bits
    double uniform(double lo, double hi);
    double normal();                        // Box-Muller, no caching
    std::uint64_t below(std::uint64_t n);   // unbiased, n > 0

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int used_ = 4;
};

// 64-bit FNV-1a of a label, optionally mixed with an index (trial number etc.).
std::uint64_t stream_id(std::string_view label, std::uint64_t index = 0);

Philox make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

// Fisher-Yates shuffle of 0..n-1.
std::vector<int> random_permutation(int n, Philox& rng);

}  // namespace dcon
