#include <cmath>
#include <set>

#include "doctest.h"
#include "qaction/rng.hpp"

using namespace qaction;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are pure functions of their identity") {
    CounterRng a(123, StreamTag::lambda, 7, 9);
    CounterRng b(123, StreamTag::lambda, 7, 9);
    for (int i = 0; i < 20; ++i) CHECK(a.next_u32() == b.next_u32());

    std::set<std::uint32_t> firsts;
    firsts.insert(CounterRng(123, StreamTag::lambda, 7, 9).next_u32());
    firsts.insert(CounterRng(124, StreamTag::lambda, 7, 9).next_u32());
    firsts.insert(CounterRng(123, StreamTag::sampler, 7, 9).next_u32());
    firsts.insert(CounterRng(123, StreamTag::lambda, 8, 9).next_u32());
    firsts.insert(CounterRng(123, StreamTag::lambda, 7, 10).next_u32());
    firsts.insert(CounterRng(std::uint64_t{123} | (std::uint64_t{1} << 32), StreamTag::lambda, 7, 9).next_u32());
    CHECK(firsts.size() == 6);
}

TEST_CASE("uniform draws lie in [0, 1) with the right moments") {
    CounterRng rng(5, StreamTag::sampler);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sq / n - 1.0 / 3.0) < 4.0 * std::sqrt(4.0 / 45.0 / n));
}

TEST_CASE("blocks advance the counter") {
    CounterRng rng(1, StreamTag::lambda, 2, 3);
    const PhiloxCounter first = philox4x32_10({0, 3, 2, 1}, {1, 0});
    const PhiloxCounter second = philox4x32_10({1, 3, 2, 1}, {1, 0});
    for (std::uint32_t w : first) CHECK(rng.next_u32() == w);
    for (std::uint32_t w : second) CHECK(rng.next_u32() == w);
}
