#include <doctest.h>

#include <random>
#include <set>
#include <stdexcept>

#include "cv2x/resource_grid.hpp"

using namespace cv2x;

TEST_CASE("enumerate_candidates counts") {
    const auto p20 = PoolConfig::for_bandwidth(20);
    const auto p10 = PoolConfig::for_bandwidth(10);
    // Oracle: count by walking the window directly.
    auto brute = [](Subframe n, int t1, int t2, int subchannels) {
        int count = 0;
        for (Subframe sf = n + t1; sf <= n + t2; ++sf)
            for (int c = 0; c + 2 <= subchannels; ++c) ++count;
        return count;
    };
    CHECK(enumerate_candidates(SelectionWindow(1000, 4, 90, 100), p20).size() == 783u);
    CHECK(brute(1000, 4, 90, 10) == 783);
    CHECK(enumerate_candidates(SelectionWindow(0, 4, 90, 100), p10).size() == 348u);
    CHECK(brute(0, 4, 90, 5) == 348);

    PoolConfig tiny;
    tiny.subchannels_per_subframe = 2;
    const auto c = enumerate_candidates(SelectionWindow(0, 4, 90, 100), tiny);
    CHECK(c.size() == 87u);
    for (const auto& s : c) CHECK(s.start_subchannel == 0);
}

TEST_CASE("enumeration order is sub-frame major") {
    const auto c = enumerate_candidates(SelectionWindow(50, 4, 5, 100), PoolConfig::for_bandwidth(10));
    REQUIRE(c.size() == 8u);
    CHECK(c[0] == SlotCoord{54, 0});
    CHECK(c[3] == SlotCoord{54, 3});
    CHECK(c[4] == SlotCoord{55, 0});
    CHECK(std::is_sorted(c.begin(), c.end()));
}

TEST_CASE("window_for_generation") {
    CHECK(window_for_generation(0, 100).t2() == 90);
    CHECK(window_for_generation(0, 25).t2() == 20);
    CHECK(window_for_generation(0, 31).t2() == 21);
    CHECK(window_for_generation(0, 100).t1() == 4);
    const auto w = window_for_generation(1000, 100);
    CHECK(w.first() == 1004);
    CHECK(w.last() == 1090);
    CHECK(w.contains(1004));
    CHECK_FALSE(w.contains(1091));
    CHECK_THROWS_AS(window_for_generation(0, 0), std::invalid_argument);
    CHECK_THROWS_AS(SelectionWindow(0, 5, 90, 100), std::invalid_argument);
    CHECK_THROWS_AS(SelectionWindow(0, 4, 3, 100), std::invalid_argument);
}

TEST_CASE("window t2 is monotone in pdb from 30 ms") {
    int prev = window_for_generation(0, 30).t2();
    for (int pdb = 31; pdb <= 1000; ++pdb) {
        const int t2 = window_for_generation(0, pdb).t2();
        CHECK(t2 >= prev);
        prev = t2;
    }
}

TEST_CASE("candidate count formula, duplicate-free and in pool") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const auto pool = PoolConfig::for_bandwidth(trial % 2 ? 10 : 20);
        const int t1 = std::uniform_int_distribution<int>(0, 4)(rng);
        const int pdb = std::uniform_int_distribution<int>(1, 300)(rng);
        const Subframe n = std::uniform_int_distribution<int>(0, 100000)(rng);
        const SelectionWindow w(n, t1, t2_for_pdb(pdb), pdb);
        const auto c = enumerate_candidates(w, pool);
        CHECK(static_cast<int>(c.size()) == (w.t2() - w.t1() + 1) * (pool.subchannels_per_subframe - 1));
        CHECK(static_cast<int>(c.size()) == candidate_count(w, pool));
        std::set<SlotCoord> unique(c.begin(), c.end());
        CHECK(unique.size() == c.size());
        for (const auto& s : c) {
            CHECK(fits_pool(s, pool));
            CHECK(w.contains(s.subframe));
        }
    }
}

TEST_CASE("pool validation") {
    CHECK_NOTHROW(PoolConfig::for_bandwidth(20).validate());
    CHECK(PoolConfig::for_bandwidth(10).subchannels_per_subframe == 5);
    PoolConfig bad = PoolConfig::for_bandwidth(20);
    bad.subchannels_per_subframe = 5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = PoolConfig::for_bandwidth(20);
    bad.prbs_per_subchannel = 12;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(PoolConfig::for_bandwidth(15), std::invalid_argument);
    const auto p = PoolConfig::for_bandwidth(20);
    CHECK(p.prbs_per_bsm() == 20);
    CHECK(p.pssch_prbs() == 18);
}

TEST_CASE("slot fits pool only as a contiguous pair") {
    const auto p = PoolConfig::for_bandwidth(10);
    CHECK(fits_pool({0, 3}, p));
    CHECK_FALSE(fits_pool({0, 4}, p));
    CHECK_FALSE(fits_pool({0, -1}, p));
}

TEST_CASE("grant anchoring") {
    const SlotCoord rel{37, 2};
    CHECK(anchor(rel, 1000) == SlotCoord{1037, 2});
    CHECK(anchor(rel, 1100) == SlotCoord{1137, 2});
}
