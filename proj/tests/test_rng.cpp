#include "aivshop/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace aivshop;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed reproduces the sequence") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform01 stays inside the open unit interval") {
    Rng r(7);
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform01();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform_int covers the inclusive range") {
    Rng r(9);
    std::vector<int> seen(6, 0);
    for (int i = 0; i < 60000; ++i) {
        const long long v = r.uniform_int(2, 7);
        REQUIRE(v >= 2);
        REQUIRE(v <= 7);
        ++seen[static_cast<std::size_t>(v - 2)];
    }
    for (int c : seen) CHECK(c > 8000); // roughly uniform
}

TEST_CASE("exponential sample mean lands within 3% of the mean parameter") {
    Rng r(123);
    const double mean = 5.0;
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double x = r.exponential(mean);
        CHECK(x > 0.0);
        sum += x;
    }
    const double sample_mean = sum / n;
    CHECK(std::abs(sample_mean - mean) / mean < 0.03);
}

TEST_CASE("normal sample moments are close to the parameters") {
    Rng r(321);
    const int n = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal(15.0, 4.0);
        sum += x;
        sq += x * x;
    }
    const double m = sum / n;
    const double var = sq / n - m * m;
    CHECK(std::abs(m - 15.0) < 0.1);
    CHECK(std::abs(std::sqrt(var) - 4.0) < 0.1);
}

TEST_CASE("streams are independent of each other") {
    SeededStreams s(99);
    Rng layout_fresh = s.stream("layout");
    std::vector<std::uint64_t> expected;
    for (int i = 0; i < 16; ++i) expected.push_back(layout_fresh.next_u64());

    // Consuming a different stream first must not shift the layout stream.
    Rng arrivals = s.stream("arrivals");
    for (int i = 0; i < 777; ++i) arrivals.next_u64();
    Rng layout_again = s.stream("layout");
    for (int i = 0; i < 16; ++i) CHECK(layout_again.next_u64() == expected[i]);

    // Different names and salts give different sequences.
    CHECK(s.stream("arrivals").next_u64() != s.stream("breakdowns").next_u64());
    CHECK(s.stream("exploration", 0).next_u64() != s.stream("exploration", 1).next_u64());
}

TEST_SUITE_END();
