#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "nete/rng.hpp"

using namespace nete;

TEST_CASE("same seed, same stream") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        differs = differs || x != c();
    }
    CHECK(differs);
}

TEST_CASE("substreams are keyed by id and index") {
    auto a = Rng::substream(7, "sample-1");
    auto b = Rng::substream(7, "sample-1");
    auto c = Rng::substream(7, "sample-2");
    auto d = Rng::substream(8, "sample-1");
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
    CHECK(Rng::substream(1, std::uint64_t{5})() == Rng::substream(1, std::uint64_t{5})());
    CHECK(Rng::substream(1, std::uint64_t{5})() != Rng::substream(1, std::uint64_t{6})());
}

TEST_CASE("fnv-1a reference values") {
    CHECK(hash_id("") == 0xcbf29ce484222325ull);
    CHECK(hash_id("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("uniform_index stays in range and covers it") {
    Rng r(1);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = r.uniform_index(7);
        REQUIRE(v < 7);
        ++hits[v];
    }
    // Chi-square with 6 dof; 22.46 is the 0.999 quantile.
    double chi2 = 0;
    for (int h : hits) chi2 += (h - 1000.0) * (h - 1000.0) / 1000.0;
    CHECK(chi2 < 22.46);
    CHECK(r.uniform_index(1) == 0);
}

TEST_CASE("uniform01, gaussian and rademacher moments") {
    Rng r(2);
    const int n = 200000;
    double su = 0, sg = 0, sg2 = 0, sr = 0;
    std::set<double> rvals;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double g = r.gaussian();
        sg += g;
        sg2 += g * g;
        const double s = r.rademacher();
        rvals.insert(s);
        sr += s;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sg / n) < 0.01);
    CHECK(sg2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(rvals == std::set<double>{-1.0, 1.0});
    CHECK(std::abs(sr / n) < 0.01);
}
