#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "airtemp/atc/atc.hpp"
#include "airtemp/core/rng.hpp"

using namespace airtemp;
using atc::AtcParamField;

namespace {

AtcParamField uniform_field(int h, int w, int n, float t0, float a, float phi, float rho = 0.f) {
    AtcParamField f(h, w, n);
    std::fill(f.t0.begin(), f.t0.end(), t0);
    std::fill(f.a.begin(), f.a.end(), a);
    std::fill(f.phi.begin(), f.phi.end(), phi);
    std::fill(f.rho.begin(), f.rho.end(), rho);
    return f;
}

AtcParamField random_field(int h, int w, int n, std::uint64_t seed) {
    AtcParamField f(h, w, n);
    Rng rng(seed);
    for (std::size_t i = 0; i < f.t0.size(); ++i) {
        f.t0[i] = static_cast<float>(rng.uniform(-5, 25));
        f.a[i] = static_cast<float>(rng.uniform(1, 18));
        f.phi[i] = static_cast<float>(rng.uniform(-3, 3));
        f.rho[i] = static_cast<float>(rng.uniform(0, 1));
    }
    return f;
}

} // namespace

TEST_CASE("atc_eval at phase zero returns the annual mean") {
    const AtcParamField f = uniform_field(2, 2, 365, 10.f, 15.f, 0.f);
    CHECK(atc::atc_eval(f, 0, 0, 0) == doctest::Approx(10.0));
}

TEST_CASE("atc_eval quarter-period peak") {
    const AtcParamField f = uniform_field(1, 1, 365, 10.f, 15.f, 0.f);
    CHECK(atc::atc_eval(f, 0, 0, 365.0 / 4.0) == doctest::Approx(25.0).epsilon(1e-9));
}

TEST_CASE("atc_eval matches the high-precision formula") {
    const AtcParamField f = uniform_field(3, 3, 366, 2.5f, 7.f, 1.2f);
    const double want = 2.5 + 7.0 * std::sin(2.0 * M_PI * 100.0 / 366.0 + 1.2);
    CHECK(std::fabs(atc::atc_eval(f, 1, 2, 100) - want) < 1e-6);
}

TEST_CASE("atc_eval rejects out-of-bounds pixels") {
    const AtcParamField f = uniform_field(2, 3, 365, 0.f, 1.f, 0.f);
    CHECK_THROWS_AS(atc::atc_eval(f, 2, 0, 0), IndexError);
    CHECK_THROWS_AS(atc::atc_eval(f, 0, 3, 0), IndexError);
    CHECK_THROWS_AS(atc::atc_eval(f, -1, 0, 0), IndexError);
}

TEST_CASE("atc_eval_stack with zero amplitude equals the T0 grid") {
    AtcParamField f = random_field(4, 5, 30, 7);
    std::fill(f.a.begin(), f.a.end(), 0.f);
    const GridStack g = atc::atc_eval_stack(f, 0, 30);
    for (int d = 0; d < 30; ++d) {
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 5; ++x) {
                CHECK(g.at(d, y, x) == doctest::Approx(f.t0[f.idx(y, x)]));
            }
        }
    }
}

TEST_CASE("atc_eval_stack single day equals per-pixel atc_eval") {
    const AtcParamField f = random_field(5, 4, 60, 11);
    const GridStack g = atc::atc_eval_stack(f, 17, 18);
    REQUIRE(g.c == 1);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 4; ++x) {
            CHECK(g.at(0, y, x) == doctest::Approx(atc::atc_eval(f, y, x, 17)));
        }
    }
}

TEST_CASE("atc_eval_stack spot-checked against the pointwise oracle") {
    const AtcParamField f = random_field(8, 8, 365, 13);
    const GridStack g = atc::atc_eval_stack(f, 0, 365);
    Rng rng(99);
    for (int probe = 0; probe < 100; ++probe) {
        const int y = rng.uniform_int(0, 7);
        const int x = rng.uniform_int(0, 7);
        const int d = rng.uniform_int(0, 364);
        const std::size_t i = f.idx(y, x);
        const double want = static_cast<double>(f.t0[i]) +
                            static_cast<double>(f.a[i]) *
                                std::sin(2.0 * M_PI * d / 365.0 + static_cast<double>(f.phi[i]));
        CHECK(std::fabs(g.at(d, y, x) - want) < 1e-5);
    }
}

TEST_CASE("periodicity: one full period apart agrees to 1e-5") {
    const AtcParamField f = random_field(4, 4, 365, 17);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            for (int t : {0, 50, 200}) {
                CHECK(std::fabs(atc::atc_eval(f, y, x, t) - atc::atc_eval(f, y, x, t + 365)) < 1e-5);
            }
        }
    }
}

TEST_CASE("bound: |atc - T0| never exceeds |A|") {
    const AtcParamField f = random_field(6, 6, 123, 19);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) {
            const std::size_t i = f.idx(y, x);
            for (int d = 0; d < 123; ++d) {
                CHECK(std::fabs(atc::atc_eval(f, y, x, d) - f.t0[i]) <=
                      std::fabs(f.a[i]) + 1e-9);
            }
        }
    }
}

TEST_CASE("mean over one period equals T0") {
    const AtcParamField f = random_field(3, 3, 365, 23);
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 3; ++x) {
            double acc = 0;
            for (int d = 0; d < 365; ++d) acc += atc::atc_eval(f, y, x, d);
            CHECK(std::fabs(acc / 365.0 - f.t0[f.idx(y, x)]) < 1e-3);
        }
    }
}

TEST_CASE("compact synthetic years are accepted, degenerate periods are not") {
    CHECK_NOTHROW(AtcParamField(4, 4, 10));
    CHECK_THROWS_AS(AtcParamField(4, 4, 1), DimensionError);
}
