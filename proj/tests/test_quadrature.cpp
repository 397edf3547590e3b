#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nbmmse/quadrature.hpp"

using namespace nbmmse;

TEST_CASE("closed-form integrals within reported error") {
    QuadratureSpec spec;
    spec.abs_tol = 1e-12;
    spec.rel_tol = 1e-12;
    spec.tail_mass_bound = 1e-13;

    auto r1 = integrate_adaptive([](double x) { return std::sin(x); }, 0.0,
                                 std::numbers::pi, spec);
    CHECK(std::fabs(r1.value - 2.0) <= std::max(r1.error_estimate, 1e-13));

    auto r2 = integrate_adaptive([](double x) { return std::exp(-x); }, 0.0, 40.0, spec);
    CHECK(r2.value == doctest::Approx(1.0 - std::exp(-40.0)).epsilon(1e-12));

    auto r3 = integrate_adaptive([](double x) { return x * x * std::exp(-x * x / 2); },
                                 0.0, 30.0, spec);
    CHECK(r3.value == doctest::Approx(std::sqrt(std::numbers::pi / 2)).epsilon(1e-12));
}

TEST_CASE("breakpoints partition the domain exactly") {
    QuadratureSpec spec;
    const std::vector<double> brk{0.0, 1.0, 30.0};
    auto split = integrate_adaptive([](double x) { return std::exp(-x); }, brk, spec);
    CHECK(split.value == doctest::Approx(1.0 - std::exp(-30.0)).epsilon(1e-12));
    CHECK_THROWS_AS(integrate_adaptive([](double) { return 0.0; },
                                       std::vector<double>{0.0, 0.0, 1.0}, spec),
                    std::invalid_argument);
}

TEST_CASE("sharp peak forces subdivision but converges") {
    QuadratureSpec spec;
    spec.abs_tol = 1e-11;
    spec.rel_tol = 1e-11;
    spec.tail_mass_bound = 1e-12;
    // Narrow Gaussian away from panel centers.
    const double mu = 0.3141, s = 0.01;
    auto r = integrate_adaptive(
        [&](double x) {
            const double z = (x - mu) / s;
            return std::exp(-0.5 * z * z);
        },
        0.0, 1.0, spec);
    const double exact = s * std::sqrt(2 * std::numbers::pi);
    CHECK(r.value == doctest::Approx(exact).epsilon(1e-10));
    CHECK(r.subdivisions > 4);
}

TEST_CASE("subdivision cap raises QuadratureError carrying the best outcome") {
    QuadratureSpec spec;
    spec.abs_tol = 1e-14;
    spec.rel_tol = 1e-14;
    spec.tail_mass_bound = 1e-15;
    spec.max_subdivisions = 3;
    bool thrown = false;
    try {
        integrate_adaptive([](double x) { return std::sqrt(std::fabs(x - 0.123)); }, 0.0,
                           1.0, spec);
    } catch (const QuadratureError& e) {
        thrown = true;
        CHECK(e.best.subdivisions >= 3);
        const double exact = 2.0 / 3.0 * (std::pow(0.123, 1.5) + std::pow(0.877, 1.5));
        CHECK(e.best.value == doctest::Approx(exact).epsilon(1e-3));
        CHECK(e.best.error_estimate > 0.0);
    }
    CHECK(thrown);
}

TEST_CASE("spec validation rejects out-of-range fields") {
    QuadratureSpec ok;
    CHECK_NOTHROW(ok.validate());

    QuadratureSpec bad = ok;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.abs_tol = -1e-9;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.max_subdivisions = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.tail_mass_bound = bad.abs_tol;  // must stay <= abs_tol / 10
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.rel_tol = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("integration result is deterministic") {
    QuadratureSpec spec;
    auto f = [](double x) { return std::log1p(x) * std::exp(-0.7 * x); };
    const auto a = integrate_adaptive(f, 0.0, 25.0, spec);
    const auto b = integrate_adaptive(f, 0.0, 25.0, spec);
    CHECK(a.value == b.value);
    CHECK(a.error_estimate == b.error_estimate);
    CHECK(a.subdivisions == b.subdivisions);
}
