#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nbmmse/allocation.hpp"
#include "nbmmse/divergence.hpp"

using namespace nbmmse;

namespace {
// 40-digit quadrature references.
struct Golden {
    double q;
    double d;
};
const Golden kDivergence[] = {
    {0.1, 6.473067949177930703914e-7}, {0.5, 0.0002214427788246850248892},
    {1.0, 0.001989589200950376343011}, {2.0, 0.01324429311778199915618},
    {2.5, 0.02260951982844859339399},  {10.0, 0.251128988770252863857},
    {100.0, 1.21283421986557664149},   {1000.0, 2.344040241810170830486},
};
const Golden kDerivative[] = {
    {0.5, 0.001482181117952056156465}, {1.0, 0.005907734864842782737667},
    {2.0, 0.01644794378997176236044},  {2.5, 0.02087581560970726635174},
    {10.0, 0.02983912964584535798523}, {100.0, 0.004778267167024500724505},
};
}  // namespace

TEST_CASE("divergence matches reference values") {
    for (const auto& g : kDivergence) {
        const DivergenceResult r = divergence_single(g.q);
        CHECK(std::fabs(r.value - g.d) <= 1e-10);
        CHECK(std::fabs(r.value - g.d) <= r.error_estimate + 1e-12);
        CHECK(r.truncation_radius > std::sqrt(g.q));
    }
}

TEST_CASE("divergence derivative matches reference values") {
    for (const auto& g : kDerivative) {
        const DivergenceResult r = divergence_derivative(g.q);
        CHECK(std::fabs(r.value - g.d) <= 1e-10);
        CHECK(std::fabs(r.value - g.d) <= r.error_estimate + 1e-12);
    }
}

TEST_CASE("both vanish at q = 0") {
    CHECK(divergence_single(0.0).value == 0.0);
    CHECK(divergence_single(0.0).error_estimate == 0.0);
    CHECK(divergence_derivative(0.0).value == 0.0);
}

TEST_CASE("bounds: 0 <= D(q) <= ln(1 + q/2) and D'(q) >= 0") {
    for (double q : {1e-4, 0.03, 0.7, 5.0, 42.0, 1e4}) {
        const DivergenceResult d = divergence_single(q);
        CHECK(d.value >= 0.0);
        CHECK(d.value <= std::log1p(0.5 * q));
        CHECK(divergence_derivative(q).value >= -1e-14);
    }
}

TEST_CASE("series branch agrees with quadrature near the switch") {
    // Below 1e-3 the implementation evaluates the expansion
    // q^4/128 - q^5/64 + (121/4608) q^6 directly.
    const double q = 5e-4;
    const DivergenceResult r = divergence_single(q);
    const double series =
        std::pow(q, 4) / 128.0 - std::pow(q, 5) / 64.0 + 121.0 / 4608.0 * std::pow(q, 6);
    CHECK(r.value == series);
    CHECK(r.error_estimate > 0.0);
    CHECK(r.error_estimate < 1e-20);

    // Quadrature just above the switch, pushed to its rounding floor.
    QuadratureSpec tight;
    tight.abs_tol = 1e-17;
    tight.rel_tol = 1e-12;
    tight.tail_mass_bound = 1e-18;
    const double qq = 1.25e-3;
    const double via_quad = divergence_single(qq, tight).value;
    const double via_series =
        std::pow(qq, 4) / 128.0 - std::pow(qq, 5) / 64.0 + 121.0 / 4608.0 * std::pow(qq, 6);
    CHECK(via_quad == doctest::Approx(via_series).epsilon(1e-4));
}

TEST_CASE("quadrature resolves D(0.01) to eight digits") {
    QuadratureSpec tight;
    tight.abs_tol = 5e-15;
    tight.rel_tol = 1e-12;
    tight.tail_mass_bound = 5e-16;
    const DivergenceResult r = divergence_single(0.01, tight);
    CHECK(r.value == doctest::Approx(7.6588293069607e-11).epsilon(1e-6));
}

TEST_CASE("sum over equal allocations collapses to n times a single wave") {
    for (int n : {1, 3, 8}) {
        const auto alloc = SpectrumAllocation::equal(n);
        const DivergenceResult total = divergence_sum(alloc, 10.0);
        const DivergenceResult one = divergence_single(10.0 / n);
        CHECK(std::fabs(total.value - n * one.value) <=
              total.error_estimate + n * one.error_estimate + 1e-14);
    }
}

TEST_CASE("sum over unequal allocations adds per-wave terms") {
    const SpectrumAllocation alloc{{0.6, 0.8}};
    const double q = 4.0;
    const DivergenceResult total = divergence_sum(alloc, q);
    const double expect =
        divergence_single(0.36 * q).value + divergence_single(0.64 * q).value;
    CHECK(total.value == doctest::Approx(expect).epsilon(1e-12));
    CHECK(divergence_sum(alloc, q).value == total.value);  // deterministic
    CHECK(divergence_sum(alloc, 0.0).value == 0.0);
}

TEST_CASE("quadratic-rate fit recovers a synthetic model exactly") {
    // D_model = (a/2) q^2 + b q^3 + c q^4 lies inside the fitted model space,
    // so the intercept of D/q^2 must come back as a/2 with ~zero residual.
    const double a = 3.75e-3, b = -0.02, c = 0.4;
    const auto grid = default_d2_grid();
    std::vector<double> d(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = grid[i];
        d[i] = 0.5 * a * q * q + b * q * q * q + c * q * q * q * q;
    }
    const AsymptoticCoefficients fit = estimate_d2_from_values(grid, d);
    CHECK(fit.d2_at_zero == doctest::Approx(a).epsilon(1e-9));
    CHECK(fit.fit_residual < 1e-12);
}

TEST_CASE("quadratic rate of the divergence itself vanishes") {
    const AsymptoticCoefficients fit = estimate_d2_at_zero();
    CHECK(std::fabs(fit.d2_at_zero) < 1e-4);
    CHECK(fit.fit_residual < 1e-4);
    CHECK(fit.q_grid.size() >= 4);
    // Pinned against an extended-precision simulation of the same pipeline.
    CHECK(fit.d2_at_zero == doctest::Approx(-1.169336988e-6).epsilon(1e-3));
}

TEST_CASE("D(q)/q^2 decreases toward zero on a small-q ladder") {
    QuadratureSpec tight;
    tight.abs_tol = 1e-14;
    tight.rel_tol = 1e-12;
    tight.tail_mass_bound = 1e-15;
    double prev = divergence_single(0.1, tight).value / 0.01;
    for (double q : {0.01, 0.001}) {
        const double cur = divergence_single(q, tight).value / (q * q);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(divergence_single(-1.0), std::domain_error);
    CHECK_THROWS_AS(divergence_derivative(-0.1), std::domain_error);
    CHECK_THROWS_AS(estimate_d2_at_zero(QuadratureSpec{}, std::vector<double>{1e-5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(SpectrumAllocation(std::vector<double>{0.5, 0.5}),
                    std::invalid_argument);  // not unit energy
    CHECK_THROWS_AS(SpectrumAllocation(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("deep-tail truncation stays certified at extreme snr") {
    const DivergenceResult r = divergence_single(1e6);
    CHECK(r.value > 0.0);
    CHECK(r.value <= std::log1p(5e5));
    CHECK(r.truncation_radius > 1000.0);
    CHECK(r.error_estimate < 1e-8);
}
