#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "nbmmse/errors.hpp"
#include "nbmmse/simkit.hpp"

using namespace nbmmse;

namespace {
MonteCarloSpec small_mc(std::int64_t paths, double dt = 1.0 / 512.0, int grid = 64) {
    MonteCarloSpec mc;
    mc.paths = paths;
    mc.dt = dt;
    mc.theta_grid_size = grid;
    return mc;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}
}  // namespace

TEST_CASE("tone path has unit average energy and zero average value") {
    const ToneGrid grid = ToneGrid::standard(3);
    const auto alloc = SpectrumAllocation::equal(3);
    const MonteCarloSpec mc = small_mc(1, 1.0 / 4096.0);
    const SampledPath path = sample_tone_path(grid, alloc, mc, 0);
    CHECK(path.values.size() == 4096);
    CHECK(path.latent.size() == 3);

    double energy = 0.0, total = 0.0;
    for (double v : path.values) {
        energy += v * v * mc.dt;
        total += v * mc.dt;
    }
    // Riemann sum of an exact-period tone grid: energy 1, mean 0.
    CHECK(energy == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::fabs(total) < 1e-10);
}

TEST_CASE("distinct waves are orthogonal along the path") {
    const MonteCarloSpec mc = small_mc(1, 1.0 / 4096.0);
    const ToneGrid g1(1.0, {2});
    const ToneGrid g2(1.0, {5});
    const auto one = SpectrumAllocation::equal(1);
    const SampledPath p1 = sample_tone_path(g1, one, mc, 7);
    const SampledPath p2 = sample_tone_path(g2, one, mc, 7);
    double dot = 0.0;
    for (std::size_t j = 0; j < p1.values.size(); ++j) dot += p1.values[j] * p2.values[j] * mc.dt;
    CHECK(std::fabs(dot) < 1e-10);
}

TEST_CASE("paths are deterministic in (seed, path_index) and independent across indices") {
    const ToneGrid grid = ToneGrid::standard(2);
    const auto alloc = SpectrumAllocation::equal(2);
    const MonteCarloSpec mc = small_mc(4);
    const SampledPath a = sample_tone_path(grid, alloc, mc, 3);
    const SampledPath b = sample_tone_path(grid, alloc, mc, 3);
    CHECK(a.values == b.values);
    CHECK(a.latent == b.latent);
    const SampledPath c = sample_tone_path(grid, alloc, mc, 4);
    CHECK(a.latent != c.latent);

    MonteCarloSpec reseeded = mc;
    reseeded.seed = 43;
    CHECK(sample_tone_path(grid, alloc, reseeded, 3).latent != a.latent);
}

TEST_CASE("tone phases are uniform on the circle") {
    const ToneGrid grid = ToneGrid::standard(1);
    const auto alloc = SpectrumAllocation::equal(1);
    const MonteCarloSpec mc = small_mc(4000);
    std::vector<double> cs, ss;
    for (std::int64_t p = 0; p < mc.paths; ++p) {
        const double theta = sample_tone_path(grid, alloc, mc, static_cast<std::uint64_t>(p))
                                 .latent.front();
        CHECK(theta >= 0.0);
        CHECK(theta < 2 * std::numbers::pi);
        cs.push_back(std::cos(theta));
        ss.push_back(std::sin(theta));
    }
    // E cos = E sin = 0 with sd = 1/sqrt(2n): allow 4 sigma.
    const double bound = 4.0 / std::sqrt(2.0 * static_cast<double>(mc.paths));
    CHECK(std::fabs(mean(cs)) < bound);
    CHECK(std::fabs(mean(ss)) < bound);
}

TEST_CASE("gaussian path matches the tone covariance structure") {
    const ToneGrid grid = ToneGrid::standard(2);
    const MonteCarloSpec mc = small_mc(6000, 1.0 / 256.0);
    // At fixed t, xi_gauss(t) is a sum of 2N scaled normals with total
    // variance sum_i (2/N T)(cos^2 + sin^2)/2... = 1/T at every t except
    // accumulated over waves: Var xi(t) = (1/T) sum_i 2 a_i^2 ... = 1.
    const std::size_t probe = 100;
    std::vector<double> at_probe;
    double second = 0.0;
    for (std::int64_t p = 0; p < mc.paths; ++p) {
        const SampledPath path = sample_gaussian_path(grid, mc, static_cast<std::uint64_t>(p));
        CHECK(path.latent.size() == 4);
        at_probe.push_back(path.values[probe]);
        second += path.values[probe] * path.values[probe];
    }
    const double n = static_cast<double>(mc.paths);
    CHECK(std::fabs(mean(at_probe)) < 4.0 / std::sqrt(n));
    // Var of sample second moment of N(0,1) is 2/n.
    CHECK(std::fabs(second / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("observation increments accumulate signal drift plus unit-rate noise") {
    const ToneGrid grid = ToneGrid::standard(1);
    const auto alloc = SpectrumAllocation::equal(1);
    const MonteCarloSpec mc = small_mc(2000, 1.0 / 512.0);
    const ChannelSnr snr{4.0};
    double drift_err = 0.0, qvar = 0.0;
    const std::int64_t m = mc.steps(grid.horizon);
    for (std::int64_t p = 0; p < mc.paths; ++p) {
        const SampledPath sig = sample_tone_path(grid, alloc, mc, static_cast<std::uint64_t>(p));
        const ObservationPath obs =
            simulate_observation(sig, snr, mc.seed, static_cast<std::uint64_t>(p));
        CHECK(obs.increments.size() == static_cast<std::size_t>(m));
        double sum = 0.0, drift = 0.0;
        for (std::int64_t j = 0; j < m; ++j) {
            sum += obs.increments[static_cast<std::size_t>(j)];
            drift += std::sqrt(snr.q) * sig.values[static_cast<std::size_t>(j)] * mc.dt;
            qvar += std::pow(obs.increments[static_cast<std::size_t>(j)] -
                                 std::sqrt(snr.q) * sig.values[static_cast<std::size_t>(j)] * mc.dt,
                             2);
        }
        drift_err += (sum - drift);
    }
    const double n_incr = static_cast<double>(mc.paths * m);
    // Residual increments are N(0, dt): quadratic variation ~ paths * T.
    CHECK(qvar / n_incr == doctest::Approx(mc.dt).epsilon(0.05));
    // Mean of summed noise over paths ~ N(0, T/paths).
    CHECK(std::fabs(drift_err / static_cast<double>(mc.paths)) <
          4.0 / std::sqrt(static_cast<double>(mc.paths)));
}

TEST_CASE("monte carlo oracle agrees with the closed form at gamma = 2") {
    MonteCarloSpec mc = small_mc(120000);
    const MonteCarloEstimate est = mmse_tone_oracle(2.0, mc);
    const double closed = 0.4671041124200564752791;
    CHECK(std::fabs(est.estimate - closed) <= 3.0 * est.std_error);
    CHECK(est.std_error < 2e-3);
}

TEST_CASE("oracle quadrature variant nails the closed form") {
    for (double gamma : {0.5, 2.0, 100.0}) {
        const ErrorComponent oracle = mmse_tone_oracle_quadrature(gamma);
        const double closed =
            mmse_tone_sum(SpectrumAllocation::equal(1), ChannelSnr{gamma}).value;
        CHECK(std::fabs(oracle.value - closed) < 1e-8);
    }
    CHECK(mmse_tone_oracle_quadrature(0.0).value == 1.0);
    const ErrorComponent deep = mmse_tone_oracle_quadrature(1e4);
    CHECK(deep.value < 0.01);
    CHECK(deep.value > 0.0);
    CHECK(deep.value > mmse_tone_oracle_quadrature(1e5).value);
}

TEST_CASE("sum oracle splits across waves with independent substreams") {
    const auto alloc = SpectrumAllocation::equal(7);
    const ChannelSnr snr{100.0};
    MonteCarloSpec mc = small_mc(40000);
    const MonteCarloEstimate est = mmse_sum_oracle(alloc, snr, mc);
    const double closed = mmse_tone_sum(alloc, snr).value;
    CHECK(std::fabs(est.estimate - closed) <= 3.0 * est.std_error);

    const ErrorComponent quad = mmse_sum_oracle_quadrature(alloc, snr);
    CHECK(std::fabs(quad.value - closed) < 1e-8);
}

TEST_CASE("envelope law passes a ks test") {
    const double stat = envelope_ks_statistic(1.0, 20000, 42);
    CHECK(stat < 1.94947 / std::sqrt(20000.0));
    CHECK(stat > 0.0);
    CHECK(envelope_ks_statistic(1.0, 20000, 42) == stat);  // seed-deterministic
}

TEST_CASE("causal filter approaches one at vanishing snr") {
    const ToneGrid grid = ToneGrid::standard(1);
    const MonteCarloEstimate est =
        cmmse_causal_estimate(grid, ChannelSnr{1e-6}, small_mc(50, 1.0 / 256.0, 32));
    CHECK(est.estimate == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("causal filter tracks the closed form at q = 1 with loose settings") {
    const ToneGrid grid = ToneGrid::standard(1);
    const MonteCarloSpec mc = small_mc(1500, 1.0 / 1024.0, 128);
    const MonteCarloEstimate est = cmmse_causal_estimate(grid, ChannelSnr{1.0}, mc);
    const double closed = cmmse_tone_sum(SpectrumAllocation::equal(1), ChannelSnr{1.0}).value;
    CHECK(std::fabs(est.estimate - closed) <= std::max(3.0 * est.std_error, 0.02 * closed));
    CHECK(est.std_error > 0.0);
}

TEST_CASE("posterior weights stay normalized through every step") {
    const ToneGrid grid = ToneGrid::standard(1);
    const MonteCarloSpec mc = small_mc(2, 1.0 / 128.0, 32);
    std::int64_t calls = 0;
    double worst = 0.0;
    cmmse_causal_estimate(grid, ChannelSnr{2.0}, mc,
                          [&](std::int64_t, std::span<const double> w) {
                              ++calls;
                              double sum = 0.0;
                              double low = 1.0;
                              for (double x : w) {
                                  sum += x;
                                  low = std::min(low, x);
                              }
                              worst = std::max(worst, std::fabs(sum - 1.0));
                              if (low < 0.0) worst = 1.0;
                          });
    CHECK(calls == 2 * 128);
    CHECK(worst < 1e-12);
}

TEST_CASE("halving dt moves the causal estimate by less than the tolerance budget") {
    const ToneGrid grid = ToneGrid::standard(1);
    const ChannelSnr q2{2.0};
    const MonteCarloEstimate coarse = cmmse_causal_estimate(grid, q2, small_mc(800, 1.0 / 512.0, 128));
    const MonteCarloEstimate fine = cmmse_causal_estimate(grid, q2, small_mc(800, 1.0 / 1024.0, 128));
    CHECK(std::fabs(coarse.estimate - fine.estimate) <
          3.0 * std::hypot(coarse.std_error, fine.std_error) + 0.01);
}

TEST_CASE("spec and grid validation") {
    MonteCarloSpec mc;
    mc.dt = 0.3;  // does not divide T=1
    CHECK_THROWS_AS(mc.validate(1.0), std::invalid_argument);
    mc = MonteCarloSpec{};
    mc.paths = 0;
    CHECK_THROWS_AS(mc.validate(1.0), std::invalid_argument);
    mc = MonteCarloSpec{};
    mc.theta_grid_size = 8;
    CHECK_THROWS_AS(mc.validate(1.0), std::invalid_argument);

    CHECK_THROWS_AS(ToneGrid(1.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(ToneGrid(1.0, {2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(ToneGrid(1.0, {0}), std::invalid_argument);
    CHECK_THROWS_AS(ToneGrid(-1.0, {1}), std::invalid_argument);

    // Causal filter is single-wave only and needs q > 0.
    const MonteCarloSpec ok = small_mc(2, 1.0 / 64.0, 32);
    CHECK_THROWS_AS(cmmse_causal_estimate(ToneGrid::standard(2), ChannelSnr{1.0}, ok),
                    std::domain_error);
    CHECK_THROWS_AS(cmmse_causal_estimate(ToneGrid::standard(1), ChannelSnr{0.0}, ok),
                    std::domain_error);
}
