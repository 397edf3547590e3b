// Monte Carlo ground truth: path sampling and independent estimator oracles.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nbmmse/allocation.hpp"
#include "nbmmse/errors.hpp"
#include "nbmmse/quadrature.hpp"

namespace nbmmse {

// Time horizon and the integer wave indices (circular frequencies 2 pi k / T).
struct ToneGrid {
    double horizon;
    std::vector<int> wave_indices;

    ToneGrid(double T, std::vector<int> indices);
    static ToneGrid standard(int n, double T = 1.0);  // k = 1..n
    int waves() const { return static_cast<int>(wave_indices.size()); }
};

enum class PathKind { ToneSum, GaussianSum };

struct SampledPath {
    double dt = 0.0;
    std::vector<double> values;  // samples at t = j*dt, j = 0..T/dt-1
    PathKind kind = PathKind::ToneSum;
    std::vector<double> latent;  // phases (tone) or 2N coefficients (gaussian)
};

struct ObservationPath {
    double dt = 0.0;
    std::vector<double> increments;  // sqrt(q)*signal*dt + N(0, dt) per step
};

struct MonteCarloSpec {
    std::int64_t paths = 20000;
    double dt = 1.0 / 8192.0;
    int theta_grid_size = 512;
    std::uint64_t seed = 42;

    // Throws std::invalid_argument unless paths >= 1, theta_grid_size >= 16,
    // and dt divides the horizon into an integer number of steps.
    void validate(double horizon) const;
    std::int64_t steps(double horizon) const;
};

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

SampledPath sample_tone_path(const ToneGrid& grid, const SpectrumAllocation& alloc,
                             const MonteCarloSpec& mc, std::uint64_t path_index);

SampledPath sample_gaussian_path(const ToneGrid& grid, const MonteCarloSpec& mc,
                                 std::uint64_t path_index);

ObservationPath simulate_observation(const SampledPath& signal, ChannelSnr snr,
                                     std::uint64_t seed, std::uint64_t path_index);

// Non-causal per-wave error m(gamma) = 1 - E[(I1/I0)(sqrt(gamma) r)^2] with
// r distributed by the tone envelope density: Monte Carlo over the complex
// observation v = sqrt(gamma) e^{i theta} + circular standard normal.
MonteCarloEstimate mmse_tone_oracle(double gamma, const MonteCarloSpec& mc);

// Deterministic variant of the same expectation by quadrature against f.
ErrorComponent mmse_tone_oracle_quadrature(double gamma, const QuadratureSpec& spec = {});

// sum_i alpha_i^2 m(alpha_i^2 q) with independent per-wave substreams;
// std_error combined in quadrature.
MonteCarloEstimate mmse_sum_oracle(const SpectrumAllocation& alloc, ChannelSnr snr,
                                   const MonteCarloSpec& mc);
ErrorComponent mmse_sum_oracle_quadrature(const SpectrumAllocation& alloc, ChannelSnr snr,
                                          const QuadratureSpec& spec = {});

// Called after each filter step with the freshly normalized posterior weights
// (test instrumentation; adds one extra pass when set).
using PosteriorObserver = std::function<void(std::int64_t step, std::span<const double> weights)>;

// Grid-posterior causal filter for the single-wave signal: Euler-discretized
// observation, exact discrete Bayes update over theta_grid_size phases, and
// the time-averaged squared estimation error (1/T) sum (xi - xi_hat)^2 dt
// averaged over paths.
MonteCarloEstimate cmmse_causal_estimate(const ToneGrid& grid, ChannelSnr snr,
                                         const MonteCarloSpec& mc,
                                         const PosteriorObserver& observer = {});

// Kolmogorov-Smirnov statistic of n_samples envelope draws |v| against the
// model CDF at concentration gamma.
double envelope_ks_statistic(double gamma, std::int64_t n_samples, std::uint64_t seed);

}  // namespace nbmmse
