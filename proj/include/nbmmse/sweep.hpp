// Parameter sweeps over N and q, CSV serialization, and the run configuration.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbmmse/quadrature.hpp"
#include "nbmmse/simkit.hpp"

namespace nbmmse {

struct SweepRow {
    int n = 0;
    double q = 0.0;
    double d_n = 0.0;
    double cmmse_tone = 0.0;
    double cmmse_gauss = 0.0;
    double mmse_tone = 0.0;
    double mmse_gauss = 0.0;
    double err_bound = 0.0;
};

struct AsymptoticsRow {
    int n = 0;
    double q = 0.0;
    double n_gap_cmmse_tone = 0.0;   // N * (1 - cmmse_tone)
    double n_gap_mmse_tone = 0.0;    // N * (1 - mmse_tone)
    double n_gap_cmmse_gauss = 0.0;  // N * (1 - cmmse_gauss)
    double n_gap_mmse_gauss = 0.0;   // N * (1 - mmse_gauss)
    double cmmse_limit = 0.0;        // (1/4 + d2) q
    double mmse_limit = 0.0;         // (1/2 + 2 d2) q
    double rel_gap_cmmse = 0.0;
    double rel_gap_mmse = 0.0;
};

struct RunConfig {
    std::vector<double> qs{100.0};
    int n_min = 1;
    int n_max = 40;
    QuadratureSpec quad{};
    std::int64_t paths = 20000;
    int dt_steps = 8192;  // dt = T / dt_steps with the standard horizon T = 1
    int theta_grid = 512;
    std::uint64_t seed = 42;
    std::string out;
    std::string svg;
    double inject_divergence_bias = 0.0;  // negative-control fixture

    void validate() const;
    MonteCarloSpec monte_carlo(double horizon = 1.0) const;
};

// Loads a JSON config file; unknown keys are rejected.  Missing file throws.
RunConfig load_config(const std::string& path);

// One row per N over [n_min, n_max] at each q, equal allocations.  Rows are
// computed in parallel and emitted in (q, N) order.
std::vector<SweepRow> run_divergence_sweep(const RunConfig& config);
std::vector<SweepRow> run_error_sweep(const RunConfig& config);

// N = 2, 4, ..., 2^10 by default at the config's q values.
std::vector<AsymptoticsRow> run_asymptotics(const RunConfig& config,
                                            const AsymptoticCoefficients& coeffs);

// Every N whose D_N lies within 1e-9 of the maximum, ascending.
std::vector<int> divergence_argmax(const std::vector<SweepRow>& rows);

// %.17g rendering so values round-trip exactly through parse.
std::string format_value(double v);
std::string to_csv(const std::vector<SweepRow>& rows, bool divergence_only);
std::string to_csv(const std::vector<AsymptoticsRow>& rows);

// Per-row Eq-gap identity: cmmse_gauss - cmmse_tone == (2/q) d_n within
// err_bound (plus rounding slack).  Returns the first offending row index,
// or -1 when all rows pass.
int find_identity_violation(const std::vector<SweepRow>& rows);

void write_file(const std::string& path, const std::string& content);

}  // namespace nbmmse
