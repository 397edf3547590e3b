// Relative entropy between the matched envelope densities and its q-derivative.
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbmmse/allocation.hpp"
#include "nbmmse/quadrature.hpp"

namespace nbmmse {

struct DivergenceResult {
    double value = 0.0;
    double error_estimate = 0.0;
    double truncation_radius = 0.0;
};

struct AsymptoticCoefficients {
    double d2_at_zero = 0.0;   // second derivative of D at q=0
    double fit_residual = 0.0; // RMS residual of the extrapolation fit
    std::vector<double> q_grid;
};

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Radius beyond which the envelope integrands are certified negligible:
// sqrt(q) + 12 + 12*sqrt(1 + q/2) (twelve matched-deviation widths past the
// density's crest).
double truncation_radius(double q);

// Upper bound on ln of the discarded mass of r^extra_power * f(r) beyond R,
// valid for R >= truncation_radius(q).  extra_power in {0, 1, 2}.
double envelope_tail_log_bound(double q, double R, int extra_power);

// Initial panel seeds for integrals against the envelope density on [0, R].
// The density crests at sqrt(q) with O(1) width; at large q a single panel
// spanning [sqrt(q), R] places its first interior node many widths past the
// crest and the adaptive pass never sees the mass.  Bracketing the crest by
// +/-10 keeps it inside narrow panels at every q.  Strictly increasing;
// requires q > 0 and R >= truncation_radius(q).
std::vector<double> envelope_breakpoints(double q, double R);

// Below this q the divergence is evaluated from its series at the origin:
// D(q) = q^4/128 - q^5/64 + (121/4608) q^6 + O(q^7), whose leading terms sit
// below any attainable quadrature tolerance.
inline constexpr double kSmallQSeriesThreshold = 1e-3;
double divergence_small_q_series(double q);

// D(q): divergence between the unit-tone envelope density and the
// variance-matched Rayleigh density.  D(0) == 0 by a dedicated branch.
DivergenceResult divergence_single(double q, const QuadratureSpec& spec = {});

// dD/dq via differentiation under the integral sign; q == 0 returns 0
// (the series gives D'(q) = q^3/32 + O(q^4)).
DivergenceResult divergence_derivative(double q, const QuadratureSpec& spec = {});

// D_N = sum_i D(alpha_i^2 q); identical component arguments are evaluated
// once, and the summation order is fixed (ascending wave index) so results
// are bit-identical regardless of parallelism.
DivergenceResult divergence_sum(const SpectrumAllocation& alloc, double q,
                                const QuadratureSpec& spec = {});

// Descending geometric grid 0.4 * 0.5^k, k = 0..7.
std::vector<double> default_d2_grid();

// Least-squares fit of D(q)/q^2 by a low-order polynomial in q over a
// descending grid; d2_at_zero = 2 * intercept.  Exposed separately so the
// fit can be exercised on synthetic models.
AsymptoticCoefficients estimate_d2_from_values(std::span<const double> q_grid,
                                               std::span<const double> d_values);

AsymptoticCoefficients estimate_d2_at_zero(const QuadratureSpec& spec = {},
                                           std::span<const double> q_grid = {});

}  // namespace nbmmse
