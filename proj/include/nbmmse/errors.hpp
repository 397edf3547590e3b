// Closed-form causal and non-causal estimation errors and their bridges.
#pragma once

#include "nbmmse/allocation.hpp"
#include "nbmmse/divergence.hpp"
#include "nbmmse/quadrature.hpp"

namespace nbmmse {

// A value with a propagated deterministic error bound.
struct ErrorComponent {
    double value = 0.0;
    double error_bound = 0.0;
};

struct ErrorPair {
    double cmmse = 0.0;
    double mmse = 0.0;
    double divergence_error_bound = 0.0;
};

struct BridgeResiduals {
    double derivative_residual = 0.0;  // |d/dq[q CMMSE(q)] - MMSE(q)|
    double integral_residual = 0.0;    // |CMMSE(q) - (1/q) int_0^q MMSE|
};

// Causal error of the Gaussian comparison signal: (2/q) sum ln(1 + a_i^2 q/2),
// with the q -> 0 limit 1.
double cmmse_gaussian(const SpectrumAllocation& alloc, ChannelSnr snr);

// Non-causal error of the Gaussian comparison signal: sum a_i^2/(1 + a_i^2 q/2).
double mmse_gaussian(const SpectrumAllocation& alloc, ChannelSnr snr);

// Causal error of the tone sum: cmmse_gaussian - (2/q) D_N, with the
// propagated quadrature bound.
ErrorComponent cmmse_tone_sum(const SpectrumAllocation& alloc, ChannelSnr snr,
                              const QuadratureSpec& spec = {});

// Non-causal error of the tone sum: mmse_gaussian - 2 sum a_i^2 D'(a_i^2 q).
ErrorComponent mmse_tone_sum(const SpectrumAllocation& alloc, ChannelSnr snr,
                             const QuadratureSpec& spec = {});

ErrorPair tone_error_pair(const SpectrumAllocation& alloc, ChannelSnr snr,
                          const QuadratureSpec& spec = {});

// Large-N expansion: cmmse ~ 1 - (1/4 + d2) q/n, mmse ~ 1 - (1/2 + 2 d2) q/n,
// clamped to [0, 1].
ErrorPair asymptotic_errors(ChannelSnr snr, int n, const AsymptoticCoefficients& coeffs);

// Both consistency residuals between the causal and non-causal closed forms;
// check_bridge returns their maximum.
BridgeResiduals bridge_residuals(const SpectrumAllocation& alloc, ChannelSnr snr,
                                 const QuadratureSpec& spec = {});
double check_bridge(const SpectrumAllocation& alloc, ChannelSnr snr,
                    const QuadratureSpec& spec = {});

}  // namespace nbmmse
