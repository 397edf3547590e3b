#include "nbmmse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nbmmse {

namespace {

// Bridge residuals difference closed forms that each carry quadrature noise,
// so their inner evaluations run at a tightened tolerance regardless of the
// caller's sweep settings.
QuadratureSpec tightened(const QuadratureSpec& spec, double abs_tol)
{
    QuadratureSpec t = spec;
    t.abs_tol = std::min(spec.abs_tol, abs_tol);
    t.rel_tol = std::min(spec.rel_tol, 1e-12);
    t.tail_mass_bound = std::min(spec.tail_mass_bound, t.abs_tol / 10.0);
    t.max_subdivisions = std::max(spec.max_subdivisions, 4000);
    return t;
}

}  // namespace

double cmmse_gaussian(const SpectrumAllocation& alloc, ChannelSnr snr)
{
    const double q = snr.q;
    if (q == 0.0) return 1.0;
    double sum = 0.0;
    for (double alpha : alloc.alphas) sum += std::log1p(0.5 * alpha * alpha * q);
    return 2.0 / q * sum;
}

double mmse_gaussian(const SpectrumAllocation& alloc, ChannelSnr snr)
{
    const double q = snr.q;
    if (q == 0.0) return 1.0;
    double sum = 0.0;
    for (double alpha : alloc.alphas) {
        const double a2 = alpha * alpha;
        sum += a2 / (1.0 + 0.5 * a2 * q);
    }
    return sum;
}

ErrorComponent cmmse_tone_sum(const SpectrumAllocation& alloc, ChannelSnr snr,
                              const QuadratureSpec& spec)
{
    const double q = snr.q;
    if (q == 0.0) return {1.0, 0.0};
    const DivergenceResult dn = divergence_sum(alloc, q, spec);
    return {cmmse_gaussian(alloc, snr) - 2.0 / q * dn.value, 2.0 / q * dn.error_estimate};
}

ErrorComponent mmse_tone_sum(const SpectrumAllocation& alloc, ChannelSnr snr,
                             const QuadratureSpec& spec)
{
    const double q = snr.q;
    if (q == 0.0) return {1.0, 0.0};
    std::map<double, DivergenceResult> cache;
    double correction = 0.0, bound = 0.0;
    for (double alpha : alloc.alphas) {
        const double a2 = alpha * alpha;
        const double gamma = a2 * q;
        auto it = cache.find(gamma);
        if (it == cache.end())
            it = cache.emplace(gamma, divergence_derivative(gamma, spec)).first;
        correction += a2 * it->second.value;
        bound += a2 * it->second.error_estimate;
    }
    return {mmse_gaussian(alloc, snr) - 2.0 * correction, 2.0 * bound};
}

ErrorPair tone_error_pair(const SpectrumAllocation& alloc, ChannelSnr snr,
                          const QuadratureSpec& spec)
{
    const ErrorComponent c = cmmse_tone_sum(alloc, snr, spec);
    const ErrorComponent m = mmse_tone_sum(alloc, snr, spec);
    return {c.value, m.value, c.error_bound + m.error_bound};
}

ErrorPair asymptotic_errors(ChannelSnr snr, int n, const AsymptoticCoefficients& coeffs)
{
    if (n < 1) throw std::invalid_argument("asymptotic_errors: n must be >= 1");
    const double ratio = snr.q / n;
    const double cmmse = std::clamp(1.0 - (0.25 + coeffs.d2_at_zero) * ratio, 0.0, 1.0);
    const double mmse = std::clamp(1.0 - (0.5 + 2.0 * coeffs.d2_at_zero) * ratio, 0.0, 1.0);
    return {cmmse, mmse, 0.0};
}

BridgeResiduals bridge_residuals(const SpectrumAllocation& alloc, ChannelSnr snr,
                                 const QuadratureSpec& spec)
{
    const double q = snr.q;
    if (!(q > 0.0)) throw std::domain_error("bridge_residuals: q must be > 0");
    const QuadratureSpec inner = tightened(spec, 1e-13);

    auto qc = [&](double x) {
        return x * cmmse_tone_sum(alloc, ChannelSnr(x), inner).value;
    };
    const double mmse = mmse_tone_sum(alloc, snr, inner).value;

    // One Richardson level over the central difference of q * CMMSE(q).
    const double h = std::max(1e-4, 1e-4 * q);
    const double d_h = (qc(q + h) - qc(q - h)) / (2.0 * h);
    const double d_h2 = (qc(q + 0.5 * h) - qc(q - 0.5 * h)) / h;
    const double derivative = (4.0 * d_h2 - d_h) / 3.0;
    BridgeResiduals out;
    out.derivative_residual = std::abs(derivative - mmse);

    QuadratureSpec outer = inner;
    outer.abs_tol = std::max(1e-13, 1e-9 * q);
    outer.rel_tol = 1e-10;
    outer.tail_mass_bound = std::min(inner.tail_mass_bound, outer.abs_tol / 10.0);
    const auto integral = integrate_adaptive(
        [&](double s) { return mmse_tone_sum(alloc, ChannelSnr(s), inner).value; }, 0.0, q,
        outer);
    const double cmmse = cmmse_tone_sum(alloc, snr, inner).value;
    out.integral_residual = std::abs(cmmse - integral.value / q);
    return out;
}

double check_bridge(const SpectrumAllocation& alloc, ChannelSnr snr, const QuadratureSpec& spec)
{
    const BridgeResiduals r = bridge_residuals(alloc, snr, spec);
    return std::max(r.derivative_residual, r.integral_residual);
}

}  // namespace nbmmse
