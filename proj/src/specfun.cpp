#include "nbmmse/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nbmmse::specfun {

namespace {

#include "specfun_chebyshev.inc"

// Truncation counts for double precision (SLATEC initds at eps/10).
constexpr int kNtAi0 = 23;
constexpr int kNtAi02 = 25;
constexpr int kNtAi1 = 23;
constexpr int kNtAi12 = 25;

// Clenshaw evaluation of a Chebyshev series on [-1, 1].
double chebyshev_series(double x, const double* cs, int n)
{
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    const double twox = 2.0 * x;
    for (int i = n - 1; i >= 0; --i) {
        b2 = b1;
        b1 = b0;
        b0 = twox * b1 - b2 + cs[i];
    }
    return 0.5 * (b0 - b2);
}

// Power series for I0 (all terms positive, no cancellation).
double i0_series(double x)
{
    const double y = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= y / (static_cast<double>(k) * k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

// Power series for I1 / (x/2).
double i1_series_over_halfx(double x)
{
    const double y = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= y / (static_cast<double>(k) * (k + 1));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

void check_argument(double x)
{
    if (!std::isfinite(x) || x < 0.0)
        throw std::domain_error("bessel argument must be finite and >= 0");
}

}  // namespace

double bessel_i0_scaled(double x)
{
    check_argument(x);
    if (x <= 7.75) return std::exp(-x) * i0_series(x);
    if (x <= 8.0)
        return (0.375 + chebyshev_series((48.0 / x - 11.0) / 5.0, ai0cs, kNtAi0)) / std::sqrt(x);
    return (0.375 + chebyshev_series(16.0 / x - 1.0, ai02cs, kNtAi02)) / std::sqrt(x);
}

double bessel_i1_scaled(double x)
{
    check_argument(x);
    if (x <= 7.75) return std::exp(-x) * 0.5 * x * i1_series_over_halfx(x);
    if (x <= 8.0)
        return (0.375 + chebyshev_series((48.0 / x - 11.0) / 5.0, ai1cs, kNtAi1)) / std::sqrt(x);
    return (0.375 + chebyshev_series(16.0 / x - 1.0, ai12cs, kNtAi12)) / std::sqrt(x);
}

double bessel_ratio_i1_i0(double x)
{
    check_argument(x);
    if (x == 0.0) return 0.0;
    if (x <= 7.75) return 0.5 * x * i1_series_over_halfx(x) / i0_series(x);
    return bessel_i1_scaled(x) / bessel_i0_scaled(x);
}

EnvelopeDensityParams::EnvelopeDensityParams(double q_in) : q(q_in)
{
    if (!std::isfinite(q) || q < 0.0)
        throw std::domain_error("EnvelopeDensityParams: q must be finite and >= 0");
}

double rician_log_pdf(double r, const EnvelopeDensityParams& p)
{
    if (!std::isfinite(r) || r < 0.0)
        throw std::domain_error("rician_log_pdf: r must be finite and >= 0");
    if (r == 0.0) return -std::numeric_limits<double>::infinity();
    const double x = r * std::sqrt(p.q);
    // ln I0(x) = x + ln(exp(-x) I0(x)); the scaled form keeps x ~ 1e8 finite.
    return std::log(r) - 0.5 * (r * r + p.q) + x + std::log(bessel_i0_scaled(x));
}

double rayleigh_log_pdf(double r, const EnvelopeDensityParams& p)
{
    if (!std::isfinite(r) || r < 0.0)
        throw std::domain_error("rayleigh_log_pdf: r must be finite and >= 0");
    if (r == 0.0) return -std::numeric_limits<double>::infinity();
    const double s = 1.0 + 0.5 * p.q;
    return std::log(r / s) - r * r / (2.0 * s);
}

}  // namespace nbmmse::specfun
