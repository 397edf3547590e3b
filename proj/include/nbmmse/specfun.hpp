// Scaled modified Bessel functions and the envelope log-densities.
#pragma once

namespace nbmmse::specfun {

// Parameters of the matched envelope density pair at signal-to-noise ratio q.
// Throws std::domain_error unless q is finite and >= 0.
struct EnvelopeDensityParams {
    double q;
    explicit EnvelopeDensityParams(double q_in);
};

// exp(-|x|) * I0(x) for x >= 0.  Relative error <= 1e-12 over the full range;
// never overflows.
double bessel_i0_scaled(double x);

// exp(-|x|) * I1(x) for x >= 0.
double bessel_i1_scaled(double x);

// I1(x) / I0(x).  Monotone increasing from 0 toward 1; ratio(0) == 0.
double bessel_ratio_i1_i0(double x);

// Log-density of the envelope of a unit tone in complex Gaussian noise:
// ln f(r) = ln r - (r^2 + q)/2 + ln I0(r sqrt(q)).
// Evaluated in scaled form so r*sqrt(q) up to ~1e8 stays finite.
// r == 0 gives -inf.  Negative or non-finite r throws std::domain_error.
double rician_log_pdf(double r, const EnvelopeDensityParams& p);

// Log-density of the variance-matched Rayleigh envelope:
// ln g(r) = ln(r / (1 + q/2)) - r^2 / (2 + q).
double rayleigh_log_pdf(double r, const EnvelopeDensityParams& p);

}  // namespace nbmmse::specfun
