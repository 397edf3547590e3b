#include "nbmmse/divergence.hpp"

#include <array>
#include <cmath>
#include <map>

#include "nbmmse/specfun.hpp"

namespace nbmmse {

namespace {

// exp() of anything below this underflows to 0; such integrand points
// contribute nothing and are short-circuited before any -inf arithmetic.
constexpr double kLogFloor = -745.0;

// ln of an upper bound on int_R^inf P(r) exp(-(r - sqrt(q))^2/2) dr for a
// polynomial envelope P(r) = sum_k p[k] r^k with p[k] >= 0.  Requires
// R >= truncation_radius(q), which guarantees U = R - sqrt(q) >= 24 and
// r <= 1.1179 u on the tail (sqrt(q) <= U * sqrt(2)/12 by construction).
double gaussian_tail_log_bound(double q, double R, std::span<const double> p)
{
    const double U = R - std::sqrt(q);
    const double u2 = U * U;
    // bounds for int_U^inf u^k exp(-u^2/2) du, divided by exp(-U^2/2)
    const double m[6] = {
        1.0 / U,
        1.0,
        U + 1.0 / U,
        u2 + 2.0,
        u2 * U + 3.0 * U + 3.0 / U,
        u2 * u2 + 4.0 * u2 + 8.0,
    };
    double s = 1e-300;
    double lift = 1.0;
    for (std::size_t k = 0; k < p.size() && k < 6; ++k) {
        s += p[k] * lift * m[k];
        lift *= 1.1179;
    }
    return -0.5 * u2 + std::log(s);
}

// |ln f - ln g| <= c[0] + c[1] r + c[2] r^2 for r >= truncation_radius(q).
// The scaled-Bessel log term is bounded by r there (it grows like ln r).
std::array<double, 3> log_ratio_envelope(double q)
{
    return {0.5 * q + std::log1p(0.5 * q), std::sqrt(q) + 1.0, 0.5 + 1.0 / (2.0 + q)};
}

double divergence_tail_log_bound(double q, double R)
{
    const auto c = log_ratio_envelope(q);
    const double p[4] = {0.0, c[0], c[1], c[2]};  // extra r from f itself
    return gaussian_tail_log_bound(q, R, p);
}

double derivative_tail_log_bound(double q, double R)
{
    const auto c = log_ratio_envelope(q);
    // |d ln f / dq| <= 1/2 + b r^d with the tighter exponent per regime.
    const int d = q >= 1.0 ? 1 : 2;
    const double b = q >= 1.0 ? 0.5 / std::sqrt(q) : 0.25;
    std::array<double, 5> poly{};  // coefficients in r before the f factor
    for (int i = 0; i < 3; ++i) {
        poly[i] += 0.5 * c[i];
        poly[i + d] += b * c[i];
    }
    poly[0] += 1.0 / (2.0 + q);
    poly[2] += 0.25;
    double p[6] = {0.0};
    for (int i = 0; i < 5; ++i) p[i + 1] = poly[i];
    return gaussian_tail_log_bound(q, R, p);
}

// Widen R by 1.5x until the tail bound certifies below tail_mass_bound.
template <typename BoundFn>
std::pair<double, double> certify_radius(double q, double tail_mass_bound, BoundFn&& bound)
{
    double R = truncation_radius(q);
    const double target = std::log(tail_mass_bound);
    for (int attempt = 0; attempt < 60; ++attempt) {
        const double lt = bound(q, R);
        if (lt <= target) return {R, lt};
        R *= 1.5;
    }
    throw EstimationError("divergence: tail bound failed to certify");
}

void check_q(double q, const char* who)
{
    if (!std::isfinite(q) || q < 0.0)
        throw std::domain_error(std::string(who) + ": q must be finite and >= 0");
}

}  // namespace

double truncation_radius(double q)
{
    check_q(q, "truncation_radius");
    return std::sqrt(q) + 12.0 + 12.0 * std::sqrt(1.0 + 0.5 * q);
}

double envelope_tail_log_bound(double q, double R, int extra_power)
{
    if (extra_power < 0 || extra_power > 2)
        throw std::invalid_argument("envelope_tail_log_bound: extra_power must be 0, 1 or 2");
    double p[4] = {0.0};
    p[1 + extra_power] = 1.0;
    return gaussian_tail_log_bound(q, R, std::span<const double>(p, 2 + extra_power));
}

std::vector<double> envelope_breakpoints(double q, double R)
{
    check_q(q, "envelope_breakpoints");
    if (!(q > 0.0) || !(R > std::sqrt(q)))
        throw std::domain_error("envelope_breakpoints: need q > 0 and R > sqrt(q)");
    const double sq = std::sqrt(q);
    std::vector<double> pts{0.0};
    for (double r : {sq - 10.0, sq, sq + 10.0})
        if (r > pts.back() && r < R) pts.push_back(r);
    pts.push_back(R);
    return pts;
}

double divergence_small_q_series(double q)
{
    const double q2 = q * q;
    return q2 * q2 * (1.0 / 128.0 + q * (-1.0 / 64.0 + q * (121.0 / 4608.0)));
}

DivergenceResult divergence_single(double q, const QuadratureSpec& spec)
{
    check_q(q, "divergence_single");
    spec.validate();
    if (q == 0.0) return {0.0, 0.0, truncation_radius(0.0)};
    if (q < kSmallQSeriesThreshold) {
        // Next term is -(73/1536) q^7; 0.1 q^7 dominates the full remainder.
        return {divergence_small_q_series(q), 0.1 * std::pow(q, 7), truncation_radius(q)};
    }

    const auto [R, log_tail] = certify_radius(q, spec.tail_mass_bound, divergence_tail_log_bound);
    const specfun::EnvelopeDensityParams p(q);
    auto integrand = [&p](double r) {
        const double lf = specfun::rician_log_pdf(r, p);
        if (lf < kLogFloor) return 0.0;
        return std::exp(lf) * (lf - specfun::rayleigh_log_pdf(r, p));
    };
    const auto pts = envelope_breakpoints(q, R);
    const auto out = integrate_adaptive(integrand, pts, spec);
    return {out.value, out.error_estimate + std::exp(log_tail), R};
}

DivergenceResult divergence_derivative(double q, const QuadratureSpec& spec)
{
    check_q(q, "divergence_derivative");
    spec.validate();
    if (q == 0.0) return {0.0, 0.0, truncation_radius(0.0)};

    const auto [R, log_tail] = certify_radius(q, spec.tail_mass_bound, derivative_tail_log_bound);
    const specfun::EnvelopeDensityParams p(q);
    const double sq = std::sqrt(q);
    const double s = 1.0 + 0.5 * q;
    auto integrand = [&p, q, sq, s](double r) {
        const double lf = specfun::rician_log_pdf(r, p);
        if (lf < kLogFloor) return 0.0;
        const double lg = specfun::rayleigh_log_pdf(r, p);
        const double x = r * sq;
        // d ln f / dq = -1/2 + (r / (2 sqrt q)) I1/I0(r sqrt q); the ratio's
        // linear zero makes the product r^2/4 in the x -> 0 limit.
        const double dlnf = x < 1e-6 ? -0.5 + 0.25 * r * r
                                     : -0.5 + 0.5 * (r / sq) * specfun::bessel_ratio_i1_i0(x);
        const double dlng = -1.0 / (2.0 + q) + r * r / (4.0 * s * s);
        return std::exp(lf) * (dlnf * (lf - lg) - dlng);
    };
    const auto pts = envelope_breakpoints(q, R);
    const auto out = integrate_adaptive(integrand, pts, spec);
    return {out.value, out.error_estimate + std::exp(log_tail), R};
}

DivergenceResult divergence_sum(const SpectrumAllocation& alloc, double q,
                                const QuadratureSpec& spec)
{
    check_q(q, "divergence_sum");
    std::map<double, DivergenceResult> cache;
    DivergenceResult total{0.0, 0.0, 0.0};
    for (double alpha : alloc.alphas) {
        const double gamma = alpha * alpha * q;
        auto it = cache.find(gamma);
        if (it == cache.end()) it = cache.emplace(gamma, divergence_single(gamma, spec)).first;
        total.value += it->second.value;
        total.error_estimate += it->second.error_estimate;
        total.truncation_radius = std::max(total.truncation_radius, it->second.truncation_radius);
    }
    return total;
}

std::vector<double> default_d2_grid()
{
    std::vector<double> grid(8);
    double v = 0.4;
    for (auto& g : grid) {
        g = v;
        v *= 0.5;
    }
    return grid;
}

AsymptoticCoefficients estimate_d2_from_values(std::span<const double> q_grid,
                                               std::span<const double> d_values)
{
    const std::size_t n = q_grid.size();
    if (n < 3 || d_values.size() != n)
        throw std::invalid_argument("estimate_d2_from_values: need >= 3 matching grid points");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(std::isfinite(q_grid[i]) && q_grid[i] > 0.0) || !std::isfinite(d_values[i]))
            throw std::invalid_argument("estimate_d2_from_values: non-finite input");
        if (i > 0 && !(q_grid[i] < q_grid[i - 1]))
            throw std::invalid_argument("estimate_d2_from_values: grid must decrease strictly");
    }

    const std::size_t terms = std::min<std::size_t>(4, n);
    std::vector<long double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<long double>(d_values[i]) / (static_cast<long double>(q_grid[i]) * q_grid[i]);
        x[i] = static_cast<long double>(q_grid[i]) / q_grid[0];  // scale to (0, 1]
    }

    // Normal equations for the least-squares polynomial fit of y against x.
    long double a[4][5] = {};
    for (std::size_t i = 0; i < n; ++i) {
        long double xp[4] = {1.0L, 0.0L, 0.0L, 0.0L};
        for (std::size_t k = 1; k < terms; ++k) xp[k] = xp[k - 1] * x[i];
        for (std::size_t r = 0; r < terms; ++r) {
            for (std::size_t c = 0; c < terms; ++c) a[r][c] += xp[r] * xp[c];
            a[r][terms] += xp[r] * y[i];
        }
    }
    for (std::size_t col = 0; col < terms; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < terms; ++r)
            if (std::abs((double)a[r][col]) > std::abs((double)a[piv][col])) piv = r;
        if (a[piv][col] == 0.0L) throw EstimationError("estimate_d2: singular fit system");
        std::swap(a[piv], a[col]);
        for (std::size_t r = 0; r < terms; ++r) {
            if (r == col) continue;
            const long double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= terms; ++c) a[r][c] -= factor * a[col][c];
        }
    }
    long double coef[4] = {};
    for (std::size_t r = 0; r < terms; ++r) coef[r] = a[r][terms] / a[r][r];

    long double ss = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        long double fit = 0.0L, xp = 1.0L;
        for (std::size_t k = 0; k < terms; ++k) {
            fit += coef[k] * xp;
            xp *= x[i];
        }
        const long double resid = y[i] - fit;
        ss += resid * resid;
    }
    const double rms = std::sqrt(static_cast<double>(ss / n));
    const double intercept = static_cast<double>(coef[0]);

    // The deviations |y_i - intercept| must settle as q -> 0, otherwise the
    // extrapolation is not trustworthy.
    const double slack = 10.0 * rms + 1e-12 * (1.0 + std::abs(intercept));
    for (std::size_t i = n - 2; i < n; ++i) {
        const double prev = std::abs(static_cast<double>(y[i - 1]) - intercept);
        const double cur = std::abs(static_cast<double>(y[i]) - intercept);
        if (cur > prev + slack)
            throw EstimationError("estimate_d2: unstable extrapolation toward q = 0");
    }

    AsymptoticCoefficients out;
    out.d2_at_zero = 2.0 * intercept;
    out.fit_residual = rms;
    out.q_grid.assign(q_grid.begin(), q_grid.end());
    return out;
}

AsymptoticCoefficients estimate_d2_at_zero(const QuadratureSpec& spec,
                                           std::span<const double> q_grid)
{
    std::vector<double> grid;
    if (q_grid.empty()) {
        grid = default_d2_grid();
        q_grid = grid;
    }
    spec.validate();
    const double q_min = q_grid.back();
    if (q_min < 1e-4 && spec.abs_tol > 1e-16)
        throw std::invalid_argument(
            "estimate_d2_at_zero: grids reaching below 1e-4 require abs_tol <= 1e-16");

    std::vector<double> d(q_grid.size());
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        const double q = q_grid[i];
        QuadratureSpec point = spec;
        // D is divided by q^2 in the fit, so the absolute tolerance must
        // shrink with the grid to keep the fitted values equally accurate.
        point.abs_tol = std::min(spec.abs_tol, std::max(1e-8 * q * q, 5e-15));
        point.tail_mass_bound = std::min(spec.tail_mass_bound, point.abs_tol / 10.0);
        d[i] = divergence_single(q, point).value;
    }
    return estimate_d2_from_values(q_grid, d);
}

}  // namespace nbmmse
