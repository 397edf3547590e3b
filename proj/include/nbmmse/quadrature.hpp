// Adaptive Gauss-Kronrod 7/15 quadrature with interval bisection.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbmmse {

struct QuadratureSpec {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    int max_subdivisions = 4000;
    double tail_mass_bound = 1e-12;  // must stay <= abs_tol / 10

    void validate() const;
};

struct QuadratureOutcome {
    double value = 0.0;
    double error_estimate = 0.0;
    int subdivisions = 0;
};

// Thrown when the requested tolerance cannot be certified; carries the best
// estimate reached so the caller can still report diagnostics.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, QuadratureOutcome best_so_far)
        : std::runtime_error(what), best(best_so_far) {}
    QuadratureOutcome best;
};

namespace detail {

// 15-point Kronrod abscissae/weights and the embedded 7-point Gauss weights.
inline constexpr double kXgk15[8] = {
    0.991455371120812639207, 0.949107912342758524526,
    0.864864423359769072789, 0.741531185599394439864,
    0.586087235467691130295, 0.405845151377397166907,
    0.207784955007898467601, 0.0,
};
inline constexpr double kWgk15[8] = {
    0.022935322010529224964, 0.063092092629978553291,
    0.104790010322250183840, 0.140653259715525918745,
    0.169004726639267902827, 0.190350578064785409913,
    0.204432940075298892414, 0.209482141084727828013,
};
inline constexpr double kWg7[4] = {
    0.129484966168869693271, 0.279705391489276667901,
    0.381830050505118944950, 0.417959183673469387755,
};

struct Gk15Result {
    double value;
    double error;
    double resabs;
};

// One Gauss-Kronrod 7/15 panel with the standard a-posteriori error model:
// the |K15-G7| difference is rescaled by the panel's deviation integral so the
// estimate stays meaningful on nearly-linear stretches.
template <typename F>
Gk15Result gk15_panel(F&& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    const double fc = f(c);
    double resg = fc * kWg7[3];
    double resk = fc * kWgk15[7];
    double resabs = std::abs(fc) * kWgk15[7];
    double fval1[7], fval2[7];
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kXgk15[i];
        fval1[i] = f(c - dx);
        fval2[i] = f(c + dx);
        const double s = fval1[i] + fval2[i];
        resk += kWgk15[i] * s;
        resabs += kWgk15[i] * (std::abs(fval1[i]) + std::abs(fval2[i]));
        if (i % 2 == 1) resg += kWg7[i / 2] * s;
    }

    const double mean = 0.5 * resk;
    double resasc = kWgk15[7] * std::abs(fc - mean);
    for (int i = 0; i < 7; ++i)
        resasc += kWgk15[i] * (std::abs(fval1[i] - mean) + std::abs(fval2[i] - mean));
    resasc *= h;
    resabs *= h;

    double err = std::abs((resk - resg) * h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps50 = 50.0 * std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / eps50)
        err = std::max(eps50 * resabs, err);

    return {resk * h, err, resabs};
}

struct AdaptiveInterval {
    double a, b, value, error;
};

inline bool interval_error_less(const AdaptiveInterval& l, const AdaptiveInterval& r)
{
    return l.error < r.error;
}

}  // namespace detail

// Integrates f over [breakpoints.front(), breakpoints.back()], seeding one
// panel per consecutive breakpoint pair, then repeatedly bisecting the panel
// with the largest error estimate until the summed estimate meets
// max(abs_tol, rel_tol*|integral|) or max_subdivisions bisections occurred.
template <typename F>
QuadratureOutcome integrate_adaptive(F&& f, std::span<const double> breakpoints,
                                     const QuadratureSpec& spec)
{
    spec.validate();
    if (breakpoints.size() < 2)
        throw std::invalid_argument("integrate_adaptive: need at least two breakpoints");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw std::invalid_argument("integrate_adaptive: breakpoints must increase strictly");

    std::vector<detail::AdaptiveInterval> heap;
    heap.reserve(64);
    double total_value = 0.0, total_error = 0.0;
    auto push = [&heap](detail::AdaptiveInterval iv) {
        heap.push_back(iv);
        std::push_heap(heap.begin(), heap.end(), detail::interval_error_less);
    };

    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double a = breakpoints[i], b = breakpoints[i + 1];
        const auto r = detail::gk15_panel(f, a, b);
        if (!std::isfinite(r.value))
            throw QuadratureError("integrate_adaptive: non-finite integrand",
                                  {r.value, r.error, 0});
        push({a, b, r.value, r.error});
        total_value += r.value;
        total_error += r.error;
    }

    int subdivisions = 0;
    while (total_error > std::max(spec.abs_tol, spec.rel_tol * std::abs(total_value))) {
        if (subdivisions >= spec.max_subdivisions) {
            QuadratureOutcome best{total_value, total_error, subdivisions};
            throw QuadratureError(
                "integrate_adaptive: tolerance not reached after " +
                    std::to_string(subdivisions) + " subdivisions (error estimate " +
                    std::to_string(total_error) + ")",
                best);
        }
        std::pop_heap(heap.begin(), heap.end(), detail::interval_error_less);
        const detail::AdaptiveInterval worst = heap.back();
        heap.pop_back();

        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gk15_panel(f, worst.a, mid);
        const auto right = detail::gk15_panel(f, mid, worst.b);
        if (!std::isfinite(left.value) || !std::isfinite(right.value))
            throw QuadratureError("integrate_adaptive: non-finite integrand",
                                  {total_value, total_error, subdivisions});
        push({worst.a, mid, left.value, left.error});
        push({mid, worst.b, right.value, right.error});
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        ++subdivisions;
    }

    // Recompute the totals from the surviving panels so incremental drift
    // cannot leak into the reported value.
    total_value = 0.0;
    total_error = 0.0;
    for (const auto& iv : heap) {
        total_value += iv.value;
        total_error += iv.error;
    }
    return {total_value, total_error, subdivisions};
}

template <typename F>
QuadratureOutcome integrate_adaptive(F&& f, double a, double b, const QuadratureSpec& spec)
{
    const double pts[2] = {a, b};
    return integrate_adaptive(std::forward<F>(f), std::span<const double>(pts, 2), spec);
}

}  // namespace nbmmse
