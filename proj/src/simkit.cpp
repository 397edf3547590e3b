#include "nbmmse/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nbmmse/divergence.hpp"
#include "nbmmse/parallel.hpp"
#include "nbmmse/rng.hpp"
#include "nbmmse/specfun.hpp"

namespace nbmmse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Distinct stream tags so the sampler families never share random bits.
constexpr std::uint64_t kToneTag = 0x746f6e6570617468ULL;
constexpr std::uint64_t kGaussTag = 0x67617573737061ULL;
constexpr std::uint64_t kObsTag = 0x6f62736572766570ULL;
constexpr std::uint64_t kOracleTag = 0x6f7261636c65ULL;
constexpr std::uint64_t kCausalTag = 0x63617573616cULL;
constexpr std::uint64_t kKsTag = 0x6b73ULL;

struct WelfordSums {
    double sum = 0.0;
    double sumsq = 0.0;
    std::int64_t n = 0;

    void add(double x)
    {
        sum += x;
        sumsq += x * x;
        ++n;
    }
    MonteCarloEstimate finish() const
    {
        const double mean = sum / n;
        double var = 0.0;
        if (n > 1) var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1));
        return {mean, std::sqrt(var / n)};
    }
};

// Mean/SE over a precomputed vector in index order (deterministic reduction).
MonteCarloEstimate reduce_indexed(const std::vector<double>& xs)
{
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double n = static_cast<double>(xs.size());
    return {mean, xs.size() > 1 ? std::sqrt(ss / (n * (n - 1))) : 0.0};
}

double certified_envelope_radius(double gamma, double tail_mass_bound)
{
    double R = truncation_radius(gamma);
    const double target = std::log(tail_mass_bound);
    for (int i = 0; i < 60; ++i) {
        if (envelope_tail_log_bound(gamma, R, 0) <= target) return R;
        R *= 1.5;
    }
    throw EstimationError("envelope radius failed to certify");
}

}  // namespace

ToneGrid::ToneGrid(double T, std::vector<int> indices)
    : horizon(T), wave_indices(std::move(indices))
{
    if (!(std::isfinite(horizon) && horizon > 0.0))
        throw std::invalid_argument("ToneGrid: horizon must be positive");
    if (wave_indices.empty())
        throw std::invalid_argument("ToneGrid: needs at least one wave index");
    int prev = 0;
    for (int k : wave_indices) {
        if (k < 1 || k <= prev)
            throw std::invalid_argument(
                "ToneGrid: wave indices must be strictly increasing and >= 1");
        prev = k;
    }
}

ToneGrid ToneGrid::standard(int n, double T)
{
    if (n < 1) throw std::invalid_argument("ToneGrid::standard: n must be >= 1");
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i + 1;
    return ToneGrid(T, std::move(idx));
}

void MonteCarloSpec::validate(double horizon) const
{
    if (paths < 1) throw std::invalid_argument("MonteCarloSpec: paths must be >= 1");
    if (theta_grid_size < 16)
        throw std::invalid_argument("MonteCarloSpec: theta_grid_size must be >= 16");
    if (!(std::isfinite(dt) && dt > 0.0))
        throw std::invalid_argument("MonteCarloSpec: dt must be positive");
    const double ratio = horizon / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
        throw std::invalid_argument("MonteCarloSpec: dt must divide the horizon evenly");
}

std::int64_t MonteCarloSpec::steps(double horizon) const
{
    return static_cast<std::int64_t>(std::llround(horizon / dt));
}

SampledPath sample_tone_path(const ToneGrid& grid, const SpectrumAllocation& alloc,
                             const MonteCarloSpec& mc, std::uint64_t path_index)
{
    if (alloc.size() != grid.waves())
        throw std::domain_error("sample_tone_path: allocation and grid wave counts differ");
    mc.validate(grid.horizon);

    const std::int64_t m = mc.steps(grid.horizon);
    const int n = grid.waves();
    const double amp_scale = std::sqrt(2.0 / grid.horizon);

    CounterRng rng(mc.seed ^ kToneTag, path_index);
    SampledPath path;
    path.dt = mc.dt;
    path.kind = PathKind::ToneSum;
    path.latent.resize(n);
    for (int i = 0; i < n; ++i) path.latent[i] = kTwoPi * rng.next_uniform();

    path.values.assign(m, 0.0);
    for (int i = 0; i < n; ++i) {
        const double omega = kTwoPi * grid.wave_indices[i] / grid.horizon;
        const double a = amp_scale * alloc.alphas[i];
        const double theta = path.latent[i];
        for (std::int64_t j = 0; j < m; ++j)
            path.values[j] += a * std::cos(omega * (j * mc.dt) + theta);
    }
    return path;
}

SampledPath sample_gaussian_path(const ToneGrid& grid, const MonteCarloSpec& mc,
                                 std::uint64_t path_index)
{
    mc.validate(grid.horizon);
    const std::int64_t m = mc.steps(grid.horizon);
    const int n = grid.waves();
    const double coeff_sd = std::sqrt(1.0 / n);
    const double scale = std::sqrt(1.0 / grid.horizon);

    CounterRng rng(mc.seed ^ kGaussTag, path_index);
    SampledPath path;
    path.dt = mc.dt;
    path.kind = PathKind::GaussianSum;
    path.latent.resize(2 * n);
    for (int i = 0; i < 2 * n; ++i) path.latent[i] = coeff_sd * rng.next_normal();

    path.values.assign(m, 0.0);
    for (int i = 0; i < n; ++i) {
        const double omega = kTwoPi * grid.wave_indices[i] / grid.horizon;
        const double ac = scale * path.latent[i];
        const double as = scale * path.latent[n + i];
        for (std::int64_t j = 0; j < m; ++j) {
            const double t = j * mc.dt;
            path.values[j] += ac * std::cos(omega * t) + as * std::sin(omega * t);
        }
    }
    return path;
}

ObservationPath simulate_observation(const SampledPath& signal, ChannelSnr snr,
                                     std::uint64_t seed, std::uint64_t path_index)
{
    if (signal.values.empty())
        throw std::domain_error("simulate_observation: empty signal path");
    const double sq = std::sqrt(snr.q);
    const double noise_sd = std::sqrt(signal.dt);
    CounterRng rng(seed ^ kObsTag, path_index);
    ObservationPath obs;
    obs.dt = signal.dt;
    obs.increments.resize(signal.values.size());
    for (std::size_t j = 0; j < signal.values.size(); ++j)
        obs.increments[j] = sq * signal.values[j] * signal.dt + noise_sd * rng.next_normal();
    return obs;
}

MonteCarloEstimate mmse_tone_oracle(double gamma, const MonteCarloSpec& mc)
{
    if (!std::isfinite(gamma) || gamma < 0.0)
        throw std::domain_error("mmse_tone_oracle: gamma must be finite and >= 0");
    if (mc.paths < 1) throw std::invalid_argument("mmse_tone_oracle: paths must be >= 1");

    const double sg = std::sqrt(gamma);
    WelfordSums acc;
    CounterRng rng(mc.seed ^ kOracleTag, 0);
    for (std::int64_t i = 0; i < mc.paths; ++i) {
        const double theta = kTwoPi * rng.next_uniform();
        const double vx = sg * std::cos(theta) + rng.next_normal();
        const double vy = sg * std::sin(theta) + rng.next_normal();
        const double ratio = specfun::bessel_ratio_i1_i0(sg * std::hypot(vx, vy));
        acc.add(1.0 - ratio * ratio);
    }
    return acc.finish();
}

ErrorComponent mmse_tone_oracle_quadrature(double gamma, const QuadratureSpec& spec)
{
    if (!std::isfinite(gamma) || gamma < 0.0)
        throw std::domain_error("mmse_tone_oracle_quadrature: gamma must be finite and >= 0");
    spec.validate();
    if (gamma == 0.0) return {1.0, 0.0};

    const double R = certified_envelope_radius(gamma, spec.tail_mass_bound);
    const specfun::EnvelopeDensityParams p(gamma);
    const double sg = std::sqrt(gamma);
    auto integrand = [&p, sg](double r) {
        const double lf = specfun::rician_log_pdf(r, p);
        if (lf < -745.0) return 0.0;
        const double ratio = specfun::bessel_ratio_i1_i0(sg * r);
        return std::exp(lf) * ratio * ratio;
    };
    const auto pts = envelope_breakpoints(gamma, R);
    const auto out = integrate_adaptive(integrand, pts, spec);
    const double tail = std::exp(envelope_tail_log_bound(gamma, R, 0));
    return {1.0 - out.value, out.error_estimate + tail};
}

MonteCarloEstimate mmse_sum_oracle(const SpectrumAllocation& alloc, ChannelSnr snr,
                                   const MonteCarloSpec& mc)
{
    double estimate = 0.0, var = 0.0;
    for (int i = 0; i < alloc.size(); ++i) {
        const double a2 = alloc.alphas[i] * alloc.alphas[i];
        MonteCarloSpec sub = mc;  // independent substream per wave
        sub.seed = mc.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(i + 1);
        const MonteCarloEstimate part = mmse_tone_oracle(a2 * snr.q, sub);
        estimate += a2 * part.estimate;
        var += a2 * a2 * part.std_error * part.std_error;
    }
    return {estimate, std::sqrt(var)};
}

ErrorComponent mmse_sum_oracle_quadrature(const SpectrumAllocation& alloc, ChannelSnr snr,
                                          const QuadratureSpec& spec)
{
    double estimate = 0.0, bound = 0.0;
    for (int i = 0; i < alloc.size(); ++i) {
        const double a2 = alloc.alphas[i] * alloc.alphas[i];
        const ErrorComponent part = mmse_tone_oracle_quadrature(a2 * snr.q, spec);
        estimate += a2 * part.value;
        bound += a2 * part.error_bound;
    }
    return {estimate, bound};
}

MonteCarloEstimate cmmse_causal_estimate(const ToneGrid& grid, ChannelSnr snr,
                                         const MonteCarloSpec& mc,
                                         const PosteriorObserver& observer)
{
    if (grid.waves() != 1)
        throw std::domain_error("cmmse_causal_estimate: single-wave grids only");
    if (!(snr.q > 0.0)) throw std::domain_error("cmmse_causal_estimate: q must be > 0");
    mc.validate(grid.horizon);

    const double T = grid.horizon;
    const double q = snr.q;
    const double dt = mc.dt;
    const std::int64_t m = mc.steps(T);
    const int K = mc.theta_grid_size;
    const double amp = std::sqrt(2.0 / T);
    const double omega = kTwoPi * grid.wave_indices[0] / T;
    const double sq = std::sqrt(q);
    const double sqdt = std::sqrt(dt);
    const double b_coef = 0.5 * q * amp * amp * dt;

    std::vector<double> cj(m), sj(m), ck(K), sk(K);
    for (std::int64_t j = 0; j < m; ++j) {
        cj[j] = std::cos(omega * (j * dt));
        sj[j] = std::sin(omega * (j * dt));
    }
    for (int k = 0; k < K; ++k) {
        const double theta = kTwoPi * (k + 0.5) / K;
        ck[k] = std::cos(theta);
        sk[k] = std::sin(theta);
    }

    std::vector<double> path_error(mc.paths);
    parallel_for(mc.paths, [&](std::int64_t p) {
        thread_local std::vector<double> w;
        w.assign(K, 1.0 / K);
        thread_local std::vector<double> normalized;
        if (observer) normalized.resize(K);

        CounterRng rng(mc.seed ^ kCausalTag, static_cast<std::uint64_t>(p));
        const double theta_true = kTwoPi * rng.next_uniform();
        const double c0 = std::cos(theta_true);
        const double s0 = std::sin(theta_true);

        double inv = 1.0;  // pending normalization from the previous step
        double accum = 0.0;
        for (std::int64_t j = 0; j < m; ++j) {
            const double cjv = cj[j], sjv = sj[j];
            const double sig = amp * (cjv * c0 - sjv * s0);
            const double deta = sq * sig * dt + sqdt * rng.next_normal();
            const double a_coef = sq * amp * deta;

            // Fused pass: prior sums for the causal estimate, then the Bayes
            // update.  exp of the small log-likelihood increment
            // delta = sqrt(q) s_k deta - (q/2) s_k^2 dt is replaced by its
            // 5th-order polynomial (|delta| = O(sqrt(dt)); relative error
            // < 1e-8 per step), which keeps the loop multiply-only.
            double s0sum = 0.0, csum = 0.0, ssum = 0.0, wnew_sum = 0.0;
            for (int k = 0; k < K; ++k) {
                const double we = w[k] * inv;
                s0sum += we;
                csum += we * ck[k];
                ssum += we * sk[k];
                const double u = cjv * ck[k] - sjv * sk[k];
                const double d = u * (a_coef - b_coef * u);
                const double poly =
                    1.0 + d * (1.0 + d * (0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0 + d * (1.0 / 120.0)))));
                const double wn = we * poly;
                w[k] = wn;
                wnew_sum += wn;
            }
            const double est = amp * (cjv * csum - sjv * ssum) / s0sum;
            accum += (sig - est) * (sig - est) * dt;

            if (!(wnew_sum > 0.0) || !std::isfinite(wnew_sum))
                throw EstimationError("cmmse_causal_estimate: posterior weight collapse");
            inv = 1.0 / wnew_sum;
            if (observer) {
                for (int k = 0; k < K; ++k) normalized[k] = w[k] * inv;
                observer(j, std::span<const double>(normalized.data(), normalized.size()));
            }
        }
        path_error[p] = accum / T;
    });

    return reduce_indexed(path_error);
}

double envelope_ks_statistic(double gamma, std::int64_t n_samples, std::uint64_t seed)
{
    if (n_samples < 2)
        throw std::invalid_argument("envelope_ks_statistic: need at least two samples");
    if (!std::isfinite(gamma) || gamma < 0.0)
        throw std::domain_error("envelope_ks_statistic: gamma must be finite and >= 0");

    const double sg = std::sqrt(gamma);
    std::vector<double> r(n_samples);
    CounterRng rng(seed ^ kKsTag, 0);
    for (auto& x : r) {
        const double theta = kTwoPi * rng.next_uniform();
        const double vx = sg * std::cos(theta) + rng.next_normal();
        const double vy = sg * std::sin(theta) + rng.next_normal();
        x = std::hypot(vx, vy);
    }
    std::sort(r.begin(), r.end());

    const specfun::EnvelopeDensityParams p(gamma);
    auto pdf = [&p](double x) {
        const double lf = specfun::rician_log_pdf(x, p);
        return lf < -745.0 ? 0.0 : std::exp(lf);
    };

    // Cumulative CDF at the sorted samples: one fixed panel per gap is ample
    // for the smooth density and the 1e-3-significance tolerance.
    double ks = 0.0, cdf = 0.0, prev = 0.0;
    const double n = static_cast<double>(n_samples);
    for (std::int64_t i = 0; i < n_samples; ++i) {
        if (r[i] > prev) cdf += detail::gk15_panel(pdf, prev, r[i]).value;
        prev = r[i];
        ks = std::max(ks, std::max(cdf - i / n, (i + 1) / n - cdf));
    }
    return ks;
}

}  // namespace nbmmse
