#include "nbmmse/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "nbmmse/allocation.hpp"
#include "nbmmse/divergence.hpp"
#include "nbmmse/errors.hpp"
#include "nbmmse/simkit.hpp"
#include "nbmmse/specfun.hpp"

#include "json.hpp"

namespace nbmmse {
namespace {

std::string num_tag(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

QuadratureSpec tightened(QuadratureSpec spec, double abs_tol, double rel_tol) {
    spec.abs_tol = std::min(spec.abs_tol, abs_tol);
    spec.rel_tol = std::min(spec.rel_tol, rel_tol);
    spec.tail_mass_bound = std::min(spec.tail_mass_bound, spec.abs_tol / 10.0);
    spec.max_subdivisions = std::max(spec.max_subdivisions, 4000);
    return spec;
}

// All divergence *values* flow through this cache so the injected bias hits
// every consumer uniformly while derivatives stay exact.
class Suite {
  public:
    explicit Suite(const VerifyOptions& options) : opt_(options) {}

    std::vector<CheckResult> run() {
        density_checks();
        divergence_bound_checks();
        derivative_checks();
        scaling_checks();
        small_q_checks();
        bridge_checks();
        oracle_checks();
        causal_checks();
        large_n_checks();
        ordering_checks();
        ks_checks();
        return std::move(checks_);
    }

  private:
    void add(std::string name, double value, double tolerance) {
        CheckResult c;
        c.check_name = std::move(name);
        c.value = value;
        c.tolerance = tolerance;
        c.passed = std::isfinite(value) && value <= tolerance;
        checks_.push_back(std::move(c));
    }

    DivergenceResult biased_divergence(double q, const QuadratureSpec& spec) {
        auto it = cache_.find(q);
        if (it == cache_.end()) {
            DivergenceResult r = divergence_single(q, spec);
            r.value *= 1.0 + opt_.divergence_bias;
            it = cache_.emplace(q, r).first;
        }
        return it->second;
    }

    DivergenceResult biased_sum(const SpectrumAllocation& alloc, double q,
                                const QuadratureSpec& spec) {
        DivergenceResult total{0.0, 0.0, 0.0};
        for (double alpha : alloc.alphas) {
            DivergenceResult one = biased_divergence(alpha * alpha * q, spec);
            total.value += one.value;
            total.error_estimate += one.error_estimate;
            total.truncation_radius = std::max(total.truncation_radius, one.truncation_radius);
        }
        return total;
    }

    double biased_cmmse_tone(const SpectrumAllocation& alloc, double q,
                             const QuadratureSpec& spec) {
        if (q == 0.0) return 1.0;
        return cmmse_gaussian(alloc, ChannelSnr{q}) - (2.0 / q) * biased_sum(alloc, q, spec).value;
    }

    // --- densities -----------------------------------------------------
    void density_checks() {
        const QuadratureSpec spec = tightened(opt_.quad, 1e-12, 1e-12);
        for (double q : {0.0, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
            const double radius = truncation_radius(q);
            const std::vector<double> brk = q > 0.0 ? envelope_breakpoints(q, radius)
                                                    : std::vector<double>{0.0, radius};
            auto mass = [&](auto log_pdf, int power) {
                auto f = [&](double r) {
                    const double lf = log_pdf(r);
                    if (lf < -745.0) return 0.0;
                    double v = std::exp(lf);
                    for (int k = 0; k < power; ++k) v *= r;
                    return v;
                };
                return integrate_adaptive(f, brk, spec).value;
            };
            const specfun::EnvelopeDensityParams params(q);
            auto rician = [&](double r) { return specfun::rician_log_pdf(r, params); };
            auto rayleigh = [&](double r) { return specfun::rayleigh_log_pdf(r, params); };
            const std::string tag = num_tag(q);
            add("rician_normalization_q" + tag, std::fabs(mass(rician, 0) - 1.0), 1e-10);
            add("rayleigh_normalization_q" + tag, std::fabs(mass(rayleigh, 0) - 1.0), 1e-10);
            add("rician_second_moment_q" + tag, std::fabs(mass(rician, 2) - (2.0 + q)), 1e-8);
            add("rayleigh_second_moment_q" + tag, std::fabs(mass(rayleigh, 2) - (2.0 + q)), 1e-8);
        }
    }

    // --- divergence bounds ---------------------------------------------
    void divergence_bound_checks() {
        for (double q : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
            const DivergenceResult d = biased_divergence(q, opt_.quad);
            const std::string tag = num_tag(q);
            add("divergence_nonnegative_q" + tag,
                std::max(0.0, -(d.value + d.error_estimate)), 0.0);
            add("divergence_upper_bound_q" + tag,
                std::max(0.0, d.value - d.error_estimate - std::log1p(0.5 * q)), 0.0);
        }
    }

    // --- derivative ------------------------------------------------------
    void derivative_checks() {
        const QuadratureSpec spec = tightened(opt_.quad, 1e-13, 1e-12);
        for (double q : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
            const DivergenceResult dd = divergence_derivative(q, opt_.quad);
            const std::string tag = num_tag(q);
            add("derivative_nonnegative_q" + tag,
                std::max(0.0, -(dd.value + dd.error_estimate)), 0.0);

            const double h = std::max(1e-4, 1e-4 * q);
            auto dv = [&](double x) { return biased_divergence(x, spec).value; };
            const double fd_h = (dv(q + h) - dv(q - h)) / (2.0 * h);
            const double fd_h2 = (dv(q + 0.5 * h) - dv(q - 0.5 * h)) / h;
            const double fd = (4.0 * fd_h2 - fd_h) / 3.0;
            add("derivative_vs_difference_q" + tag, std::fabs(dd.value - fd),
                std::max(1e-8, 1e-6 * std::fabs(dd.value)));
        }
    }

    // --- equal-allocation scaling ----------------------------------------
    void scaling_checks() {
        const double q = 100.0;
        for (int n : {1, 2, 7, 40}) {
            const auto alloc = SpectrumAllocation::equal(n);
            const DivergenceResult total = biased_sum(alloc, q, opt_.quad);
            const DivergenceResult one = biased_divergence(q / n, opt_.quad);
            const double slack = total.error_estimate + n * one.error_estimate + 1e-15;
            add("scaling_identity_n" + std::to_string(n),
                std::fabs(total.value - n * one.value), slack);
        }
    }

    // --- small-q behaviour ------------------------------------------------
    void small_q_checks() {
        auto point_spec = [&](double q) {
            QuadratureSpec s = opt_.quad;
            s.abs_tol = std::min(s.abs_tol, std::max(1e-8 * q * q, 5e-15));
            s.rel_tol = std::min(s.rel_tol, 1e-10);
            s.tail_mass_bound = std::min(s.tail_mass_bound, s.abs_tol / 10.0);
            s.max_subdivisions = std::max(s.max_subdivisions, 4000);
            return s;
        };
        double prev = biased_divergence(0.1, point_spec(0.1)).value / (0.1 * 0.1);
        double worst = 0.0;
        for (double q : {0.01, 0.001}) {
            const double cur = biased_divergence(q, point_spec(q)).value / (q * q);
            worst = std::max(worst, cur - prev);
            prev = cur;
        }
        add("quadratic_rate_monotone", std::max(0.0, worst), 0.0);

        const auto grid = default_d2_grid();
        std::vector<double> values;
        values.reserve(grid.size());
        for (double q : grid) values.push_back(biased_divergence(q, point_spec(q)).value);
        const AsymptoticCoefficients fit = estimate_d2_from_values(grid, values);
        d2_ = fit.d2_at_zero;
        add("quadratic_rate_residual", fit.fit_residual, 1e-4);
        add("quadratic_rate_vanishes", std::fabs(fit.d2_at_zero), 1e-4);
    }

    // --- derivative/integral bridges ---------------------------------------
    void bridge_checks() {
        const QuadratureSpec spec = tightened(opt_.quad, 1e-13, 1e-12);
        for (int n : {1, 4, 7}) {
            const auto alloc = SpectrumAllocation::equal(n);
            for (double q : {0.5, 1.0, 10.0, 100.0}) {
                auto qc = [&](double x) { return x * biased_cmmse_tone(alloc, x, spec); };
                const double h = std::max(1e-4, 1e-4 * q);
                const double fd_h = (qc(q + h) - qc(q - h)) / (2.0 * h);
                const double fd_h2 = (qc(q + 0.5 * h) - qc(q - 0.5 * h)) / h;
                const double fd = (4.0 * fd_h2 - fd_h) / 3.0;
                const double mmse = mmse_tone_sum(alloc, ChannelSnr{q}, spec).value;
                const std::string tag = "_n" + std::to_string(n) + "_q" + num_tag(q);
                add("bridge_derivative" + tag, std::fabs(fd - mmse), 1e-6);

                QuadratureSpec outer = spec;
                outer.abs_tol = std::max(1e-13, 1e-9 * q);
                auto integrand = [&](double x) {
                    return mmse_tone_sum(alloc, ChannelSnr{x}, spec).value;
                };
                outer.tail_mass_bound = std::min(spec.tail_mass_bound, outer.abs_tol / 10.0);
                const double integral =
                    integrate_adaptive(integrand, 0.0, q, outer).value;
                add("bridge_integral" + tag,
                    std::fabs(biased_cmmse_tone(alloc, q, spec) - integral / q), 1e-6);
            }
        }
    }

    // --- estimator oracles --------------------------------------------------
    void oracle_checks() {
        for (int n : {1, 7}) {
            const auto alloc = SpectrumAllocation::equal(n);
            for (double q : {2.0, 100.0}) {
                const ErrorComponent oracle =
                    mmse_sum_oracle_quadrature(alloc, ChannelSnr{q}, opt_.quad);
                const double closed = mmse_tone_sum(alloc, ChannelSnr{q}, opt_.quad).value;
                add("mmse_oracle_quadrature_n" + std::to_string(n) + "_q" + num_tag(q),
                    std::fabs(oracle.value - closed), 1e-6);
            }
        }

        MonteCarloSpec mc;
        mc.paths = 400000;
        mc.seed = opt_.seed;
        const MonteCarloEstimate sampled = mmse_tone_oracle(2.0, mc);
        const double closed = mmse_tone_sum(SpectrumAllocation::equal(1), ChannelSnr{2.0},
                                            opt_.quad).value;
        add("mmse_oracle_sampled_q2", std::fabs(sampled.estimate - closed),
            3.0 * sampled.std_error);
    }

    // --- causal filter -------------------------------------------------------
    void causal_checks() {
        const ToneGrid grid = ToneGrid::standard(1);

        MonteCarloSpec full;
        full.paths = opt_.paths;
        full.dt = 1.0 / opt_.dt_steps;
        full.theta_grid_size = opt_.theta_grid;
        full.seed = opt_.seed;
        const MonteCarloEstimate causal = cmmse_causal_estimate(grid, ChannelSnr{2.0}, full);
        const double closed =
            biased_cmmse_tone(SpectrumAllocation::equal(1), 2.0, opt_.quad);
        add("cmmse_causal_q2", std::fabs(causal.estimate - closed),
            std::max(3.0 * causal.std_error, 0.01 * closed));

        MonteCarloSpec reduced;
        reduced.paths = std::min<std::int64_t>(opt_.paths, 3000);
        reduced.dt = 1.0 / std::min(opt_.dt_steps, 2048);
        reduced.theta_grid_size = std::min(opt_.theta_grid, 256);
        reduced.seed = opt_.seed;
        for (double q : {1.0, 2.0, 10.0}) {
            const MonteCarloEstimate c = cmmse_causal_estimate(grid, ChannelSnr{q}, reduced);
            MonteCarloSpec mc;
            mc.paths = 200000;
            mc.seed = opt_.seed;
            const MonteCarloEstimate m = mmse_tone_oracle(q, mc);
            const double slack =
                3.0 * std::sqrt(c.std_error * c.std_error + m.std_error * m.std_error);
            add("causal_dominates_noncausal_q" + num_tag(q),
                m.estimate - c.estimate, slack);
        }
    }

    // --- many-wave limits ------------------------------------------------------
    void large_n_checks() {
        const int n = 1024;
        const double q = 1.0;
        const auto alloc = SpectrumAllocation::equal(n);
        const ChannelSnr snr{q};
        const double ct = biased_cmmse_tone(alloc, q, opt_.quad);
        const double mt = mmse_tone_sum(alloc, snr, opt_.quad).value;

        const double cmmse_gap = n * (1.0 - ct);
        const double mmse_gap = n * (1.0 - mt);
        const double cmmse_limit = (0.25 + d2_) * q;
        const double mmse_limit = (0.5 + 2.0 * d2_) * q;
        add("large_n_cmmse_gap_abs", std::fabs(cmmse_gap - cmmse_limit), 1e-3);
        add("large_n_mmse_gap_abs", std::fabs(mmse_gap - mmse_limit), 1e-3);
        add("large_n_cmmse_gap_rel",
            std::fabs(cmmse_gap - cmmse_limit) / std::fabs(cmmse_limit), 1e-2);
        add("large_n_mmse_gap_rel",
            std::fabs(mmse_gap - mmse_limit) / std::fabs(mmse_limit), 1e-2);
    }

    // --- cross-family ordering ---------------------------------------------------
    void ordering_checks() {
        double dominance = 0.0;
        double range = 0.0;
        double order = 0.0;
        double monotone = 0.0;
        for (int n : {1, 2, 7, 40}) {
            const auto alloc = SpectrumAllocation::equal(n);
            double prev_c = 2.0;
            double prev_m = 2.0;
            for (double q : {0.1, 1.0, 10.0, 100.0}) {
                const ChannelSnr snr{q};
                const double cg = cmmse_gaussian(alloc, snr);
                const double mg = mmse_gaussian(alloc, snr);
                const DivergenceResult d = biased_sum(alloc, q, opt_.quad);
                const double ct = cg - (2.0 / q) * d.value;
                const double mt = mmse_tone_sum(alloc, snr, opt_.quad).value;
                const double slack = (2.0 / q) * d.error_estimate + 1e-12;
                dominance = std::max({dominance, ct - cg - slack, mt - mg - slack});
                range = std::max({range, -ct - slack, -mt - slack, ct - 1.0 - slack,
                                  mt - 1.0 - slack});
                order = std::max(order, mt - ct - slack);
                monotone = std::max({monotone, ct - prev_c, mt - prev_m});
                prev_c = ct;
                prev_m = mt;
            }
        }
        add("gaussian_dominance", std::max(0.0, dominance), 0.0);
        add("error_range", std::max(0.0, range), 0.0);
        add("error_ordering", std::max(0.0, order), 0.0);
        add("error_snr_monotonicity", std::max(0.0, monotone), 0.0);
    }

    // --- envelope law ---------------------------------------------------------------
    void ks_checks() {
        const std::size_t samples = 100000;
        const double critical = 1.94947 / std::sqrt(static_cast<double>(samples));
        for (double gamma : {1.0, 10.0}) {
            const double stat = envelope_ks_statistic(gamma, samples, opt_.seed);
            add("envelope_ks_gamma" + num_tag(gamma), stat, critical);
        }
    }

    VerifyOptions opt_;
    std::vector<CheckResult> checks_;
    std::map<double, DivergenceResult> cache_;
    double d2_ = 0.0;
};

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
    options.quad.validate();
    Suite suite(options);
    return suite.run();
}

bool all_passed(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.passed; });
}

std::string report_json(const VerifyOptions& options, const std::vector<CheckResult>& checks) {
    nlohmann::ordered_json doc;
    doc["seed"] = options.seed;
    doc["paths"] = options.paths;
    doc["all_passed"] = all_passed(checks);
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const CheckResult& c : checks) {
        nlohmann::ordered_json row;
        row["check_name"] = c.check_name;
        row["value"] = c.value;
        row["tolerance"] = c.tolerance;
        row["passed"] = c.passed;
        list.push_back(std::move(row));
    }
    doc["checks"] = std::move(list);
    return doc.dump(2) + "\n";
}

}  // namespace nbmmse
