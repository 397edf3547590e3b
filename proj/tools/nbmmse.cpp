// nbmmse: divergence and estimation-error sweeps for normalized narrowband
// wave sums in the white-Gaussian channel.
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nbmmse/divergence.hpp"
#include "nbmmse/errors.hpp"
#include "nbmmse/quadrature.hpp"
#include "nbmmse/svg.hpp"
#include "nbmmse/sweep.hpp"
#include "nbmmse/verify.hpp"

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIdentity = 3;

struct CliArgs {
    std::string config_path;
    std::vector<double> q;
    std::optional<int> n_min;
    std::optional<int> n_max;
    std::optional<double> abs_tol;
    std::optional<double> rel_tol;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> paths;
    std::optional<int> dt_steps;
    std::optional<int> theta_grid;
    std::optional<std::string> out;
    std::optional<std::string> svg;
    double bias = 0.0;
};

void add_shared_flags(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file (flags override)");
    cmd->add_option("--q", args.q, "Signal-to-noise ratio(s)");
    cmd->add_option("--n-min", args.n_min, "Smallest wave count");
    cmd->add_option("--n-max", args.n_max, "Largest wave count");
    cmd->add_option("--abs-tol", args.abs_tol, "Quadrature absolute tolerance");
    cmd->add_option("--rel-tol", args.rel_tol, "Quadrature relative tolerance");
    cmd->add_option("--seed", args.seed, "Monte Carlo seed");
    cmd->add_option("--paths", args.paths, "Monte Carlo path count");
    cmd->add_option("--dt-steps", args.dt_steps, "Time steps per unit horizon");
    cmd->add_option("--theta-grid", args.theta_grid, "Phase-grid size for the causal filter");
    cmd->add_option("--out", args.out, "Output CSV/JSON path (default: stdout)");
    cmd->add_option("--svg", args.svg, "Optional SVG chart path");
    cmd->add_option("--inject-divergence-bias", args.bias,
                    "Multiply divergence values by (1+bias); verification fixture")
        ->group("");  // hidden
}

// Config file first, then explicit flags on top.
nbmmse::RunConfig make_config(const CliArgs& args) {
    nbmmse::RunConfig cfg;
    if (!args.config_path.empty()) cfg = nbmmse::load_config(args.config_path);
    if (!args.q.empty()) cfg.qs = args.q;
    if (args.n_min) cfg.n_min = *args.n_min;
    if (args.n_max) cfg.n_max = *args.n_max;
    if (args.abs_tol) {
        cfg.quad.abs_tol = *args.abs_tol;
        cfg.quad.tail_mass_bound = std::min(cfg.quad.tail_mass_bound, cfg.quad.abs_tol / 10.0);
    }
    if (args.rel_tol) cfg.quad.rel_tol = *args.rel_tol;
    if (args.seed) cfg.seed = *args.seed;
    if (args.paths) cfg.paths = *args.paths;
    if (args.dt_steps) cfg.dt_steps = *args.dt_steps;
    if (args.theta_grid) cfg.theta_grid = *args.theta_grid;
    if (args.out) cfg.out = *args.out;
    if (args.svg) cfg.svg = *args.svg;
    cfg.inject_divergence_bias = args.bias;
    cfg.validate();
    return cfg;
}

bool config_mentions_q(const CliArgs& args) {
    if (!args.q.empty()) return true;
    if (args.config_path.empty()) return false;
    std::ifstream in(args.config_path);
    if (!in) return false;
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
    return doc.is_object() && doc.contains("q");
}

void emit(const nbmmse::RunConfig& cfg, const std::string& text) {
    if (cfg.out.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        nbmmse::write_file(cfg.out, text);
    }
}

void emit_svg(const nbmmse::RunConfig& cfg, const std::string& title,
              const std::string& x_label, const std::string& y_label,
              const std::vector<nbmmse::ChartSeries>& series) {
    if (cfg.svg.empty()) return;
    nbmmse::write_file(cfg.svg, nbmmse::render_line_chart(title, x_label, y_label, series));
}

const char* series_color(std::size_t i) {
    static const char* kPalette[] = {"#1f6fb2", "#c0392b", "#1e8449", "#8e44ad",
                                     "#b7950b", "#148f9f"};
    return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

int cmd_d_sweep(const CliArgs& args) {
    const nbmmse::RunConfig cfg = make_config(args);
    const auto rows = nbmmse::run_divergence_sweep(cfg);
    emit(cfg, nbmmse::to_csv(rows, /*divergence_only=*/true));

    std::FILE* sink = cfg.out.empty() ? stderr : stdout;
    for (double q : cfg.qs) {
        std::vector<nbmmse::SweepRow> slice;
        for (const auto& row : rows)
            if (row.q == q) slice.push_back(row);
        std::string ns;
        for (int n : nbmmse::divergence_argmax(slice)) {
            if (!ns.empty()) ns += ",";
            ns += std::to_string(n);
        }
        std::fprintf(sink, "argmax_n d_n at q=%s: %s\n", nbmmse::format_value(q).c_str(),
                     ns.c_str());
    }

    std::vector<nbmmse::ChartSeries> series;
    for (std::size_t i = 0; i < cfg.qs.size(); ++i) {
        nbmmse::ChartSeries s;
        s.label = "d_n, q=" + nbmmse::format_value(cfg.qs[i]);
        s.color = series_color(i);
        for (const auto& row : rows)
            if (row.q == cfg.qs[i]) s.points.emplace_back(row.n, row.d_n);
        series.push_back(std::move(s));
    }
    emit_svg(cfg, "Divergence of the normalized n-wave sum", "n", "d_n", series);
    return 0;
}

int cmd_error_sweep(const CliArgs& args) {
    const nbmmse::RunConfig cfg = make_config(args);
    const auto rows = nbmmse::run_error_sweep(cfg);
    const int bad = nbmmse::find_identity_violation(rows);
    if (bad >= 0) {
        const auto& row = rows[static_cast<std::size_t>(bad)];
        std::fprintf(stderr,
                     "identity violation at n=%d q=%s: cmmse_gauss - cmmse_tone = %s but "
                     "(2/q) d_n = %s (bound %s)\n",
                     row.n, nbmmse::format_value(row.q).c_str(),
                     nbmmse::format_value(row.cmmse_gauss - row.cmmse_tone).c_str(),
                     nbmmse::format_value(row.q > 0.0 ? 2.0 / row.q * row.d_n : 0.0).c_str(),
                     nbmmse::format_value(row.err_bound).c_str());
        return kExitIdentity;
    }
    emit(cfg, nbmmse::to_csv(rows, /*divergence_only=*/false));

    std::vector<nbmmse::ChartSeries> series;
    const double q0 = cfg.qs.front();
    const char* labels[] = {"cmmse_tone", "cmmse_gauss", "mmse_tone", "mmse_gauss"};
    for (std::size_t i = 0; i < 4; ++i) {
        nbmmse::ChartSeries s;
        s.label = labels[i];
        s.color = series_color(i);
        for (const auto& row : rows) {
            if (row.q != q0) continue;
            const double y = i == 0   ? row.cmmse_tone
                             : i == 1 ? row.cmmse_gauss
                             : i == 2 ? row.mmse_tone
                                      : row.mmse_gauss;
            s.points.emplace_back(row.n, y);
        }
        series.push_back(std::move(s));
    }
    emit_svg(cfg, "Estimation errors, q=" + nbmmse::format_value(q0), "n", "error", series);
    return 0;
}

int cmd_asymptotics(const CliArgs& args) {
    nbmmse::RunConfig cfg = make_config(args);
    if (!config_mentions_q(args)) cfg.qs = {1.0};
    const nbmmse::AsymptoticCoefficients coeffs = nbmmse::estimate_d2_at_zero(cfg.quad);
    const auto rows = nbmmse::run_asymptotics(cfg, coeffs);
    emit(cfg, nbmmse::to_csv(rows));

    std::vector<nbmmse::ChartSeries> series;
    const double q0 = cfg.qs.front();
    nbmmse::ChartSeries sc{"n(1-cmmse_tone)", series_color(0), {}};
    nbmmse::ChartSeries sm{"n(1-mmse_tone)", series_color(1), {}};
    for (const auto& row : rows) {
        if (row.q != q0) continue;
        sc.points.emplace_back(row.n, row.n_gap_cmmse_tone);
        sm.points.emplace_back(row.n, row.n_gap_mmse_tone);
    }
    series.push_back(std::move(sc));
    series.push_back(std::move(sm));
    emit_svg(cfg, "Convergence of scaled error gaps, q=" + nbmmse::format_value(q0), "n",
             "n (1 - error)", series);
    return 0;
}

int cmd_verify(const CliArgs& args) {
    const nbmmse::RunConfig cfg = make_config(args);
    nbmmse::VerifyOptions options;
    options.quad = cfg.quad;
    options.paths = cfg.paths;
    options.dt_steps = cfg.dt_steps;
    options.theta_grid = cfg.theta_grid;
    options.seed = cfg.seed;
    options.divergence_bias = cfg.inject_divergence_bias;

    const auto checks = nbmmse::run_verification(options);
    emit(cfg, nbmmse::report_json(options, checks));

    int failed = 0;
    for (const auto& c : checks) {
        if (!c.passed) {
            ++failed;
            std::fprintf(stderr, "[FAIL] %s: value=%s tolerance=%s\n", c.check_name.c_str(),
                         nbmmse::format_value(c.value).c_str(),
                         nbmmse::format_value(c.tolerance).c_str());
        }
    }
    std::fprintf(stderr, "%zu/%zu checks passed\n", checks.size() - failed, checks.size());
    return failed == 0 ? 0 : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimation errors of normalized narrowband wave sums"};
    app.require_subcommand(1);

    CliArgs args;
    CLI::App* d_sweep = app.add_subcommand("d-sweep", "Divergence of the n-wave sum over N");
    CLI::App* error_sweep =
        app.add_subcommand("error-sweep", "Causal/non-causal errors and their Gaussian bounds");
    CLI::App* asymptotics =
        app.add_subcommand("asymptotics", "Scaled large-N gaps against their limits");
    CLI::App* verify = app.add_subcommand("verify", "Run the bundled oracle suite");
    for (CLI::App* cmd : {d_sweep, error_sweep, asymptotics, verify})
        add_shared_flags(cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (d_sweep->parsed()) return cmd_d_sweep(args);
        if (error_sweep->parsed()) return cmd_error_sweep(args);
        if (asymptotics->parsed()) return cmd_asymptotics(args);
        return cmd_verify(args);
    } catch (const nbmmse::QuadratureError& e) {
        std::fprintf(stderr, "quadrature failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
}
