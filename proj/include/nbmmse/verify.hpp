// The bundled oracle suite behind `verify`.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbmmse/quadrature.hpp"

namespace nbmmse {

struct CheckResult {
    std::string check_name;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct VerifyOptions {
    QuadratureSpec quad{};
    std::int64_t paths = 20000;
    int dt_steps = 8192;
    int theta_grid = 512;
    std::uint64_t seed = 42;
    // Negative-control fixture: multiplies every divergence value (not the
    // derivative) by (1 + bias) inside the suite.
    double divergence_bias = 0.0;
};

// Runs every check in a fixed order.  Throws only on infrastructure failure;
// check outcomes are reported, not thrown.
std::vector<CheckResult> run_verification(const VerifyOptions& options);

bool all_passed(const std::vector<CheckResult>& checks);

// Byte-stable JSON report (fixed key order, shortest-round-trip floats).
std::string report_json(const VerifyOptions& options, const std::vector<CheckResult>& checks);

}  // namespace nbmmse
