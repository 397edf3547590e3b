// Spectrum allocation and channel SNR value types.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nbmmse {

// Amplitude fractions of the N component waves; total power is normalized,
// sum of alpha_i^2 == 1 within 1e-12.
struct SpectrumAllocation {
    std::vector<double> alphas;

    explicit SpectrumAllocation(std::vector<double> a) : alphas(std::move(a))
    {
        if (alphas.empty())
            throw std::invalid_argument("SpectrumAllocation: needs at least one wave");
        double energy = 0.0;
        for (double alpha : alphas) {
            if (!(std::isfinite(alpha) && alpha > 0.0))
                throw std::invalid_argument("SpectrumAllocation: every alpha must be positive");
            energy += alpha * alpha;
        }
        if (std::abs(energy - 1.0) > 1e-12)
            throw std::invalid_argument("SpectrumAllocation: sum of alpha^2 must be 1");
    }

    static SpectrumAllocation equal(int n)
    {
        if (n < 1) throw std::invalid_argument("SpectrumAllocation::equal: n must be >= 1");
        return SpectrumAllocation(std::vector<double>(n, 1.0 / std::sqrt(double(n))));
    }

    int size() const { return static_cast<int>(alphas.size()); }
};

// Dimensionless channel signal-to-noise parameter.
struct ChannelSnr {
    double q;

    explicit ChannelSnr(double q_in) : q(q_in)
    {
        if (!std::isfinite(q) || q < 0.0)
            throw std::invalid_argument("ChannelSnr: q must be finite and >= 0");
    }
};

}  // namespace nbmmse
