#pragma once

// Shared test inputs built through the library.

#include <cmath>
#include <random>
#include <vector>

#include "kinex/core.hpp"

namespace fixture {

// Normalized mixture of three Gamma densities with random shapes in [1, 6]
// and random means in [0.5, 2].
inline kinex::core::GridPdf random_mixture(const kinex::core::GridHandle& grid, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> shape(1.0, 6.0);
    std::uniform_real_distribution<double> mean(0.5, 2.0);
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    struct Part {
        double n, rate, w;
    };
    std::vector<Part> parts;
    for (int k = 0; k < 3; ++k) {
        const double n = shape(rng);
        parts.push_back({n, n / mean(rng), weight(rng)});
    }
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double u = (*grid)[i];
        double s = 0.0;
        for (const auto& p : parts) {
            if (u > 0.0) {
                s += p.w * std::exp(p.n * std::log(p.rate) - std::lgamma(p.n) + (p.n - 1.0) * std::log(u) - p.rate * u);
            } else if (p.n == 1.0) {
                s += p.w * p.rate;
            }
        }
        v[i] = s;
    }
    kinex::core::GridPdf raw(grid, std::move(v), 1.0);
    return kinex::core::normalize(raw);
}

} // namespace fixture
