#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's quadrature, gain operators or special functions.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>

namespace oracle {

// Composite Simpson on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels)
{
    if (panels % 2 != 0) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

inline double adaptive(const std::function<double(double)>& f, double a, double b)
{
    if (a >= b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 25, 1e-13);
}

struct Gamma {
    double n;
    double mean = 1.0;
    double pdf(double u) const
    {
        if (u <= 0.0) return n == 1.0 ? n / mean : (n < 1.0 ? std::numeric_limits<double>::infinity() : 0.0);
        const double r = n / mean;
        return std::exp(n * std::log(r) - std::lgamma(n) + (n - 1.0) * std::log(u) - r * u);
    }
    // int_x^inf pdf(v)/v dv in closed form through the upper incomplete gamma.
    double tail_over_v(double x) const
    {
        const double r = n / mean;
        const double y = r * x;
        const double scale = r / (n - 1.0);
        if (n > 1.0) return scale * boost::math::gamma_q(n - 1.0, y);
        // Gamma(s, y) = (Gamma(s+1, y) - y^s e^-y)/s with s = n - 1 < 0.
        const double s = n - 1.0;
        const double upper = std::tgamma(n) * boost::math::gamma_q(n, y) - std::pow(y, s) * std::exp(-y);
        return r / std::tgamma(n) * upper / s;
    }
    template <class Rng>
    double sample(Rng& rng) const
    {
        std::gamma_distribution<double> d(n, mean / n);
        return d(rng);
    }
};

// Steady-state right-hand side of the asymmetric model for a Gamma input:
// (winner + loser)/2, each term by adaptive quadrature over closed-form tails.
struct AngleRhs {
    Gamma g;
    double omega;

    double winner(double u) const
    {
        auto integrand = [&](double u1) { return g.pdf(u1) * g.tail_over_v((u - u1) / omega) / omega; };
        return boost::math::quadrature::tanh_sinh<double>().integrate(integrand, 0.0, u);
    }
    double loser(double u) const
    {
        const double hi = omega < 1.0 ? g.tail_over_v(u / (1.0 - omega)) : 0.0;
        return (g.tail_over_v(u) - hi) / omega;
    }
    double operator()(double u) const { return 0.5 * (winner(u) + loser(u)); }
};

// Five-point central difference.
inline double derivative(const std::function<double(double)>& f, double x, double h)
{
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

// 2u^2 d/du [R'(u)/f(u)] + 2(n-1) with R the steady-state right-hand side
// for the Gamma input f; vanishes when R = f.
inline double residual_from_rhs(double u, double omega, double h = 2e-3)
{
    const double n = (3.0 - 2.0 * omega) / (2.0 * omega);
    const AngleRhs rhs{{n, 1.0}, omega};
    auto ratio = [&](double x) { return derivative(rhs, x, h) / rhs.g.pdf(x); };
    return 2.0 * u * u * derivative(ratio, u, h) + 2.0 * (n - 1.0);
}

// 2u^2 (ln R)'' + 2(n-1).
inline double residual_from_log_rhs(double u, double omega, double h = 2e-3)
{
    const double n = (3.0 - 2.0 * omega) / (2.0 * omega);
    const AngleRhs rhs{{n, 1.0}, omega};
    auto log_rhs = [&](double x) { return std::log(rhs(x)); };
    auto d1 = [&](double x) { return derivative(log_rhs, x, h); };
    return 2.0 * u * u * derivative(d1, u, h) + 2.0 * (n - 1.0);
}

// Monte Carlo estimate of E[g(a, b)] with a, b independent draws of `dist`.
template <class G>
double mc_pair_mean(const Gamma& dist, G&& g, std::uint64_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    double sum = 0.0;
    for (std::uint64_t k = 0; k < samples; ++k) {
        const double a = dist.sample(rng);
        const double b = dist.sample(rng);
        sum += g(a, b);
    }
    return sum / static_cast<double>(samples);
}

} // namespace oracle
