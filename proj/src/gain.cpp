#include <algorithm>
#include <cmath>
#include <limits>

#include "kinex/errors.hpp"
#include "kinex/kinetics.hpp"

namespace kinex::kinetics {

namespace {

using core::GridPdf;
using core::WealthGrid;

constexpr double kMaxLambda = 0.999;

// Tracks the grid cell of a slowly moving query point; each call walks from
// the previous cell, so monotone sweeps cost O(1) amortized.
class CellWalker {
public:
    explicit CellWalker(const WealthGrid& grid) : grid_(grid), x_(grid.nodes()) {}

    // Cell k with x[k] <= u < x[k+1]; u is clamped to [x0, umax].
    std::size_t cell(double u)
    {
        if (!valid_) {
            k_ = grid_.cell_of(u);
            valid_ = true;
            return k_;
        }
        while (k_ > 0 && x_[k_] > u) --k_;
        while (k_ + 2 < x_.size() && x_[k_ + 1] <= u) ++k_;
        return k_;
    }

private:
    const WealthGrid& grid_;
    std::span<const double> x_;
    std::size_t k_ = 0;
    bool valid_ = false;
};

double lerp_value(std::span<const double> x, std::span<const double> y, std::size_t k, double u)
{
    const double t = (u - x[k]) / (x[k + 1] - x[k]);
    return y[k] + t * (y[k + 1] - y[k]);
}

// Linear interpolation with the core conventions (clamp below the first node,
// zero above u_max) through a walker.
double interp_walk(CellWalker& w, std::span<const double> x, std::span<const double> y, double u)
{
    if (u > x.back()) return 0.0;
    if (u <= x.front()) return y.front();
    return lerp_value(x, y, w.cell(u), u);
}

double trapezoid(double xa, double ya, double xb, double yb)
{
    return 0.5 * (xb - xa) * (ya + yb);
}

// Cells wider than min_relative_width * xa are integrated assuming a local
// power law, which is exact for u^p singularities. Elsewhere trapezoid.
double cell_integral(double xa, double ya, double xb, double yb, double min_relative_width = 0.02)
{
    if (xa > 0.0 && ya > 0.0 && yb > 0.0 && (xb - xa) > min_relative_width * xa) {
        const double a = xa * ya;
        const double b = xb * yb;
        const double r = b / a;
        const double log_mean = std::abs(r - 1.0) > 1e-6
                                    ? (b - a) / std::log(r)
                                    : a * (1.0 + 0.5 * (r - 1.0) - (r - 1.0) * (r - 1.0) / 12.0);
        return std::log(xb / xa) * log_mean;
    }
    return trapezoid(xa, ya, xb, yb);
}

// Trapezoid weight of node j inside [x_0, x_i] (j <= i).
double node_weight(std::span<const double> x, std::size_t j, std::size_t i)
{
    double w = 0.0;
    if (j > 0) w += 0.5 * (x[j] - x[j - 1]);
    if (j < i) w += 0.5 * (x[j + 1] - x[j]);
    return w;
}

// ---------------------------------------------------------------- pure model

// int_0^U f(s) f(U-s) ds along the grid nodes below U.
double self_convolution_at(const GridPdf& f, double U)
{
    const auto x = f.grid().nodes();
    const auto y = f.values();
    if (U <= 0.0) return 0.0;
    CellWalker w(f.grid());
    double sum = 0.0;
    double prev_x = 0.0;
    double prev_v = 0.0;
    bool have_prev = false;
    double first_x = 0.0, first_v = 0.0, second_x = 0.0, second_v = 0.0;
    int count = 0;
    auto push = [&](double s, double v) {
        if (have_prev) sum += trapezoid(prev_x, prev_v, s, v);
        if (count == 0) { first_x = s; first_v = v; }
        if (count == 1) { second_x = s; second_v = v; }
        ++count;
        prev_x = s;
        prev_v = v;
        have_prev = true;
    };
    for (std::size_t k = 0; k < x.size() && x[k] < U; ++k) {
        push(x[k], y[k] * interp_walk(w, x, y, U - x[k]));
    }
    const double fU = core::interpolate(f, U);
    push(U, fU * y.front());
    if (first_x > 0.0) {
        sum += count >= 2 ? core::power_law_head(first_x, first_v, second_x, second_v)
                          : first_x * first_v;
    }
    return sum;
}

} // namespace

double gain_pure(const GridPdf& f, double u)
{
    if (u < 0.0) throw DomainError("gain_pure: negative wealth");
    const auto x = f.grid().nodes();
    const double umax = f.grid().u_max();
    if (u >= umax) return 0.0;
    auto integrand = [&](double U) {
        if (U <= 0.0) return f[0] * f[0];
        return self_convolution_at(f, U) / U;
    };
    double sum = 0.0;
    double prev_x = u;
    double prev_v = integrand(u);
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] <= u) continue;
        const double v = integrand(x[k]);
        sum += trapezoid(prev_x, prev_v, x[k], v);
        prev_x = x[k];
        prev_v = v;
    }
    return sum;
}

std::vector<double> gain_pure(const GridPdf& f)
{
    const auto& grid = f.grid();
    const auto x = grid.nodes();
    const auto y = f.values();
    const std::size_t n = x.size();
    std::vector<double> conv(n, 0.0);
    if (grid.spacing() == core::Spacing::Uniform && x[0] == 0.0) {
        const double h = x[1] - x[0];
        for (std::size_t k = 1; k < n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i <= k; ++i) {
                s += y[i] * y[k - i];
            }
            conv[k] = h * (s - y[0] * y[k]);
        }
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            conv[k] = self_convolution_at(f, x[k]);
        }
    }
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        g[k] = x[k] > 0.0 ? conv[k] / x[k] : y[0] * y[0];
    }
    std::vector<double> gain(n, 0.0);
    for (std::size_t k = n - 1; k-- > 0;) {
        gain[k] = gain[k + 1] + trapezoid(x[k], g[k], x[k + 1], g[k + 1]);
    }
    return gain;
}

// -------------------------------------------------------------- saving model

namespace {

void check_saving(const models::ModelParams& params)
{
    if (params.kind != models::ModelKind::Saving) {
        throw UnsupportedModelError("gain_saving needs the saving model");
    }
    params.validate();
    if (params.lambda > kMaxLambda) {
        throw DomainError("gain_saving: lambda above 0.999 leaves the kernel degenerate");
    }
}

// int_lo^hi f(s) f(U-s) ds along the nodes inside (lo, hi).
double saving_inner(const GridPdf& f, double U, double lo, double hi)
{
    if (!(hi > lo)) return 0.0;
    const auto x = f.grid().nodes();
    const auto y = f.values();
    CellWalker ws(f.grid());
    CellWalker wm(f.grid());
    auto value = [&](double s) { return interp_walk(ws, x, y, s) * interp_walk(wm, x, y, U - s); };
    double prev_x = lo;
    double prev_v = value(lo);
    double sum = 0.0;
    auto it = std::upper_bound(x.begin(), x.end(), lo);
    for (; it != x.end() && *it < hi; ++it) {
        const double v = value(*it);
        sum += trapezoid(prev_x, prev_v, *it, v);
        prev_x = *it;
        prev_v = v;
    }
    sum += trapezoid(prev_x, prev_v, hi, value(hi));
    return sum;
}

} // namespace

double gain_saving(const GridPdf& f, double u, const models::ModelParams& params)
{
    check_saving(params);
    if (params.lambda == 0.0) return gain_pure(f, u);
    if (u < 0.0) throw DomainError("gain_saving: negative wealth");
    const double lambda = params.lambda;
    const auto x = f.grid().nodes();
    const double umax = f.grid().u_max();
    if (u >= umax) return 0.0;
    auto integrand = [&](double U) {
        if (U <= 0.0) return 0.0;
        const double lo = std::max((u - (1.0 - lambda) * U) / lambda, 0.0);
        const double hi = std::min(u / lambda, U);
        return saving_inner(f, U, lo, hi) / ((1.0 - lambda) * U);
    };
    double sum = 0.0;
    double prev_x = u;
    double prev_v = integrand(u);
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] <= u) continue;
        const double v = integrand(x[k]);
        sum += trapezoid(prev_x, prev_v, x[k], v);
        prev_x = x[k];
        prev_v = v;
    }
    return sum;
}

std::vector<double> gain_saving(const GridPdf& f, const models::ModelParams& params)
{
    check_saving(params);
    if (params.lambda == 0.0) return gain_pure(f);
    const double lambda = params.lambda;
    const double mu = 1.0 - lambda;
    const auto& grid = f.grid();
    const auto x = grid.nodes();
    const auto y = f.values();
    const std::size_t n = x.size();
    const bool head = grid.has_head_cell();

    // First part, with the partner wealth v outermost:
    //   int_0^umax dv f(v) [Q_v(u) - Q_v(max(0, u - (1-lambda) v))],
    //   Q_v(y) = int_0^y f(s)/(s+v) ds.
    // Its lower limit moves slowly with v, so the outer integrand stays smooth.
    std::vector<double> a_part(n, 0.0);
    std::vector<double> t_zero(n, 0.0);
    std::vector<double> head_v0(n, 0.0), head_v1(n, 0.0);
    std::vector<double> row(n), cum(n);

    for (std::size_t j = 0; j < n; ++j) {
        const double v = x[j];
        for (std::size_t k = 0; k < n; ++k) {
            const double d = x[k] + v;
            row[k] = d > 0.0 ? y[k] / d : 0.0;
        }
        cum[0] = head ? core::power_law_head(x[0], row[0], x[1], row[1]) : 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            cum[k] = cum[k - 1] + trapezoid(x[k - 1], row[k - 1], x[k], row[k]);
        }
        // T(s, 0) is symmetric in its two wealths: this row's total is T(v, 0).
        t_zero[j] = cum[n - 1];
        if (v == 0.0 || y[j] == 0.0) continue;

        CellWalker walker(grid);
        auto cum_at = [&](double q) {
            if (q <= x[0]) return q > 0.0 ? cum[0] * q / x[0] : 0.0;
            const std::size_t k = walker.cell(q);
            return cum[k] + trapezoid(x[k], row[k], q, lerp_value(x, row, k, q));
        };
        const double weight = node_weight(x, j, n - 1);
        const double shift = mu * v;
        for (std::size_t i = 0; i < n; ++i) {
            const double inner = cum[i] - cum_at(x[i] - shift);
            const double value = y[j] * inner;
            a_part[i] += weight * value;
            if (head && j == 0) head_v0[i] = value;
            if (head && j == 1) head_v1[i] = value;
        }
    }
    if (head) {
        for (std::size_t i = 0; i < n; ++i) {
            a_part[i] += core::power_law_head(x[0], head_v0[i], x[1], head_v1[i]);
        }
    }

    // Second part: int_u^{min(u/lambda, umax)} f(s) T(s, 0) ds from a running integral.
    std::vector<double> q(n), running(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) q[k] = y[k] * t_zero[k];
    for (std::size_t k = 1; k < n; ++k) {
        running[k] = running[k - 1] + trapezoid(x[k - 1], q[k - 1], x[k], q[k]);
    }
    const double umax = grid.u_max();
    CellWalker end_walker(grid);
    std::vector<double> gain(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double end = std::min(x[i] / lambda, umax);
        double upper;
        if (end >= umax) {
            upper = running[n - 1];
        } else {
            const std::size_t k = end_walker.cell(end);
            upper = running[k] + trapezoid(x[k], q[k], end, lerp_value(x, q, k, end));
        }
        gain[i] = (a_part[i] + (upper - running[i])) / mu;
    }
    return gain;
}

// --------------------------------------------------------------- angle model

namespace {

// Precomputed tail H(x) = (1/omega) int_x^umax f(v)/v dv plus power-law
// extensions of f and H below the first positive node.
class AngleKernel {
    static constexpr int kSubOctaves = 10;
    static constexpr int kSubPerOctave = 16;

public:
    AngleKernel(const GridPdf& f, double omega)
        : grid_(f.grid()), x_(f.grid().nodes()), y_(f.values()), omega_(omega)
    {
        const std::size_t n = x_.size();
        first_ = x_[0] > 0.0 ? 0 : 1;
        xp_ = x_[first_];
        fp_ = y_[first_];
        const double f_next = y_[first_ + 1];
        head_exponent_ = (fp_ > 0.0 && f_next > 0.0) ? std::log(f_next / fp_) / std::log(x_[first_ + 1] / xp_)
                                                     : std::numeric_limits<double>::quiet_NaN();
        integrand_.assign(n, 0.0);
        for (std::size_t k = first_; k < n; ++k) {
            integrand_[k] = y_[k] / (omega_ * x_[k]);
        }
        tail_.assign(n, 0.0);
        for (std::size_t k = n - 1; k-- > first_;) {
            tail_[k] = tail_[k + 1] + cell_integral(x_[k], integrand_[k], x_[k + 1], integrand_[k + 1], 0.0);
        }
        if (first_ == 1) {
            tail_[0] = std::numeric_limits<double>::infinity();
        }
    }

    double f_at(CellWalker& w, double v) const
    {
        if (v > x_.back()) return 0.0;
        if (v >= x_[0]) return v == x_[0] ? y_[0] : lerp_value(x_, y_, w.cell(v), v);
        return extended_f(v);
    }

    double h_at(CellWalker& w, double q) const
    {
        if (q >= x_.back()) return 0.0;
        if (q >= xp_) {
            const std::size_t k = w.cell(q);
            return tail_[k + 1] + trapezoid(q, lerp_value(x_, integrand_, k, q), x_[k + 1], integrand_[k + 1]);
        }
        return tail_[first_] + extended_tail(q);
    }

    // int_0^b F(x) dx over the positive nodes below b plus b itself. Below
    // the first positive node the abscissae continue geometrically for ten
    // octaves, and the remaining [0, x] gets a power-law head cell.
    template <class F>
    double integrate_from_origin(double b, F&& value) const
    {
        double first_x = 0.0, first_v = 0.0, second_x = 0.0, second_v = 0.0;
        double prev_x = 0.0, prev_v = 0.0;
        int count = 0;
        double body = 0.0;
        auto push = [&](double s, double v) {
            if (count > 0) body += cell_integral(prev_x, prev_v, s, v);
            if (count == 0) { first_x = s; first_v = v; }
            if (count == 1) { second_x = s; second_v = v; }
            ++count;
            prev_x = s;
            prev_v = v;
        };
        const double lowest = std::min(b, xp_);
        for (int j = kSubOctaves * kSubPerOctave; j > 0; --j) {
            const double s = lowest * std::exp2(-static_cast<double>(j) / kSubPerOctave);
            push(s, value(s));
        }
        for (std::size_t k = first_; k < x_.size() && x_[k] < b; ++k) {
            push(x_[k], value(x_[k]));
        }
        push(b, value(b));
        return body + core::power_law_head(first_x, first_v, second_x, second_v);
    }

    AngleGain at(double u) const
    {
        AngleGain g;
        if (u <= 0.0) return g;
        const double half = 0.5 * u;
        {
            CellWalker wf(grid_), wh(grid_);
            g.winner += integrate_from_origin(half, [&](double s) {
                return f_at(wf, s) * h_at(wh, (u - s) / omega_);
            });
        }
        {
            CellWalker wf(grid_), wh(grid_);
            g.winner += integrate_from_origin(half, [&](double v) {
                return f_at(wf, u - v) * h_at(wh, v / omega_);
            });
        }
        CellWalker wl(grid_);
        g.loser = h_at(wl, u);
        if (omega_ < 1.0) {
            CellWalker wu(grid_);
            g.loser -= h_at(wu, u / (1.0 - omega_));
        }
        return g;
    }

private:
    double extended_f(double v) const
    {
        if (std::isnan(head_exponent_)) return fp_;
        return fp_ * std::pow(v / xp_, head_exponent_);
    }

    // int_q^xp f_ext(v)/(omega v) dv for f_ext(v) = fp (v/xp)^p.
    double extended_tail(double q) const
    {
        if (!(fp_ > 0.0)) return 0.0;
        const double p = std::isnan(head_exponent_) ? 0.0 : head_exponent_;
        if (std::abs(p) < 1e-12) return fp_ / omega_ * std::log(xp_ / q);
        return fp_ / omega_ * (1.0 - std::pow(q / xp_, p)) / p;
    }

    const WealthGrid& grid_;
    std::span<const double> x_;
    std::span<const double> y_;
    double omega_;
    std::size_t first_ = 0;
    double xp_ = 0.0;
    double fp_ = 0.0;
    double head_exponent_ = 0.0;
    std::vector<double> integrand_;
    std::vector<double> tail_;
};

void check_angle(const models::ModelParams& params)
{
    if (params.kind != models::ModelKind::Angle) {
        throw UnsupportedModelError("gain_angle needs the angle model");
    }
    params.validate();
}

} // namespace

AngleGain gain_angle(const GridPdf& f, double u, const models::ModelParams& params)
{
    check_angle(params);
    if (u < 0.0) throw DomainError("gain_angle: negative wealth");
    return AngleKernel(f, params.omega).at(u);
}

std::vector<AngleGain> gain_angle(const GridPdf& f, const models::ModelParams& params)
{
    check_angle(params);
    const AngleKernel kernel(f, params.omega);
    const auto x = f.grid().nodes();
    std::vector<AngleGain> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k] = kernel.at(x[k]);
    }
    return out;
}

std::vector<double> gain_operator(const GridPdf& f, const models::ModelParams& params)
{
    switch (params.kind) {
    case models::ModelKind::PureRandom:
        return gain_pure(f);
    case models::ModelKind::Saving:
        return gain_saving(f, params);
    case models::ModelKind::Angle: {
        const auto g = gain_angle(f, params);
        std::vector<double> k(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            k[i] = 0.5 * (g[i].winner + g[i].loser);
        }
        return k;
    }
    }
    throw UnsupportedModelError("unknown model kind");
}

} // namespace kinex::kinetics
