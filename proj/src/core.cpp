#include "kinex/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinex/errors.hpp"

namespace kinex::core {

namespace {

constexpr double kUniformTolerance = 1e-6;

// Exponent of the local power law through two positive samples; NaN when
// either sample is not positive.
double fitted_exponent(double x0, double y0, double x1, double y1)
{
    if (!(y0 > 0.0) || !(y1 > 0.0) || !(x0 > 0.0)) {
        return std::nan("");
    }
    return std::log(y1 / y0) / std::log(x1 / x0);
}

} // namespace

WealthGrid::WealthGrid(std::vector<double> nodes, Spacing spacing)
    : nodes_(std::move(nodes)), spacing_(spacing)
{
    if (spacing_ == Spacing::Uniform) {
        step_ = (nodes_.back() - nodes_.front()) / static_cast<double>(nodes_.size() - 1);
    }
}

WealthGrid WealthGrid::uniform(double u_max, std::size_t n_nodes)
{
    if (n_nodes < 3) {
        throw DomainError("uniform grid needs at least 3 nodes");
    }
    if (!(u_max > 0.0)) {
        throw DomainError("grid u_max must be positive");
    }
    std::vector<double> nodes(n_nodes);
    const double h = u_max / static_cast<double>(n_nodes - 1);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        nodes[k] = h * static_cast<double>(k);
    }
    nodes.back() = u_max;
    return WealthGrid(std::move(nodes), Spacing::Uniform);
}

WealthGrid WealthGrid::log_head(double first_node, double linear_step, double u_max,
                                int nodes_per_octave)
{
    if (!(first_node > 0.0) || !(linear_step > 0.0) || !(u_max > first_node) ||
        nodes_per_octave < 1) {
        throw DomainError("invalid log-head grid parameters");
    }
    const double ratio = std::exp2(1.0 / nodes_per_octave);
    std::vector<double> nodes;
    double x = first_node;
    while (x * (ratio - 1.0) < linear_step && x < u_max) {
        nodes.push_back(x);
        x *= ratio;
    }
    const double start = nodes.empty() ? first_node : nodes.back();
    if (nodes.empty()) {
        nodes.push_back(first_node);
    }
    const auto steps = static_cast<std::size_t>(std::ceil((u_max - start) / linear_step));
    const double h = (u_max - start) / static_cast<double>(std::max<std::size_t>(steps, 1));
    for (std::size_t k = 1; k <= steps; ++k) {
        nodes.push_back(start + h * static_cast<double>(k));
    }
    nodes.back() = u_max;
    return WealthGrid(std::move(nodes), Spacing::LogHead);
}

WealthGrid WealthGrid::from_nodes(std::vector<double> nodes)
{
    if (nodes.size() < 3) {
        throw ContractError("grid needs at least 3 nodes");
    }
    if (nodes.front() < 0.0) {
        throw ContractError("grid nodes must be nonnegative");
    }
    for (std::size_t k = 1; k < nodes.size(); ++k) {
        if (!(nodes[k] > nodes[k - 1])) {
            throw ContractError("grid nodes must be strictly increasing (index " +
                                std::to_string(k) + ")");
        }
    }
    const double h = (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
    bool uniform = true;
    for (std::size_t k = 1; k < nodes.size() && uniform; ++k) {
        uniform = std::abs((nodes[k] - nodes[k - 1]) - h) <= kUniformTolerance * h;
    }
    if (!uniform && nodes.front() == 0.0) {
        throw ContractError("a node at u = 0 is only allowed on a uniform grid");
    }
    return WealthGrid(std::move(nodes), uniform ? Spacing::Uniform : Spacing::LogHead);
}

WealthGrid WealthGrid::default_uniform(double mean_wealth)
{
    return uniform(40.0 * mean_wealth, 4001);
}

WealthGrid WealthGrid::default_log_head(double mean_wealth)
{
    return log_head(1e-4 * mean_wealth, 0.01 * mean_wealth, 40.0 * mean_wealth, 64);
}

std::size_t WealthGrid::cell_of(double u) const
{
    const std::size_t last = nodes_.size() - 2;
    if (u <= nodes_.front()) {
        return 0;
    }
    if (u >= nodes_.back()) {
        return last;
    }
    std::size_t k;
    if (spacing_ == Spacing::Uniform) {
        k = static_cast<std::size_t>((u - nodes_.front()) / step_);
        k = std::min(k, last);
        while (k > 0 && nodes_[k] > u) {
            --k;
        }
        while (k < last && nodes_[k + 1] <= u) {
            ++k;
        }
    } else {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), u);
        k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
        k = std::min(k, last);
    }
    return k;
}

GridHandle make_grid(WealthGrid grid)
{
    return std::make_shared<const WealthGrid>(std::move(grid));
}

GridPdf::GridPdf(GridHandle grid, std::vector<double> values, double mean_wealth)
    : grid_(std::move(grid)), values_(std::move(values)), mean_wealth_(mean_wealth)
{
    if (!grid_) {
        throw ContractError("GridPdf needs a grid");
    }
    if (values_.size() != grid_->size()) {
        throw ContractError("GridPdf has " + std::to_string(values_.size()) +
                            " values for a grid of " + std::to_string(grid_->size()) + " nodes");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k]) || values_[k] < 0.0) {
            throw DomainError("density must be finite and nonnegative (node " +
                              std::to_string(k) + ")");
        }
    }
    if (!(mean_wealth_ > 0.0)) {
        throw DomainError("mean wealth must be positive");
    }
}

GridPdf GridPdf::from_function(GridHandle grid, const std::function<double(double)>& f,
                               double mean_wealth)
{
    std::vector<double> values(grid->size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] = f((*grid)[k]);
    }
    return GridPdf(std::move(grid), std::move(values), mean_wealth);
}

bool GridPdf::same_grid(const GridPdf& other) const
{
    return grid_ == other.grid_ || *grid_ == *other.grid_;
}

double power_law_head(double x0, double y0, double x1, double y1)
{
    const double p = fitted_exponent(x0, y0, x1, y1);
    if (std::isnan(p) || p <= -1.0 + 1e-6) {
        return x0 * y0;
    }
    return x0 * y0 / (p + 1.0);
}

double quadrature(const WealthGrid& grid, std::span<const double> integrand)
{
    if (integrand.size() != grid.size()) {
        throw ContractError("quadrature: integrand length does not match the grid");
    }
    const auto x = grid.nodes();
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        sum += 0.5 * (x[k + 1] - x[k]) * (integrand[k] + integrand[k + 1]);
    }
    if (grid.has_head_cell()) {
        sum += power_law_head(x[0], integrand[0], x[1], integrand[1]);
    }
    return sum;
}

double quadrature(const GridPdf& pdf, std::span<const double> integrand)
{
    return quadrature(pdf.grid(), integrand);
}

double total_mass(const GridPdf& pdf)
{
    return quadrature(pdf.grid(), pdf.values());
}

namespace {

double weighted_moment(const GridPdf& pdf, int power)
{
    const auto x = pdf.grid().nodes();
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        g[k] = std::pow(x[k], power) * pdf[k];
    }
    return quadrature(pdf.grid(), g);
}

} // namespace

double first_moment(const GridPdf& pdf) { return weighted_moment(pdf, 1); }
double second_moment(const GridPdf& pdf) { return weighted_moment(pdf, 2); }

std::vector<double> cumulative(const WealthGrid& grid, std::span<const double> integrand)
{
    if (integrand.size() != grid.size()) {
        throw ContractError("cumulative: integrand length does not match the grid");
    }
    const auto x = grid.nodes();
    std::vector<double> out(x.size());
    out[0] = grid.has_head_cell() ? power_law_head(x[0], integrand[0], x[1], integrand[1]) : 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) {
        out[k] = out[k - 1] + 0.5 * (x[k] - x[k - 1]) * (integrand[k] + integrand[k - 1]);
    }
    return out;
}

double cdf_at(const GridPdf& pdf, std::span<const double> cumulative_values, double u)
{
    const auto& grid = pdf.grid();
    const auto x = grid.nodes();
    if (u <= 0.0) {
        return 0.0;
    }
    if (u >= grid.u_max()) {
        return cumulative_values.back();
    }
    if (u < x[0]) {
        // Head cell: the fitted power law integrates to (u/x0)^(p+1) of the head mass.
        const double p = fitted_exponent(x[0], pdf[0], x[1], pdf[1]);
        const double e = (std::isnan(p) || p <= -1.0 + 1e-6) ? 1.0 : p + 1.0;
        return cumulative_values[0] * std::pow(u / x[0], e);
    }
    const std::size_t k = grid.cell_of(u);
    const double t = u - x[k];
    const double slope = (pdf[k + 1] - pdf[k]) / (x[k + 1] - x[k]);
    return cumulative_values[k] + t * (pdf[k] + 0.5 * slope * t);
}

double interpolate(const WealthGrid& grid, std::span<const double> values, double u)
{
    if (u < 0.0) {
        throw DomainError("interpolate: negative wealth");
    }
    const auto x = grid.nodes();
    if (u > grid.u_max()) {
        return 0.0;
    }
    if (u <= x[0]) {
        return values[0];
    }
    const std::size_t k = grid.cell_of(u);
    const double t = (u - x[k]) / (x[k + 1] - x[k]);
    return values[k] + t * (values[k + 1] - values[k]);
}

double interpolate(const GridPdf& pdf, double u)
{
    return interpolate(pdf.grid(), pdf.values(), u);
}

GridPdf normalize(const GridPdf& pdf)
{
    const double mass = total_mass(pdf);
    if (!(mass > 0.0)) {
        throw DegenerateInputError("normalize: density integrates to zero");
    }
    std::vector<double> values(pdf.values().begin(), pdf.values().end());
    for (double& v : values) {
        v /= mass;
    }
    return GridPdf(pdf.grid_handle(), std::move(values), pdf.mean_wealth());
}

PdfDistance distance(const GridPdf& a, const GridPdf& b)
{
    if (!a.same_grid(b)) {
        throw ContractError("distance: densities live on different grids");
    }
    std::vector<double> diff(a.size());
    PdfDistance d;
    for (std::size_t k = 0; k < diff.size(); ++k) {
        diff[k] = std::abs(a[k] - b[k]);
        d.sup = std::max(d.sup, diff[k]);
    }
    d.l1 = quadrature(a.grid(), diff);
    return d;
}

} // namespace kinex::core
