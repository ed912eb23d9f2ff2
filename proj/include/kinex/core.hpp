#pragma once

// Wealth grids, densities sampled on them, and the quadrature/interpolation
// primitives every other module builds on.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace kinex::core {

enum class Spacing {
    Uniform,   // equal steps; may start at u = 0
    LogHead    // geometric nodes from a positive first node, then equal steps
};

/// Ordered wealth nodes covering [0, u_max].
///
/// When the first node is positive the interval [0, nodes[0]] is a "head
/// cell": integrals over it are evaluated assuming a local power law through
/// the first two nodes, which keeps u^(n-1) singularities with n < 1 from
/// being underestimated.
class WealthGrid {
public:
    static WealthGrid uniform(double u_max, std::size_t n_nodes);
    static WealthGrid log_head(double first_node, double linear_step, double u_max,
                               int nodes_per_octave);
    /// Classifies the spacing; throws ContractError on unordered input or a
    /// zero first node on a non-uniform grid.
    static WealthGrid from_nodes(std::vector<double> nodes);

    /// 4001 nodes on [0, 40 <u>].
    static WealthGrid default_uniform(double mean_wealth = 1.0);
    /// First node 1e-4 <u>, 64 nodes per octave until the geometric step
    /// reaches 0.01 <u>, then linear to 40 <u>.
    static WealthGrid default_log_head(double mean_wealth = 1.0);

    std::span<const double> nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    double operator[](std::size_t k) const { return nodes_[k]; }
    double u_max() const { return nodes_.back(); }
    Spacing spacing() const { return spacing_; }
    bool has_head_cell() const { return nodes_.front() > 0.0; }

    /// Largest k with nodes[k] <= u, clamped to [0, size-2].
    std::size_t cell_of(double u) const;

    bool operator==(const WealthGrid& other) const { return nodes_ == other.nodes_; }

private:
    WealthGrid(std::vector<double> nodes, Spacing spacing);

    std::vector<double> nodes_;
    Spacing spacing_;
    double step_ = 0.0;  // uniform only
};

using GridHandle = std::shared_ptr<const WealthGrid>;

GridHandle make_grid(WealthGrid grid);

/// Probability density sampled on a wealth grid. Immutable after construction.
class GridPdf {
public:
    GridPdf(GridHandle grid, std::vector<double> values, double mean_wealth);

    static GridPdf from_function(GridHandle grid, const std::function<double(double)>& f,
                                 double mean_wealth);

    const WealthGrid& grid() const { return *grid_; }
    const GridHandle& grid_handle() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    std::size_t size() const { return values_.size(); }
    double mean_wealth() const { return mean_wealth_; }

    /// Same node values on a different grid handle is not the same pdf.
    bool same_grid(const GridPdf& other) const;

private:
    GridHandle grid_;
    std::vector<double> values_;
    double mean_wealth_;
};

struct PdfDistance {
    double l1 = 0.0;
    double sup = 0.0;
};

// Power-law mass of [0, x0] through (x0, y0), (x1, y1); falls back to the
// rectangle x0 * y0 when the fitted exponent is not integrable or the values
// are not both positive.
double power_law_head(double x0, double y0, double x1, double y1);

/// Composite trapezoid over the nodes plus the head cell, if any.
double quadrature(const WealthGrid& grid, std::span<const double> integrand);
double quadrature(const GridPdf& pdf, std::span<const double> integrand);

double total_mass(const GridPdf& pdf);
double first_moment(const GridPdf& pdf);
double second_moment(const GridPdf& pdf);

/// Cumulative integral from 0 to each node (head cell included).
std::vector<double> cumulative(const WealthGrid& grid, std::span<const double> integrand);
/// CDF of the pdf at an arbitrary u, linear within a cell.
double cdf_at(const GridPdf& pdf, std::span<const double> cumulative_values, double u);

double interpolate(const GridPdf& pdf, double u);
/// Linear interpolation of arbitrary node values with the same conventions.
double interpolate(const WealthGrid& grid, std::span<const double> values, double u);

GridPdf normalize(const GridPdf& pdf);

PdfDistance distance(const GridPdf& a, const GridPdf& b);

} // namespace kinex::core
