#pragma once

// Agent-based exchange simulation: N agents, uniformly chosen ordered pairs,
// one exchange per step, and histogram estimates of the wealth density.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kinex/core.hpp"
#include "kinex/models.hpp"

namespace kinex::montecarlo {

/// xoshiro256** seeded through splitmix64. The draw sequence for a given
/// seed is part of the file-format contract and must never change.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    /// Stream for replica r of a run: the base stream advanced by r jumps of 2^128.
    static RngStream replica(std::uint64_t seed, std::uint64_t r);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform01();
    /// Uniform on (0, 1): exact zeros are redrawn.
    double open01();
    /// Unbiased uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    void jump();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return position_; }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_;
    std::uint64_t position_ = 0;
};

struct Population {
    std::vector<double> wealth;
    models::ModelParams model;
    std::uint64_t step_count = 0;

    std::size_t size() const { return wealth.size(); }
    /// Compensated sum of all wealths.
    double total() const;
};

enum class InitialKind { Delta, Exponential, Custom };

struct InitialCondition {
    InitialKind kind = InitialKind::Delta;
    std::optional<core::GridPdf> custom;

    static InitialCondition delta() { return {}; }
    static InitialCondition exponential() { return {InitialKind::Exponential, std::nullopt}; }
    static InitialCondition from_pdf(core::GridPdf pdf) { return {InitialKind::Custom, std::move(pdf)}; }
};

Population init_population(std::size_t n_agents, const models::ModelParams& model,
                           const InitialCondition& initial, RngStream& rng);

/// Applies the model's exchange to agents (i, j); i is the winner in the
/// asymmetric model. Counts as one step.
void apply_exchange(Population& pop, std::size_t i, std::size_t j, double eps);

/// One collision: distinct ordered pair by rejection, eps on (0,1), exchange.
void step(Population& pop, RngStream& rng);

Population run(Population pop, std::uint64_t n_steps, RngStream& rng);

/// Occupancy counts over increasing bin edges. Wealth at or above the last
/// edge lands in the overflow counter, below the first edge in underflow.
class WealthHistogram {
public:
    explicit WealthHistogram(std::vector<double> edges);

    /// n_bins uniform bins on [0, upper].
    static WealthHistogram uniform(double upper, std::size_t n_bins);
    /// 200 bins on [0, 10 <u>].
    static WealthHistogram default_for(double mean_wealth);
    /// Rebuilds a histogram from stored counts.
    static WealthHistogram from_counts(std::vector<double> edges, std::vector<std::uint64_t> counts,
                                       std::uint64_t underflow, std::uint64_t overflow);

    void add(double u);
    void add(const Population& pop);
    /// Edges must match exactly.
    void merge(const WealthHistogram& other);

    std::span<const double> edges() const { return edges_; }
    std::span<const std::uint64_t> counts() const { return counts_; }
    std::size_t n_bins() const { return counts_.size(); }
    std::uint64_t overflow() const { return overflow_; }
    std::uint64_t underflow() const { return underflow_; }
    /// In-range counts plus overflow and underflow.
    std::uint64_t samples() const { return samples_; }

    double center(std::size_t b) const { return 0.5 * (edges_[b] + edges_[b + 1]); }
    double width(std::size_t b) const { return edges_[b + 1] - edges_[b]; }
    /// counts / (samples * width).
    std::vector<double> density() const;

    /// Bin-center densities interpolated linearly onto the grid, zero above
    /// the last edge, then normalized.
    core::GridPdf to_grid_pdf(const core::GridHandle& grid, double mean_wealth) const;

private:
    std::vector<double> edges_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t overflow_ = 0;
    std::uint64_t underflow_ = 0;
    std::uint64_t samples_ = 0;
    bool uniform_ = false;
    double inv_width_ = 0.0;
};

WealthHistogram histogram(const Population& pop, std::span<const double> bin_edges);

/// L1 distance between the empirical bin probabilities (overflow and
/// underflow included as extra bins) and the probabilities implied by a CDF.
template <class Cdf>
    requires std::invocable<Cdf&, double>
double binned_l1(const WealthHistogram& h, Cdf&& cdf)
{
    const double total = static_cast<double>(h.samples());
    const auto edges = h.edges();
    const auto counts = h.counts();
    double l1 = std::abs(static_cast<double>(h.underflow()) / total - cdf(edges.front()));
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const double p = cdf(edges[b + 1]) - cdf(edges[b]);
        l1 += std::abs(static_cast<double>(counts[b]) / total - p);
    }
    l1 += std::abs(static_cast<double>(h.overflow()) / total - (1.0 - cdf(edges.back())));
    return l1;
}

/// Binned L1 against a grid density (CDF from its cumulative quadrature,
/// rescaled to unit mass).
double binned_l1(const WealthHistogram& h, const core::GridPdf& pdf);

struct EnsembleOptions {
    std::size_t n_agents = 10000;
    std::uint64_t n_steps = 10000000;
    std::size_t replicas = 1;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    /// Steps before the first histogram sample; default 20 N.
    std::optional<std::uint64_t> burn_in;
    /// Steps between samples; default N.
    std::optional<std::uint64_t> sample_every;
    std::optional<std::vector<double>> edges;
    InitialCondition initial;
};

struct EnsembleResult {
    WealthHistogram histogram;
    /// Final population of replica 0.
    Population first_replica;
    std::uint64_t samples_per_replica = 0;
};

/// Runs independent replicas (derived streams) and merges their histograms
/// in replica order. Samples at burn_in + k * sample_every <= n_steps; a run
/// shorter than the burn-in samples its final state once.
EnsembleResult simulate_ensemble(const models::ModelParams& model, const EnsembleOptions& opts);

} // namespace kinex::montecarlo
