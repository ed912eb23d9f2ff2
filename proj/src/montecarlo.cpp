#include "kinex/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "kinex/errors.hpp"

namespace kinex::montecarlo {

namespace {

std::uint64_t splitmix64(std::uint64_t& x)
{
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k)
{
    return (x << k) | (x >> (64 - k));
}

} // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed)
{
    std::uint64_t x = seed;
    for (auto& s : state_) {
        s = splitmix64(x);
    }
}

RngStream RngStream::replica(std::uint64_t seed, std::uint64_t r)
{
    RngStream rng(seed);
    for (std::uint64_t k = 0; k < r; ++k) {
        rng.jump();
    }
    return rng;
}

std::uint64_t RngStream::next_u64()
{
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    ++position_;
    return result;
}

double RngStream::uniform01()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::open01()
{
    double x = uniform01();
    while (x == 0.0) {
        x = uniform01();
    }
    return x;
}

std::uint64_t RngStream::below(std::uint64_t n)
{
    // Lemire's multiply-and-reject.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

void RngStream::jump()
{
    static constexpr std::uint64_t kJump[] = {0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL,
                                              0xa9582618e03fc9aaULL, 0x39abdc4529b1661cULL};
    std::array<std::uint64_t, 4> acc{};
    for (std::uint64_t word : kJump) {
        for (int b = 0; b < 64; ++b) {
            if (word & (std::uint64_t{1} << b)) {
                for (int i = 0; i < 4; ++i) {
                    acc[i] ^= state_[i];
                }
            }
            next_u64();
            --position_;
        }
    }
    state_ = acc;
}

double Population::total() const
{
    // Neumaier summation.
    double sum = 0.0;
    double c = 0.0;
    for (double u : wealth) {
        const double t = sum + u;
        if (std::abs(sum) >= std::abs(u)) {
            c += (sum - t) + u;
        } else {
            c += (u - t) + sum;
        }
        sum = t;
    }
    return sum + c;
}

namespace {

void rescale_to_mean(std::vector<double>& w, double mean_wealth)
{
    Population tmp;
    tmp.wealth = w;
    const double mean = tmp.total() / static_cast<double>(w.size());
    if (!(mean > 0.0)) {
        throw DegenerateInputError("initial sample has zero total wealth");
    }
    const double scale = mean_wealth / mean;
    for (double& u : w) {
        u *= scale;
    }
}

// Inverse-CDF draw from a grid density, uniform within a cell.
double sample_grid_pdf(const core::GridPdf& pdf, std::span<const double> cdf, RngStream& rng)
{
    const double target = rng.uniform01() * cdf.back();
    const auto x = pdf.grid().nodes();
    if (target < cdf[0]) {
        return x[0] * (target / cdf[0]);
    }
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    const auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                                   static_cast<std::ptrdiff_t>(cdf.size() - 1)));
    const double lo = cdf[k - 1];
    const double hi = cdf[k];
    const double t = hi > lo ? (target - lo) / (hi - lo) : 0.5;
    return x[k - 1] + t * (x[k] - x[k - 1]);
}

} // namespace

Population init_population(std::size_t n_agents, const models::ModelParams& model,
                           const InitialCondition& initial, RngStream& rng)
{
    if (n_agents < 2) {
        throw DomainError("population needs at least 2 agents");
    }
    model.validate();
    Population pop;
    pop.model = model;
    pop.wealth.assign(n_agents, model.mean_wealth);
    switch (initial.kind) {
    case InitialKind::Delta:
        break;
    case InitialKind::Exponential:
        for (double& u : pop.wealth) {
            u = -model.mean_wealth * std::log1p(-rng.uniform01());
        }
        rescale_to_mean(pop.wealth, model.mean_wealth);
        break;
    case InitialKind::Custom: {
        if (!initial.custom) {
            throw ContractError("custom initial condition without a density");
        }
        const auto cdf = core::cumulative(initial.custom->grid(), initial.custom->values());
        if (!(cdf.back() > 0.0)) {
            throw DegenerateInputError("custom initial density integrates to zero");
        }
        for (double& u : pop.wealth) {
            u = sample_grid_pdf(*initial.custom, cdf, rng);
        }
        rescale_to_mean(pop.wealth, model.mean_wealth);
        break;
    }
    }
    return pop;
}

void apply_exchange(Population& pop, std::size_t i, std::size_t j, double eps)
{
    const auto out = models::exchange(pop.wealth[i], pop.wealth[j], eps, pop.model);
    pop.wealth[i] = out.first;
    pop.wealth[j] = out.second;
    ++pop.step_count;
}

void step(Population& pop, RngStream& rng)
{
    const std::uint64_t n = pop.wealth.size();
    const auto i = static_cast<std::size_t>(rng.below(n));
    auto j = static_cast<std::size_t>(rng.below(n));
    while (j == i) {
        j = static_cast<std::size_t>(rng.below(n));
    }
    apply_exchange(pop, i, j, rng.open01());
}

Population run(Population pop, std::uint64_t n_steps, RngStream& rng)
{
    for (std::uint64_t s = 0; s < n_steps; ++s) {
        step(pop, rng);
    }
    return pop;
}

WealthHistogram::WealthHistogram(std::vector<double> edges) : edges_(std::move(edges))
{
    if (edges_.size() < 2) {
        throw ContractError("histogram needs at least one bin");
    }
    for (std::size_t k = 1; k < edges_.size(); ++k) {
        if (!(edges_[k] > edges_[k - 1])) {
            throw ContractError("histogram edges must be increasing");
        }
    }
    counts_.assign(edges_.size() - 1, 0);
    const double w = (edges_.back() - edges_.front()) / static_cast<double>(counts_.size());
    uniform_ = true;
    for (std::size_t k = 1; k < edges_.size() && uniform_; ++k) {
        uniform_ = std::abs(edges_[k] - edges_[k - 1] - w) <= 1e-9 * w;
    }
    inv_width_ = 1.0 / w;
}

WealthHistogram WealthHistogram::uniform(double upper, std::size_t n_bins)
{
    if (n_bins == 0 || !(upper > 0.0)) {
        throw DomainError("histogram needs positive range and bin count");
    }
    std::vector<double> edges(n_bins + 1);
    for (std::size_t k = 0; k <= n_bins; ++k) {
        edges[k] = upper * static_cast<double>(k) / static_cast<double>(n_bins);
    }
    return WealthHistogram(std::move(edges));
}

WealthHistogram WealthHistogram::default_for(double mean_wealth)
{
    return uniform(10.0 * mean_wealth, 200);
}

WealthHistogram WealthHistogram::from_counts(std::vector<double> edges,
                                             std::vector<std::uint64_t> counts,
                                             std::uint64_t underflow, std::uint64_t overflow)
{
    WealthHistogram h(std::move(edges));
    if (counts.size() != h.counts_.size()) {
        throw ContractError("histogram counts do not match the bins");
    }
    h.counts_ = std::move(counts);
    h.underflow_ = underflow;
    h.overflow_ = overflow;
    h.samples_ = underflow + overflow;
    for (auto c : h.counts_) h.samples_ += c;
    return h;
}

void WealthHistogram::add(double u)
{
    ++samples_;
    if (u < edges_.front()) {
        ++underflow_;
        return;
    }
    if (u >= edges_.back()) {
        ++overflow_;
        return;
    }
    std::size_t b;
    if (uniform_) {
        b = std::min(static_cast<std::size_t>((u - edges_.front()) * inv_width_), counts_.size() - 1);
        while (b > 0 && u < edges_[b]) --b;
        while (b + 1 < counts_.size() && u >= edges_[b + 1]) ++b;
    } else {
        b = static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), u) - edges_.begin()) - 1;
    }
    ++counts_[b];
}

void WealthHistogram::add(const Population& pop)
{
    for (double u : pop.wealth) {
        add(u);
    }
}

void WealthHistogram::merge(const WealthHistogram& other)
{
    if (other.edges_ != edges_) {
        throw ContractError("cannot merge histograms with different edges");
    }
    for (std::size_t b = 0; b < counts_.size(); ++b) {
        counts_[b] += other.counts_[b];
    }
    overflow_ += other.overflow_;
    underflow_ += other.underflow_;
    samples_ += other.samples_;
}

std::vector<double> WealthHistogram::density() const
{
    std::vector<double> d(counts_.size(), 0.0);
    if (samples_ == 0) {
        return d;
    }
    for (std::size_t b = 0; b < counts_.size(); ++b) {
        d[b] = static_cast<double>(counts_[b]) / (static_cast<double>(samples_) * width(b));
    }
    return d;
}

core::GridPdf WealthHistogram::to_grid_pdf(const core::GridHandle& grid, double mean_wealth) const
{
    const auto d = density();
    std::vector<double> centers(counts_.size());
    for (std::size_t b = 0; b < centers.size(); ++b) {
        centers[b] = center(b);
    }
    std::vector<double> values(grid->size(), 0.0);
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double u = (*grid)[k];
        if (u >= edges_.back() || u < edges_.front()) {
            continue;
        }
        if (u <= centers.front()) {
            values[k] = d.front();
        } else if (u >= centers.back()) {
            values[k] = d.back();
        } else {
            const auto it = std::upper_bound(centers.begin(), centers.end(), u);
            const auto b = static_cast<std::size_t>(it - centers.begin()) - 1;
            const double t = (u - centers[b]) / (centers[b + 1] - centers[b]);
            values[k] = d[b] + t * (d[b + 1] - d[b]);
        }
    }
    return core::normalize(core::GridPdf(grid, std::move(values), mean_wealth));
}

WealthHistogram histogram(const Population& pop, std::span<const double> bin_edges)
{
    WealthHistogram h(std::vector<double>(bin_edges.begin(), bin_edges.end()));
    h.add(pop);
    return h;
}

double binned_l1(const WealthHistogram& h, const core::GridPdf& pdf)
{
    const auto cum = core::cumulative(pdf.grid(), pdf.values());
    const double mass = cum.back();
    return binned_l1(h, [&](double u) { return core::cdf_at(pdf, cum, u) / mass; });
}

namespace {

struct ReplicaOutput {
    WealthHistogram histogram;
    Population final_population;
    std::uint64_t samples = 0;
};

ReplicaOutput run_replica(const models::ModelParams& model, const EnsembleOptions& opts,
                          std::size_t r)
{
    RngStream rng = RngStream::replica(opts.seed, r);
    Population pop = init_population(opts.n_agents, model, opts.initial, rng);
    WealthHistogram h = opts.edges ? WealthHistogram(*opts.edges)
                                   : WealthHistogram::default_for(model.mean_wealth);
    const std::uint64_t n = opts.n_agents;
    const std::uint64_t burn_in = opts.burn_in.value_or(20 * n);
    const std::uint64_t every = std::max<std::uint64_t>(opts.sample_every.value_or(n), 1);

    std::uint64_t samples = 0;
    if (opts.n_steps < burn_in) {
        pop = run(std::move(pop), opts.n_steps, rng);
        h.add(pop);
        samples = 1;
    } else {
        pop = run(std::move(pop), burn_in, rng);
        h.add(pop);
        samples = 1;
        std::uint64_t t = burn_in;
        while (t + every <= opts.n_steps) {
            pop = run(std::move(pop), every, rng);
            t += every;
            h.add(pop);
            ++samples;
        }
        pop = run(std::move(pop), opts.n_steps - t, rng);
    }
    return {std::move(h), std::move(pop), samples};
}

} // namespace

EnsembleResult simulate_ensemble(const models::ModelParams& model, const EnsembleOptions& opts)
{
    if (opts.replicas == 0) {
        throw DomainError("replicas must be at least 1");
    }
    model.validate();
    std::vector<std::optional<ReplicaOutput>> outputs(opts.replicas);
    const unsigned jobs = std::max(1u, opts.jobs);
    std::vector<std::exception_ptr> errors(opts.replicas);

    // Static interleaved assignment; each worker writes only its own slots.
    auto worker = [&](unsigned w) {
        for (std::size_t r = w; r < opts.replicas; r += jobs) {
            try {
                outputs[r] = run_replica(model, opts, r);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < jobs; ++w) {
            threads.emplace_back(worker, w);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    EnsembleResult result{outputs[0]->histogram, outputs[0]->final_population,
                          outputs[0]->samples};
    for (std::size_t r = 1; r < opts.replicas; ++r) {
        result.histogram.merge(outputs[r]->histogram);
    }
    return result;
}

} // namespace kinex::montecarlo
