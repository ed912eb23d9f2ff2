#include <algorithm>
#include <cmath>

#include "kinex/errors.hpp"
#include "kinex/kinetics.hpp"

namespace kinex::kinetics {

namespace {

constexpr double kMaxClippedMass = 1e-3;

core::GridPdf on_same_grid(const core::GridPdf& like, std::vector<double> values)
{
    return core::GridPdf(like.grid_handle(), std::move(values), like.mean_wealth());
}

double sup_difference(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s = std::max(s, std::abs(a[k] - b[k]));
    }
    return s;
}

} // namespace

std::vector<double> evolution_rate(const EvolutionState& state)
{
    const auto f = state.pdf.values();
    std::vector<double> rate(f.size());
    if (state.model.kind == models::ModelKind::Angle) {
        const auto g = gain_angle(state.pdf, state.model);
        for (std::size_t k = 0; k < f.size(); ++k) {
            rate[k] = -2.0 * f[k] + g[k].winner + g[k].loser;
        }
    } else {
        const auto g = gain_operator(state.pdf, state.model);
        for (std::size_t k = 0; k < f.size(); ++k) {
            rate[k] = -2.0 * f[k] + 2.0 * g[k];
        }
    }
    return rate;
}

EvolutionState advance(const EvolutionState& state, double dt_steps)
{
    if (!(state.n_agents > 0.0)) throw DomainError("advance: agent count must be positive");
    if (!(dt_steps >= 0.0)) throw DomainError("advance: negative time step");
    if (dt_steps > 0.25 * state.n_agents) {
        throw DomainError("advance: time step above N/4 is unstable");
    }
    if (dt_steps == 0.0) return state;

    const auto rate = evolution_rate(state);
    const auto f = state.pdf.values();
    const double h = dt_steps / state.n_agents;
    std::vector<double> next(f.size());
    std::vector<double> negative(f.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double v = f[k] + h * rate[k];
        if (!std::isfinite(v)) throw NumericError("advance: non-finite density");
        next[k] = std::max(v, 0.0);
        negative[k] = std::max(-v, 0.0);
    }
    const double clipped = core::quadrature(state.pdf.grid(), negative);
    if (clipped > kMaxClippedMass) {
        throw NumericError("advance: clipped negative mass exceeds 1e-3");
    }
    EvolutionState out = state;
    out.pdf = core::normalize(on_same_grid(state.pdf, std::move(next)));
    out.time = state.time + dt_steps;
    out.clipped_mass = state.clipped_mass + clipped;
    return out;
}

std::pair<core::GridPdf, FixedPointReport> solve_steady(const models::ModelParams& model,
                                                        const core::GridPdf& seed, int max_iter,
                                                        double tol)
{
    model.validate();
    if (max_iter < 0) throw DomainError("solve_steady: negative iteration limit");
    if (!(tol > 0.0)) throw DomainError("solve_steady: tolerance must be positive");

    FixedPointReport report;
    core::GridPdf f = core::normalize(seed);
    for (int it = 0;; ++it) {
        const auto k = gain_operator(f, model);
        const double res = sup_difference(f.values(), k);
        if (!std::isfinite(res)) throw NumericError("solve_steady: non-finite residual");
        report.residuals.push_back(res);
        report.final_sup_residual = res;
        report.iterations = it;
        if (res <= tol) {
            report.converged = true;
            break;
        }
        if (it == max_iter) break;

        std::vector<double> next(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) next[i] = std::max(k[i], 0.0);
        auto candidate = core::normalize(on_same_grid(f, std::move(next)));
        if (report.damped) {
            std::vector<double> mix(k.size());
            for (std::size_t i = 0; i < k.size(); ++i) mix[i] = 0.5 * (f[i] + candidate[i]);
            candidate = core::normalize(on_same_grid(f, std::move(mix)));
        }
        report.step_distances.push_back(core::distance(candidate, f).l1);
        const auto& r = report.residuals;
        if (!report.damped && r.size() >= 3 && r[r.size() - 1] > r[r.size() - 2] &&
            r[r.size() - 2] > r[r.size() - 3]) {
            report.damped = true;
        }
        f = std::move(candidate);
    }
    return {std::move(f), std::move(report)};
}

core::GridHandle default_grid(const models::ModelParams& model)
{
    // Shapes up to 2 have a steep or infinite slope at the origin, which the
    // uniform trapezoid resolves poorly.
    if (model.kind != models::ModelKind::PureRandom && models::gamma_shape(model) <= 2.0) {
        return core::make_grid(core::WealthGrid::default_log_head(model.mean_wealth));
    }
    return core::make_grid(core::WealthGrid::default_uniform(model.mean_wealth));
}

core::GridPdf perturbed(const core::GridPdf& f_eq, double weight)
{
    if (!(weight > 0.0 && weight < 1.0)) throw DomainError("perturbed: weight must be in (0,1)");
    const double m1 = core::first_moment(f_eq);
    const double m2 = core::second_moment(f_eq);
    const double var = m2 - m1 * m1;
    if (!(m1 > 0.0 && var > 0.0)) throw DegenerateInputError("perturbed: degenerate density");
    const double shape = std::max(2.0, 2.0 * m1 * m1 / var);
    const auto g = models::gamma_on(f_eq.grid_handle(), models::GammaSpec::from_shape(shape, m1));
    std::vector<double> mix(f_eq.size());
    for (std::size_t k = 0; k < mix.size(); ++k) {
        mix[k] = (1.0 - weight) * f_eq[k] + weight * g[k];
    }
    return core::normalize(on_same_grid(f_eq, std::move(mix)));
}

RelaxationFit relaxation_time(const models::ModelParams& model, const core::GridPdf& f0,
                              const core::GridPdf& f_eq, double n_agents,
                              const RelaxationOptions& opts)
{
    model.validate();
    if (!(n_agents > 0.0)) throw DomainError("relaxation_time: agent count must be positive");
    if (!(opts.dt_fraction > 0.0 && opts.dt_fraction <= 0.25)) {
        throw DomainError("relaxation_time: dt fraction must be in (0, 0.25]");
    }
    if (!f0.same_grid(f_eq)) throw ContractError("relaxation_time: densities on different grids");

    const double dt = opts.dt_fraction * n_agents;
    const int steps = static_cast<int>(std::lround(opts.horizon_over_n / opts.dt_fraction));
    if (steps < 2) throw DomainError("relaxation_time: horizon too short");

    RelaxationFit fit;
    EvolutionState state{core::normalize(f0), model, 0.0, n_agents, 0.0};
    for (int s = 0; s <= steps; ++s) {
        if (s > 0) state = advance(state, dt);
        const double d = core::distance(state.pdf, f_eq).l1;
        if (d < 1e-10) {
            if (fit.distances.size() < 10) {
                throw DegenerateInputError("relaxation_time: initial density is already at equilibrium");
            }
            break;
        }
        fit.times.push_back(state.time);
        fit.distances.push_back(d);
    }

    const std::size_t m = fit.times.size();
    double st = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        st += fit.times[i];
        sy += std::log(fit.distances[i]);
    }
    const double tbar = st / static_cast<double>(m);
    const double ybar = sy / static_cast<double>(m);
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dt_i = fit.times[i] - tbar;
        stt += dt_i * dt_i;
        sty += dt_i * (std::log(fit.distances[i]) - ybar);
    }
    const double slope = sty / stt;
    if (!(slope < 0.0)) throw NumericError("relaxation_time: distance is not decaying");
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = std::log(fit.distances[i]) - (ybar + slope * (fit.times[i] - tbar));
        rss += e * e;
    }
    fit.tau = -1.0 / slope;
    fit.tau_over_n = fit.tau / n_agents;
    fit.rms_residual = std::sqrt(rss / static_cast<double>(m));
    fit.t_start = fit.times.front();
    fit.t_end = fit.times.back();
    return fit;
}

RelaxationFit relaxation_time(const models::ModelParams& model, const core::GridPdf& f0,
                              double n_agents, const RelaxationOptions& opts)
{
    const auto seed = models::reference_pdf(f0.grid_handle(), model);
    const auto [f_eq, report] = solve_steady(model, seed, opts.steady_max_iter, opts.steady_tol);
    return relaxation_time(model, f0, f_eq, n_agents, opts);
}

} // namespace kinex::kinetics
