#include "kinex/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kinex/errors.hpp"

namespace kinex::models {

std::string_view to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::PureRandom: return "pure";
    case ModelKind::Saving: return "saving";
    case ModelKind::Angle: return "angle";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name)
{
    if (name == "pure") return ModelKind::PureRandom;
    if (name == "saving") return ModelKind::Saving;
    if (name == "angle") return ModelKind::Angle;
    throw DomainError("model must be one of pure, saving, angle (got '" + std::string(name) + "')");
}

ModelParams ModelParams::pure(double mean_wealth)
{
    ModelParams p;
    p.kind = ModelKind::PureRandom;
    p.mean_wealth = mean_wealth;
    p.validate();
    return p;
}

ModelParams ModelParams::saving(double lambda, double mean_wealth)
{
    ModelParams p;
    p.kind = ModelKind::Saving;
    p.lambda = lambda;
    p.mean_wealth = mean_wealth;
    p.validate();
    return p;
}

ModelParams ModelParams::angle(double omega, double mean_wealth)
{
    ModelParams p;
    p.kind = ModelKind::Angle;
    p.omega = omega;
    p.mean_wealth = mean_wealth;
    p.validate();
    return p;
}

void ModelParams::validate() const
{
    if (!(mean_wealth > 0.0) || !std::isfinite(mean_wealth)) {
        throw DomainError("mean-wealth must be positive");
    }
    if (kind == ModelKind::Saving && !(lambda >= 0.0 && lambda < 1.0)) {
        throw DomainError("lambda must be in [0,1)");
    }
    if (kind == ModelKind::Angle && !(omega > 0.0 && omega <= 1.0)) {
        throw DomainError("omega must be in (0,1]");
    }
}

double ModelParams::parameter() const
{
    switch (kind) {
    case ModelKind::Saving: return lambda;
    case ModelKind::Angle: return omega;
    case ModelKind::PureRandom: break;
    }
    return 0.0;
}

GammaSpec GammaSpec::from_shape(double n, double mean_wealth)
{
    if (!(n > 0.0) || !(mean_wealth > 0.0)) {
        throw DomainError("Gamma shape and mean wealth must be positive");
    }
    GammaSpec s;
    s.n = n;
    s.mean_wealth = mean_wealth;
    s.a = std::exp(n * std::log(n / mean_wealth) - std::lgamma(n));
    return s;
}

namespace {

// Endpoints are accepted as limits of the open interval the draws come from.
void check_eps(double eps)
{
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw DomainError("eps must lie in (0,1)");
    }
}

} // namespace

WealthPair exchange_pure(double u_i, double u_j, double eps)
{
    check_eps(eps);
    const double total = u_i + u_j;
    const double first = eps * total;
    return {first, total - first};
}

WealthPair exchange_saving(double u_i, double u_j, double eps, const ModelParams& params)
{
    check_eps(eps);
    if (params.kind != ModelKind::Saving) throw UnsupportedModelError("exchange_saving needs the saving model");
    const double lambda = params.lambda;
    const double total = u_i + u_j;
    // lambda = 0 reproduces exchange_pure bit for bit: 0*u_i + (eps*1)*total.
    const double first = std::min(lambda * u_i + eps * (1.0 - lambda) * total, total);
    return {first, total - first};
}

WealthPair exchange_angle(double u_i, double u_j, double eps, const ModelParams& params)
{
    check_eps(eps);
    if (params.kind != ModelKind::Angle) throw UnsupportedModelError("exchange_angle needs the angle model");
    const double transfer = eps * params.omega * u_j;
    return {u_i + transfer, u_j - transfer};
}

WealthPair exchange(double u_i, double u_j, double eps, const ModelParams& params)
{
    switch (params.kind) {
    case ModelKind::PureRandom: return exchange_pure(u_i, u_j, eps);
    case ModelKind::Saving: return exchange_saving(u_i, u_j, eps, params);
    case ModelKind::Angle: return exchange_angle(u_i, u_j, eps, params);
    }
    throw UnsupportedModelError("unknown model kind");
}

double exponential_pdf(double u, double mean_wealth)
{
    if (u < 0.0) {
        throw DomainError("exponential_pdf: negative wealth");
    }
    const double beta = 1.0 / mean_wealth;
    return beta * std::exp(-beta * u);
}

double gamma_shape(const ModelParams& params)
{
    switch (params.kind) {
    case ModelKind::Saving:
        return (1.0 + 2.0 * params.lambda) / (1.0 - params.lambda);
    case ModelKind::Angle:
        return (3.0 - 2.0 * params.omega) / (2.0 * params.omega);
    case ModelKind::PureRandom:
        break;
    }
    throw UnsupportedModelError("gamma_shape: the pure model equilibrium is exponential");
}

GammaSpec gamma_spec(const ModelParams& params)
{
    return GammaSpec::from_shape(gamma_shape(params), params.mean_wealth);
}

double gamma_pdf(double u, const GammaSpec& spec)
{
    if (u < 0.0) {
        throw DomainError("gamma_pdf: negative wealth");
    }
    const double rate = spec.n / spec.mean_wealth;
    if (u == 0.0) {
        if (spec.n < 1.0) return std::numeric_limits<double>::infinity();
        return spec.n == 1.0 ? spec.a : 0.0;
    }
    return spec.a * std::exp((spec.n - 1.0) * std::log(u) - rate * u);
}

double gamma_residual(double u, const ModelParams& params)
{
    if (params.kind != ModelKind::Angle) {
        throw UnsupportedModelError("gamma_residual is defined for the angle model only");
    }
    params.validate();
    if (!(u > 0.0)) {
        throw DomainError("gamma_residual: u must be positive");
    }
    const double omega = params.omega;
    const double n = gamma_shape(params);
    const double rate = n / params.mean_wealth;
    const double log_a = n * std::log(rate) - std::lgamma(n);

    // At omega = 1 both the hypergeometric argument and 1/Gamma(2n-1) vanish,
    // and the exponential term decays to zero.
    double hyper_term = 0.0;
    double exp_term = 0.0;
    if (omega < 1.0) {
        // (n-1) Gamma(n-1) = Gamma(n) keeps n = 1 (omega = 3/4) regular.
        const double z = rate * (omega - 1.0) / omega * u;
        const ScaledValue m = hyp1f1_scaled(n, 2.0 * n - 1.0, z);
        const double log_prefactor = log_a + n * std::log(u) + 2.0 * std::lgamma(n) -
                                     n * std::log(omega) - std::lgamma(2.0 * n - 1.0);
        hyper_term = -m.mantissa * std::exp(log_prefactor + m.log_scale);

        const double x = rate * omega * u / (1.0 - omega);
        exp_term = -std::exp(-x - (n - 1.0) * std::log1p(-omega)) * (1.0 + x) / omega;
    }
    return hyper_term + exp_term + 1.0 / omega + 2.0 * (n - 1.0);
}

core::GridPdf exponential_on(const core::GridHandle& grid, double mean_wealth)
{
    return core::normalize(core::GridPdf::from_function(
        grid, [mean_wealth](double u) { return exponential_pdf(u, mean_wealth); }, mean_wealth));
}

core::GridPdf gamma_on(const core::GridHandle& grid, const GammaSpec& spec)
{
    if (spec.n < 1.0 && (*grid)[0] == 0.0) {
        throw DomainError("Gamma shape below 1 diverges at u = 0; use the log-head grid");
    }
    return core::normalize(core::GridPdf::from_function(
        grid, [&spec](double u) { return gamma_pdf(u, spec); }, spec.mean_wealth));
}

core::GridPdf reference_pdf(const core::GridHandle& grid, const ModelParams& params)
{
    if (params.kind == ModelKind::PureRandom) {
        return exponential_on(grid, params.mean_wealth);
    }
    return gamma_on(grid, gamma_spec(params));
}

} // namespace kinex::models
