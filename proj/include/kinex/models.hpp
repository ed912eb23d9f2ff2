#pragma once

// The three pairwise exchange rules, the analytic reference densities and the
// Gamma-exactness residual of the asymmetric model.

#include <string>
#include <string_view>

#include "kinex/core.hpp"

namespace kinex::models {

enum class ModelKind { PureRandom, Saving, Angle };

std::string_view to_string(ModelKind kind);
/// Accepts "pure", "saving", "angle"; throws DomainError otherwise.
ModelKind parse_model_kind(std::string_view name);

struct ModelParams {
    ModelKind kind = ModelKind::PureRandom;
    double lambda = 0.0;  // saving fraction, Saving only
    double omega = 1.0;   // exchange fraction, Angle only
    double mean_wealth = 1.0;

    static ModelParams pure(double mean_wealth = 1.0);
    static ModelParams saving(double lambda, double mean_wealth = 1.0);
    static ModelParams angle(double omega, double mean_wealth = 1.0);

    /// Throws DomainError naming the offending parameter.
    void validate() const;
    /// lambda for Saving, omega for Angle, 0 for PureRandom.
    double parameter() const;
};

struct GammaSpec {
    double n = 1.0;
    double a = 1.0;
    double mean_wealth = 1.0;

    /// Normalization a = (n/<u>)^n / Gamma(n).
    static GammaSpec from_shape(double n, double mean_wealth);
};

struct WealthPair {
    double first;
    double second;
};

WealthPair exchange_pure(double u_i, double u_j, double eps);
WealthPair exchange_saving(double u_i, double u_j, double eps, const ModelParams& params);
/// Agent j is the loser: it hands eps * omega of its wealth to agent i.
WealthPair exchange_angle(double u_i, double u_j, double eps, const ModelParams& params);
WealthPair exchange(double u_i, double u_j, double eps, const ModelParams& params);

double exponential_pdf(double u, double mean_wealth);

/// n(lambda) = (1 + 2 lambda)/(1 - lambda) and n(omega) = (3 - 2 omega)/(2 omega).
double gamma_shape(const ModelParams& params);
GammaSpec gamma_spec(const ModelParams& params);

/// a u^(n-1) exp(-n u/<u>). Returns +infinity at u = 0 when n < 1; callers
/// integrating such densities must use head-cell handling.
double gamma_pdf(double u, const GammaSpec& spec);

/// Kummer's confluent hypergeometric function M(a, b, z).
double hyp1f1(double a, double b, double z);

/// Scaled Kummer function: value = mantissa * exp(log_scale). Lets callers
/// combine M with tiny or huge prefactors without overflow.
struct ScaledValue {
    double mantissa;
    double log_scale;
    double value() const;
};
ScaledValue hyp1f1_scaled(double a, double b, double z);

/// 2u^2 (ln f)'' + 2(n-1) for the asymmetric model with the Gamma candidate
/// substituted into its steady-state equation. Identically zero when the
/// Gamma of shape n(omega) is the exact steady state.
double gamma_residual(double u, const ModelParams& params);

/// Equilibrium candidate on a grid: exponential for PureRandom, Gamma of
/// shape n(params) otherwise. Normalized.
core::GridPdf reference_pdf(const core::GridHandle& grid, const ModelParams& params);
core::GridPdf exponential_on(const core::GridHandle& grid, double mean_wealth);
/// Throws DomainError for n < 1 on a grid that contains u = 0.
core::GridPdf gamma_on(const core::GridHandle& grid, const GammaSpec& spec);

} // namespace kinex::models
