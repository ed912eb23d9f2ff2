#include <cmath>
#include <string>

#include "kinex/errors.hpp"
#include "kinex/models.hpp"

namespace kinex::models {

namespace {

constexpr int kMaxTerms = 100000;
constexpr double kRelativeStop = 1e-14;
// Rescaling threshold and its exact logarithm (2^600).
constexpr double kRescale = 0x1p600;
const double kLogRescale = 600.0 * std::log(2.0);

bool nonpositive_integer(double b)
{
    return b <= 0.0 && b == std::floor(b);
}

// Direct Kummer series sum_k (a)_k z^k / ((b)_k k!), rescaled on the fly so
// arguments up to a few thousand stay finite.
ScaledValue kummer_series(double a, double b, double z)
{
    double term = 1.0;
    double sum = 1.0;
    double log_scale = 0.0;
    for (int k = 0; k < kMaxTerms; ++k) {
        const double ratio = (a + k) / (b + k) * z / (k + 1.0);
        term *= ratio;
        sum += term;
        if (term == 0.0) {
            return {sum, log_scale};
        }
        if (std::abs(sum) > kRescale || std::abs(term) > kRescale) {
            sum /= kRescale;
            term /= kRescale;
            log_scale += kLogRescale;
        }
        // Past the peak of the terms and below the stop tolerance.
        if (std::abs(ratio) < 1.0 && k + 1.0 > std::abs(z) &&
            std::abs(term) <= kRelativeStop * std::abs(sum)) {
            return {sum, log_scale};
        }
    }
    throw NumericError("hyp1f1: series did not converge within " + std::to_string(kMaxTerms) +
                       " terms");
}

} // namespace

double ScaledValue::value() const
{
    return mantissa * std::exp(log_scale);
}

ScaledValue hyp1f1_scaled(double a, double b, double z)
{
    if (nonpositive_integer(b)) {
        throw DomainError("hyp1f1: b must not be a nonpositive integer");
    }
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(z)) {
        throw DomainError("hyp1f1: arguments must be finite");
    }
    if (z < 0.0) {
        // Kummer transformation M(a,b,z) = e^z M(b-a,b,-z) avoids the
        // alternating series.
        ScaledValue s = kummer_series(b - a, b, -z);
        s.log_scale += z;
        return s;
    }
    return kummer_series(a, b, z);
}

double hyp1f1(double a, double b, double z)
{
    return hyp1f1_scaled(a, b, z).value();
}

} // namespace kinex::models
