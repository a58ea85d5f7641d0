#include "shefk/hermite.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace shefk {

namespace {

const double kPiQuarterInv = std::pow(std::numbers::pi, -0.25);

// Below this exponent exp(-x^2/2) is still a normal double with plenty of
// headroom, so the plain recurrence is exact enough.
constexpr double kDirectExponentLimit = 600.0;
constexpr double kRescale = 1e150;
const double kLogRescale = std::log(kRescale);

}  // namespace

HermiteBasisSpec::HermiteBasisSpec(int k) : max_index(k) {
    if (k < 1) {
        throw std::domain_error("HermiteBasisSpec: max_index must be >= 1, got " + std::to_string(k));
    }
}

void QuadratureSpec::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw std::domain_error("QuadratureSpec: step must be positive");
    }
    if (!(upper > lower)) {
        throw std::domain_error("QuadratureSpec: empty window");
    }
}

std::size_t QuadratureSpec::nodes() const {
    return static_cast<std::size_t>(std::llround((upper - lower) / step)) + 1;
}

double hermite_polynomial_prob(int n, double z) {
    if (n < 0) {
        throw std::domain_error("hermite_polynomial_prob: negative order");
    }
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = z;
    for (int k = 1; k < n; ++k) {
        const double next = z * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

void hermite_functions(double x, std::span<double> out) {
    const std::size_t count = out.size();
    if (count == 0) return;

    const double half_sq = 0.5 * x * x;
    if (half_sq < kDirectExponentLimit) {
        double prev = 0.0;
        double cur = kPiQuarterInv * std::exp(-half_sq);
        out[0] = cur;
        for (std::size_t n = 1; n < count; ++n) {
            const double dn = static_cast<double>(n);
            const double next = x * std::sqrt(2.0 / dn) * cur - std::sqrt((dn - 1.0) / dn) * prev;
            prev = cur;
            cur = next;
            out[n] = cur;
        }
        return;
    }

    // Far tail: carry the Gaussian factor as a log-scale.
    double log_scale = -half_sq;
    double prev = 0.0;
    double cur = kPiQuarterInv;
    out[0] = cur * std::exp(log_scale);
    for (std::size_t n = 1; n < count; ++n) {
        const double dn = static_cast<double>(n);
        double next = x * std::sqrt(2.0 / dn) * cur - std::sqrt((dn - 1.0) / dn) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > kRescale) {
            cur /= kRescale;
            prev /= kRescale;
            log_scale += kLogRescale;
        }
        out[n] = cur * std::exp(log_scale);
    }
}

double hermite_function(int j, double x) {
    if (j < 1) {
        throw std::domain_error("hermite_function: index must be >= 1, got " + std::to_string(j));
    }
    std::vector<double> values(static_cast<std::size_t>(j));
    hermite_functions(x, values);
    return values.back();
}

std::vector<double> project_coefficients(const std::function<double(double)>& f,
                                         HermiteBasisSpec spec,
                                         const QuadratureSpec& quadrature) {
    quadrature.validate();
    const auto k = static_cast<std::size_t>(spec.max_index);
    const std::size_t n = quadrature.nodes();
    const double h = (quadrature.upper - quadrature.lower) / static_cast<double>(n - 1);

    std::vector<double> coeffs(k, 0.0);
    std::vector<double> basis(k);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = quadrature.lower + h * static_cast<double>(i);
        const double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        const double fy = f(y);
        if (fy == 0.0) continue;
        hermite_functions(y, basis);
        for (std::size_t j = 0; j < k; ++j) {
            coeffs[j] += w * fy * basis[j];
        }
    }
    return coeffs;
}

double reconstruct(std::span<const double> coeffs, double x) {
    std::vector<double> basis(coeffs.size());
    hermite_functions(x, basis);
    double sum = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) sum += coeffs[j] * basis[j];
    return sum;
}

}  // namespace shefk
