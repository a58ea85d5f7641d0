#pragma once

#include <functional>
#include <span>
#include <vector>

namespace shefk {

/// Truncation level K of the Hermite basis. Indices are 1-based: e_1 .. e_K.
struct HermiteBasisSpec {
    int max_index = 1;

    explicit HermiteBasisSpec(int k);
};

/// Composite trapezoid rule on [lower, upper] with spacing `step`.
struct QuadratureSpec {
    double lower = -30.0;
    double upper = 30.0;
    double step = 1e-3;

    void validate() const;
    std::size_t nodes() const;
};

/// Probabilists' Hermite polynomial He_n(z).
double hermite_polynomial_prob(int n, double z);

/// Orthonormal Hermite function e_j(x) = psi_{j-1}(x), j >= 1.
///
/// Evaluated with the normalized three-term recurrence
///   psi_0(x) = pi^{-1/4} exp(-x^2/2)
///   psi_n(x) = x sqrt(2/n) psi_{n-1}(x) - sqrt((n-1)/n) psi_{n-2}(x)
/// with a running exponent so the Gaussian factor cannot underflow before
/// the recurrence has grown the value back into range.
double hermite_function(int j, double x);

/// Fills out[k] = e_{k+1}(x) for k = 0 .. out.size()-1.
void hermite_functions(double x, std::span<double> out);

/// <f, e_j> for j = 1..K by composite trapezoid quadrature.
std::vector<double> project_coefficients(const std::function<double(double)>& f,
                                         HermiteBasisSpec spec,
                                         const QuadratureSpec& quadrature = {});

/// (A_K f)(x) = sum_j coeffs[j-1] e_j(x).
double reconstruct(std::span<const double> coeffs, double x);

}  // namespace shefk
