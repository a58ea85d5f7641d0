#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shefk/hermite.hpp"
#include "shefk/initial_condition.hpp"
#include "shefk/paths.hpp"
#include "shefk/wick.hpp"

namespace shefk {

/// p_tau(y) = (2 pi tau)^{-1/2} exp(-y^2 / (2 tau)), tau > 0.
double heat_kernel(double tau, double y);

/// (P_t u0)(x). Piecewise Gauss-Legendre over x +- 12 sqrt(t), split at the
/// breakpoints of u0; t = 0 returns u0(x).
double heat_semigroup(const InitialCondition& u0, double t, double x);

/// Which of the two equivalent time parametrizations of the chaos kernel the
/// quadrature integrates. `backward` integrates from the evaluation time
/// down (p_{t-s_n}(x - x_n) first); `forward` starts the Brownian path at x
/// (p_{s_1}(y_n - x) first) and evaluates u0 at the far end.
enum class KernelOrientation { backward, forward };

struct KernelQuadratureOptions {
    double tolerance = 1e-10;            // n <= 2 (tanh-sinh)
    std::size_t mc_samples = 400000;     // n = 3
    std::uint64_t seed = 1;              // n = 3
};

struct KernelValue {
    double value = 0.0;
    double error = 0.0;  // quadrature error estimate, or one standard error for n = 3
};

/// f_n(t, x; x_1..x_n), the n-th Wiener chaos kernel of the solution, for
/// n = 1..3 (unsymmetrized; slot k holds x_k).
KernelValue chaos_kernel_quadrature(int n, double t, double x, std::span<const double> points,
                                    const InitialCondition& u0,
                                    KernelOrientation orientation = KernelOrientation::backward,
                                    const KernelQuadratureOptions& options = {});

/// Average of f_n over all permutations of the points.
KernelValue symmetrized_kernel(int n, double t, double x, std::span<const double> points,
                               const InitialCondition& u0, const KernelQuadratureOptions& options = {});

/// Hermite coefficients of the first-order kernel y -> f_1(t, x; y):
/// coeffs[j-1] = <f_1, e_j>. `error[j-1]` compares the step h and 2h rules.
struct KernelProjection {
    std::vector<double> coeffs;
    std::vector<double> error;
};

KernelProjection project_first_order_kernel(double t, double x, int k, const InitialCondition& u0,
                                            double step = 0.01, double half_width = 12.0);

/// Second-order chaos coefficients x_alpha, |alpha| = 2, support <= k, from
/// the quadrature kernel f_2 on a tensor trapezoid grid:
///   x_alpha = (2 / alpha!) <f_2, sym(e^{(x) alpha})>.
struct SecondOrderProjection {
    ChaosExpansion coeffs;
    ChaosExpansion error;
};

SecondOrderProjection project_second_order_kernel(double t, double x, int k, const InitialCondition& u0,
                                                  double step = 0.1, double half_width = 6.0);

using CoefficientMap = std::map<MultiIndex, double, GradedLexLess>;

/// Chaos coefficients of u^K_{t,x} estimated over Brownian paths:
///   x_alpha = E^B[u0(B_t^x) prod_j c_j^{alpha_j} / alpha_j!].
struct KernelCoefficients {
    double t = 0.0;
    double x = 0.0;
    int k = 0;
    int n = 0;
    ChaosExpansion x_alpha;
    CoefficientMap std_errors;
    std::size_t n_paths = 0;
    /// sqrt(E^B[u0(B_t)^2 (e^s - sum_{m<=N} s^m/m!)]), s = sum_j c_j^2: an upper
    /// bound on the L^2(P^W) norm of what truncating at degree N drops.
    double truncation_tail = 0.0;
};

KernelCoefficients chaos_coefficients_mc(double t, double x, int k, int n, const InitialCondition& u0,
                                         const PathConfig& paths);

/// JSON sidecar with (t, x, K, N, path count, standard errors).
std::string kernel_sidecar_json(const KernelCoefficients& kc);

}  // namespace shefk
