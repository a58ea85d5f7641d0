#include "shefk/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numbers>

#include "shefk/hermite.hpp"
#include "shefk/kernels.hpp"
#include "shefk/paths.hpp"
#include "shefk/pde.hpp"
#include "shefk/rng.hpp"
#include "shefk/solver.hpp"
#include "shefk/wick.hpp"

namespace shefk {

namespace {

struct Check {
    const char* name;
    double tolerance;
    std::function<double(const ValidationOptions&)> deviation;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double hermite_orthonormality(const ValidationOptions& o) {
    const int k = o.quick ? 10 : 20;
    QuadratureSpec quad;
    const std::size_t n = quad.nodes();
    std::vector<double> gram(static_cast<std::size_t>(k * k), 0.0), e(static_cast<std::size_t>(k));
    for (std::size_t m = 0; m < n; ++m) {
        const double x = quad.lower + quad.step * static_cast<double>(m);
        const double w = (m == 0 || m + 1 == n ? 0.5 : 1.0) * quad.step;
        hermite_functions(x, e);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) gram[static_cast<std::size_t>(i * k + j)] += w * e[i] * e[j];
        }
    }
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            worst = std::max(worst, std::abs(gram[static_cast<std::size_t>(i * k + j)] - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

// e_{n+1}(x) = (2^n n! sqrt(pi))^{-1/2} 2^{n/2} He_n(sqrt(2) x) exp(-x^2/2)
double hermite_polynomial_link(const ValidationOptions&) {
    double worst = 0.0;
    for (int n = 0; n < 15; ++n) {
        for (double x : {-2.5, -0.7, 0.0, 0.3, 1.9}) {
            const double norm = 1.0 / std::sqrt(std::tgamma(n + 1.0) * std::sqrt(std::numbers::pi));
            const double ref = norm * hermite_polynomial_prob(n, std::numbers::sqrt2 * x) * std::exp(-0.5 * x * x);
            const double got = hermite_function(n + 1, x);
            worst = std::max(worst, std::abs(got - ref) / std::max(std::abs(ref), 1e-3));
        }
    }
    return worst;
}

double parseval_local_time(const ValidationOptions& o) {
    const std::size_t n = o.quick ? 10 : 40;
    const TimeGrid grid(1.0, 1000);
    BinSpec bins;
    std::vector<double> gaps;
    for (std::size_t p = 0; p < n; ++p) {
        RngStream stream(o.seed, StreamRole::brownian, p, 900);
        const BrownianPath path = sample_path(0.0, grid, stream);
        const AlphaEstimates a = alpha(path, 200, bins);
        gaps.push_back(std::abs(a.parseval - a.histogram) / a.histogram);
    }
    return median(gaps);
}

double wick_exponential_product(const ValidationOptions&) {
    const std::vector<double> c{0.3, -0.2, 0.1}, d{-0.1, 0.25, 0.05};
    std::vector<double> s(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) s[j] = c[j] + d[j];
    const int n = 5;
    const ChaosExpansion prod = wick_product(wick_exponential(c, n), wick_exponential(d, n));
    const ChaosExpansion direct = wick_exponential(s, n);
    double worst = 0.0;
    for (const auto& [alpha, v] : direct.terms()) worst = std::max(worst, std::abs(prod.coefficient(alpha) - v));
    return worst;
}

double wick_exponential_eval(const ValidationOptions& o) {
    const std::vector<double> c{0.4, -0.3, 0.2, 0.1};
    const ChaosExpansion x = wick_exponential(c, 24);
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
        const auto z = NoiseRealization::sample(4, o.seed, 700 + draw);
        double dot = 0.0, s = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            dot += c[j] * z.z[j];
            s += c[j] * c[j];
        }
        const double exact = std::exp(dot - 0.5 * s);
        worst = std::max(worst, std::abs(chaos_eval(x, z.z) - exact) / exact);
    }
    return worst;
}

// fraction of conditioning points outside 3 SE
double second_quantization_projection(const ValidationOptions& o) {
    ChaosExpansion x(4, 3);
    x.set(MultiIndex{}, 0.5);
    x.set(MultiIndex{1}, 1.0);
    x.set(MultiIndex{0, 0, 1}, -0.7);
    x.set(MultiIndex{1, 1}, 0.4);
    x.set(MultiIndex{0, 1, 0, 1}, 0.8);
    x.set(MultiIndex{2, 0, 1}, -0.3);
    const int kp = 2;
    const ChaosExpansion proj = second_quantization(x, kp);
    const std::size_t points = o.quick ? 10 : 40;
    std::size_t misses = 0;
    for (std::size_t i = 0; i < points; ++i) {
        const auto zc = NoiseRealization::sample(kp, o.seed, 800 + i);
        const auto est = conditional_expectation_mc([&](std::span<const double> z) { return chaos_eval(x, z); },
                                                    zc.z, 4, o.quick ? 4000 : 20000, o.seed, i);
        if (std::abs(est.value - chaos_eval(proj, zc.z)) > 3.0 * est.std_error) ++misses;
    }
    return static_cast<double>(misses) / static_cast<double>(points);
}

double fk_degenerate(const ValidationOptions& o) {
    SolverConfig cfg;
    cfg.k = 3;
    cfg.n_paths = 64;
    cfg.dt = 1e-2;
    cfg.seed = o.seed;
    cfg.x = 0.4;
    const std::vector<double> z{0.5, -1.0, 0.2};
    cfg.t = 0.0;
    cfg.u0 = InitialCondition::gauss_bump();
    double worst = std::abs(solve_fk_truncated(cfg, z).value - cfg.u0(cfg.x));
    cfg.t = 1.0;
    cfg.u0 = InitialCondition::zero();
    worst = std::max(worst, std::abs(solve_fk_truncated(cfg, z).value));
    return worst;
}

double substitution_identity(const ValidationOptions& o) {
    SolverConfig cfg;
    cfg.t = 0.5;
    cfg.k = 1;
    cfg.n_paths = o.quick ? 500 : 5000;
    cfg.dt = 5e-3;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.u0 = InitialCondition::cosine_bounded();
    const PathEnsemble paths(cfg, 0, false);
    std::vector<double> terminals(paths.size()), coeffs(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) {
        terminals[p] = paths.terminal(p);
        coeffs[p] = paths.coeffs(p)[0];
    }
    double worst = 0.0;
    for (double zv : {-1.0, 0.0, 0.7}) {
        const double z[1] = {zv};
        const double a = solve_fk_truncated(paths, cfg.u0, z).value;
        const double b = fk_pde_point(terminals, coeffs, z, cfg.u0).u.value;
        worst = std::max(worst, std::abs(a - b) / std::abs(b));
    }
    return worst;
}

// |mean - 1| in standard errors
double mean_field_one(const ValidationOptions& o) {
    SolverConfig cfg;
    cfg.t = 0.5;
    cfg.k = 10;
    cfg.n_paths = o.quick ? 100 : 400;
    cfg.n_noise = o.quick ? 200 : 1000;
    cfg.dt = 1e-2;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    const FieldEstimate m = mean_field(cfg);
    return std::abs(m.value - 1.0) / m.std_error;
}

// largest of the mean, variance and skewness z-scores
double psi_gaussian_law(const ValidationOptions& o) {
    RngStream stream(o.seed, StreamRole::brownian, 0, 901);
    const BrownianPath path = sample_path(0.0, TimeGrid(1.0, 500), stream);
    const auto c = basis_time_integrals(path, 20);
    const PsiLawReport r = psi_conditional_law_check(c, o.quick ? 5000 : 20000, o.seed, o.threads);
    return std::max({std::abs(r.z_mean), std::abs(r.z_variance), std::abs(r.z_skewness)});
}

double pde_initial_datum(const ValidationOptions&) {
    PdeGrid grid;
    grid.h_x = 0.25;
    grid.h_z = 0.25;
    const auto u0 = InitialCondition::cosine_bounded();
    const PdeField f = solve_reduced_pde(u0, grid, 0.0);
    double worst = 0.0;
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
        for (std::size_t iz = 0; iz < grid.nz(); ++iz) {
            const std::size_t idx[1] = {iz};
            worst = std::max(worst, std::abs(f.u_at(ix, idx) - u0(grid.x_at(ix))));
        }
    }
    return worst;
}

double pde_heat_control(const ValidationOptions&) {
    PdeGrid grid;
    grid.potential = false;
    grid.h_x = 0.05;
    grid.h_z = 0.5;
    const auto u0 = InitialCondition::gauss_bump();
    const PdeField f = solve_reduced_pde(u0, grid, 0.5);
    double worst = 0.0;
    for (double x : {-1.0, 0.0, 1.5}) {
        const double z[1] = {0.5};
        const double exact = heat_semigroup(u0, 0.5, x);
        worst = std::max(worst, std::abs(f.u_at(x, z) - exact) / exact);
    }
    return worst;
}

double kernel_diagonal_anchor(const ValidationOptions&) {
    double worst = 0.0;
    for (double x : {-0.5, 0.0, 1.0}) {
        const double p[1] = {x};
        const auto v = chaos_kernel_quadrature(1, 1.0, x, p, InitialCondition::one());
        worst = std::max(worst, std::abs(v.value - std::sqrt(2.0 / std::numbers::pi)));
    }
    return worst;
}

// 0 when one and several workers give bitwise equal results
double thread_determinism(const ValidationOptions& o) {
    SolverConfig cfg;
    cfg.t = 1.0;
    cfg.k = 8;
    cfg.n_paths = 1000;
    cfg.dt = 1e-2;
    cfg.seed = o.seed;
    const auto z = NoiseRealization::sample(cfg.k, o.seed, 0);
    cfg.threads = 1;
    const FieldEstimate a = solve_fk_truncated(cfg, z.z);
    cfg.threads = std::max(2u, o.threads);
    const FieldEstimate b = solve_fk_truncated(cfg, z.z);
    return std::memcmp(&a.value, &b.value, sizeof(double)) == 0 &&
                   std::memcmp(&a.std_error, &b.std_error, sizeof(double)) == 0
               ? 0.0
               : 1.0;
}

const std::vector<Check>& checks() {
    static const std::vector<Check> all{
        {"hermite-orthonormality", 1e-8, hermite_orthonormality},
        {"hermite-polynomial-link", 1e-10, hermite_polynomial_link},
        {"parseval-local-time", 0.15, parseval_local_time},
        {"wick-exponential-product", 1e-12, wick_exponential_product},
        {"wick-exponential-eval", 1e-10, wick_exponential_eval},
        {"second-quantization-projection", 0.2, second_quantization_projection},
        {"fk-degenerate", 0.0, fk_degenerate},
        {"substitution-identity", 1e-12, substitution_identity},
        {"mean-field-one", 3.0, mean_field_one},
        {"psi-gaussian-law", 3.0, psi_gaussian_law},
        {"pde-initial-datum", 1e-14, pde_initial_datum},
        {"pde-heat-control", 5e-3, pde_heat_control},
        {"kernel-diagonal-anchor", 1e-8, kernel_diagonal_anchor},
        {"thread-determinism", 0.0, thread_determinism},
    };
    return all;
}

}  // namespace

std::vector<std::string> validation_check_names() {
    std::vector<std::string> names;
    for (const auto& c : checks()) names.emplace_back(c.name);
    return names;
}

std::vector<ValidationCheck> run_validation(const ValidationOptions& options) {
    std::vector<ValidationCheck> out;
    for (const auto& c : checks()) {
        ValidationCheck r;
        r.name = c.name;
        r.tolerance = c.tolerance;
        r.deviation = c.deviation(options);
        if (options.inject_fault == c.name) r.deviation = 10.0 * c.tolerance + 1.0;
        r.passed = std::isfinite(r.deviation) && r.deviation <= c.tolerance;
        out.push_back(r);
    }
    return out;
}

}  // namespace shefk
