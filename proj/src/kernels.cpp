#include "shefk/kernels.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <random>
#include <stdexcept>

#include "shefk/parallel.hpp"
#include "shefk/rng.hpp"
#include "shefk/stats.hpp"

namespace shefk {

namespace {

using boost::math::quadrature::gauss;
using boost::math::quadrature::tanh_sinh;

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
constexpr double kWindowSigmas = 12.0;

tanh_sinh<double>& integrator() {
    thread_local tanh_sinh<double> ts;
    return ts;
}

// 2u p_{u^2}(d): the heat kernel after the substitution tau = u^2, which
// removes the tau^{-1/2} singularity.
double substituted_kernel(double u, double d) {
    if (d == 0.0) return kSqrt2OverPi;
    if (u * u <= 0.0) return 0.0;
    return kSqrt2OverPi * std::exp(-d * d / (2.0 * u * u));
}

double semigroup_at(const InitialCondition& u0, double t, double x) {
    if (const auto c = u0.constant_value()) return *c;
    return heat_semigroup(u0, std::max(0.0, t), x);
}

struct Integral {
    double value;
    double error;
};

template <class F>
Integral integrate(F&& f, double a, double b, double tol) {
    if (!(b > a)) return {0.0, 0.0};
    double err = 0.0;
    const double v = integrator().integrate(std::forward<F>(f), a, b, tol, &err);
    return {v, err};
}

KernelValue first_order(double t, double x, double y, const InitialCondition& u0, double tol) {
    // Both orientations reduce to the same one-dimensional integral in u.
    const double d = x - y;
    const auto r = integrate([&](double u) { return substituted_kernel(u, d) * semigroup_at(u0, t - u * u, y); },
                             0.0, std::sqrt(t), tol);
    return {r.value, r.error};
}

KernelValue second_order_backward(double t, double x, double x1, double x2, const InitialCondition& u0, double tol) {
    // u: t - s2 = u^2, v: s2 - s1 = v^2.
    double inner_err = 0.0;
    const auto outer = integrate(
        [&](double u) {
            const double s2 = std::max(0.0, t - u * u);
            const auto inner = integrate(
                [&](double v) {
                    return substituted_kernel(v, x2 - x1) * semigroup_at(u0, s2 - v * v, x1);
                },
                0.0, std::sqrt(s2), tol);
            inner_err = std::max(inner_err, inner.error);
            return substituted_kernel(u, x - x2) * inner.value;
        },
        0.0, std::sqrt(t), tol);
    return {outer.value, outer.error + std::sqrt(t) * kSqrt2OverPi * inner_err};
}

KernelValue second_order_forward(double t, double x, double y1, double y2, const InitialCondition& u0, double tol) {
    // u: s1 = u^2 (leg x -> y2), v: s2 - s1 = v^2 (leg y2 -> y1), then P_{t - s2} u0 at y1.
    double inner_err = 0.0;
    const auto outer = integrate(
        [&](double u) {
            const double rest = std::max(0.0, t - u * u);
            const auto inner = integrate(
                [&](double v) {
                    return substituted_kernel(v, y1 - y2) * semigroup_at(u0, rest - v * v, y1);
                },
                0.0, std::sqrt(rest), tol);
            inner_err = std::max(inner_err, inner.error);
            return substituted_kernel(u, y2 - x) * inner.value;
        },
        0.0, std::sqrt(t), tol);
    return {outer.value, outer.error + std::sqrt(t) * kSqrt2OverPi * inner_err};
}

// Monte Carlo over the time simplex with gaps (t - s3, s3 - s2, s2 - s1, s1)
// drawn from t * Dirichlet(1/2, 1/2, 1/2, 1). The Dirichlet density cancels
// the tau^{-1/2} singularities of the three heat kernels, so the weights are
// bounded even when points coincide.
KernelValue third_order_mc(double t, double x, std::span<const double> pts, const InitialCondition& u0,
                           const KernelQuadratureOptions& options) {
    RngStream stream(options.seed, StreamRole::simplex, 3);
    std::gamma_distribution<double> half(0.5, 1.0);
    std::gamma_distribution<double> one(1.0, 1.0);
    // Dirichlet normalizer Gamma(5/2) / Gamma(1/2)^3 = 3 / (4 pi).
    const double norm = t * t * t * (4.0 * std::numbers::pi / 3.0) * std::pow(2.0 * std::numbers::pi * t, -1.5);
    const double d[3] = {x - pts[2], pts[2] - pts[1], pts[1] - pts[0]};
    SumAccumulator acc;
    for (std::size_t s = 0; s < options.mc_samples; ++s) {
        double g[4] = {half(stream.engine()), half(stream.engine()), half(stream.engine()), one(stream.engine())};
        const double total = g[0] + g[1] + g[2] + g[3];
        double expo = 0.0;
        for (int i = 0; i < 3; ++i) {
            g[i] = t * g[i] / total;
            expo -= d[i] * d[i] / (2.0 * g[i]);
        }
        const double last = t * g[3] / total;
        acc.add(norm * std::exp(expo) * semigroup_at(u0, last, pts[0]));
    }
    const auto est = acc.estimate();
    return {est.value, est.std_error};
}

}  // namespace

double heat_kernel(double tau, double y) {
    if (!(tau > 0.0)) throw std::domain_error("heat_kernel: tau must be positive");
    return std::exp(-y * y / (2.0 * tau)) / std::sqrt(2.0 * std::numbers::pi * tau);
}

double heat_semigroup(const InitialCondition& u0, double t, double x) {
    if (t < 0.0) throw std::domain_error("heat_semigroup: negative time");
    if (t == 0.0) return u0(x);
    if (const auto c = u0.constant_value()) return *c;

    const double sigma = std::sqrt(t);
    const double lo = x - kWindowSigmas * sigma;
    const double hi = x + kWindowSigmas * sigma;
    std::vector<double> cuts{lo};
    for (double b : u0.breakpoints()) {
        if (b > lo && b < hi) cuts.push_back(b);
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());

    // Sub-panels of width <= sigma / 2, 20-point Gauss-Legendre on each.
    const double panel = 0.5 * sigma;
    auto integrand = [&](double y) { return heat_kernel(t, x - y) * u0(y); };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        const auto pieces = static_cast<int>(std::max(1.0, std::ceil((b - a) / panel)));
        const double h = (b - a) / pieces;
        for (int p = 0; p < pieces; ++p) {
            total += gauss<double, 20>::integrate(integrand, a + p * h, a + (p + 1) * h);
        }
    }
    return total;
}

KernelValue chaos_kernel_quadrature(int n, double t, double x, std::span<const double> points,
                                    const InitialCondition& u0, KernelOrientation orientation,
                                    const KernelQuadratureOptions& options) {
    if (n < 1 || n > 3) throw std::domain_error("chaos_kernel_quadrature: only n = 1..3 is supported");
    if (points.size() != static_cast<std::size_t>(n)) {
        throw std::domain_error("chaos_kernel_quadrature: need exactly n evaluation points");
    }
    if (!(t > 0.0)) throw std::domain_error("chaos_kernel_quadrature: t must be positive");
    switch (n) {
        case 1:
            return first_order(t, x, points[0], u0, options.tolerance);
        case 2:
            return orientation == KernelOrientation::backward
                       ? second_order_backward(t, x, points[0], points[1], u0, options.tolerance)
                       : second_order_forward(t, x, points[0], points[1], u0, options.tolerance);
        default:
            return third_order_mc(t, x, points, u0, options);
    }
}

KernelValue symmetrized_kernel(int n, double t, double x, std::span<const double> points,
                               const InitialCondition& u0, const KernelQuadratureOptions& options) {
    std::vector<double> p(points.begin(), points.end());
    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double sum = 0.0, err = 0.0;
    int count = 0;
    do {
        std::vector<double> perm(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) perm[i] = p[order[i]];
        const auto v = chaos_kernel_quadrature(n, t, x, perm, u0, KernelOrientation::backward, options);
        sum += v.value;
        err += v.error;
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    return {sum / count, err / count};
}

KernelProjection project_first_order_kernel(double t, double x, int k, const InitialCondition& u0, double step,
                                            double half_width) {
    if (!(step > 0.0) || !(half_width > step)) throw std::domain_error("project_first_order_kernel: bad grid");
    const HermiteBasisSpec spec(k);
    // Even node count per side so the 2h sub-rule shares the same endpoints.
    auto half = static_cast<long>(std::ceil(half_width / step));
    if (half % 2) ++half;
    const auto kk = static_cast<std::size_t>(spec.max_index);
    std::vector<double> fine(kk, 0.0), coarse(kk, 0.0), basis(kk);
    for (long i = -half; i <= half; ++i) {
        const double y = x + static_cast<double>(i) * step;
        const double f = first_order(t, x, y, u0, 1e-12).value;
        hermite_functions(y, basis);
        const bool edge = (i == -half || i == half);
        const double w = edge ? 0.5 * step : step;
        for (std::size_t j = 0; j < kk; ++j) fine[j] += w * f * basis[j];
        if (i % 2 == 0) {
            const double wc = edge ? step : 2.0 * step;
            for (std::size_t j = 0; j < kk; ++j) coarse[j] += wc * f * basis[j];
        }
    }
    KernelProjection out{fine, std::vector<double>(kk)};
    for (std::size_t j = 0; j < kk; ++j) out.error[j] = std::abs(fine[j] - coarse[j]);
    return out;
}

SecondOrderProjection project_second_order_kernel(double t, double x, int k, const InitialCondition& u0,
                                                  double step, double half_width) {
    if (!(step > 0.0) || !(half_width > step)) throw std::domain_error("project_second_order_kernel: bad grid");
    const HermiteBasisSpec spec(k);
    auto half = static_cast<long>(std::ceil(half_width / step));
    if (half % 2) ++half;
    const auto nodes = static_cast<std::size_t>(2 * half + 1);
    const auto kk = static_cast<std::size_t>(spec.max_index);

    std::vector<double> y(nodes), w_fine(nodes), w_coarse(nodes, 0.0);
    std::vector<double> basis(nodes * kk);
    for (std::size_t a = 0; a < nodes; ++a) {
        const long i = static_cast<long>(a) - half;
        y[a] = x + static_cast<double>(i) * step;
        const bool edge = (a == 0 || a + 1 == nodes);
        w_fine[a] = edge ? 0.5 * step : step;
        if (i % 2 == 0) w_coarse[a] = edge ? step : 2.0 * step;
        hermite_functions(y[a], std::span<double>(basis.data() + a * kk, kk));
    }

    // T[i][j] = <f_2, e_i (x) e_j>, slot 1 holding y_a.
    std::vector<double> t_fine(kk * kk, 0.0), t_coarse(kk * kk, 0.0);
    std::vector<double> row(nodes);
    for (std::size_t a = 0; a < nodes; ++a) {
        for (std::size_t b = 0; b < nodes; ++b) {
            row[b] = second_order_backward(t, x, y[a], y[b], u0, 1e-9).value;
        }
        for (std::size_t i = 0; i < kk; ++i) {
            const double ea = basis[a * kk + i];
            for (std::size_t j = 0; j < kk; ++j) {
                double sf = 0.0, sc = 0.0;
                for (std::size_t b = 0; b < nodes; ++b) {
                    const double v = row[b] * basis[b * kk + j];
                    sf += w_fine[b] * v;
                    sc += w_coarse[b] * v;
                }
                t_fine[i * kk + j] += w_fine[a] * ea * sf;
                t_coarse[i * kk + j] += w_coarse[a] * ea * sc;
            }
        }
    }

    SecondOrderProjection out{ChaosExpansion(k, 2), ChaosExpansion(k, 2)};
    for (std::size_t i = 0; i < kk; ++i) {
        for (std::size_t j = i; j < kk; ++j) {
            const MultiIndex alpha = MultiIndex::unit(static_cast<int>(i + 1)) + MultiIndex::unit(static_cast<int>(j + 1));
            double vf, vc;
            if (i == j) {
                vf = t_fine[i * kk + i];
                vc = t_coarse[i * kk + i];
            } else {
                vf = t_fine[i * kk + j] + t_fine[j * kk + i];
                vc = t_coarse[i * kk + j] + t_coarse[j * kk + i];
            }
            out.coeffs.set(alpha, vf);
            out.error.set(alpha, std::abs(vf - vc));
        }
    }
    return out;
}

KernelCoefficients chaos_coefficients_mc(double t, double x, int k, int n, const InitialCondition& u0,
                                         const PathConfig& paths) {
    if (k < 1) throw std::domain_error("chaos_coefficients_mc: K must be >= 1");
    if (n < 0) throw std::domain_error("chaos_coefficients_mc: N must be >= 0");
    if (paths.n_paths == 0) throw std::domain_error("chaos_coefficients_mc: need paths");

    std::vector<MultiIndex> indices;
    for_each_multi_index(k, n, [&](const MultiIndex& a) { indices.push_back(a); });
    const std::size_t n_alpha = indices.size();
    const auto degree = static_cast<std::size_t>(n);

    PathConfig cfg = paths;
    cfg.grid = TimeGrid::with_step(t, paths.grid.dt());

    struct BlockSums {
        std::vector<SumAccumulator> coeff;
        double tail = 0.0;
    };
    const std::size_t blocks = block_count(cfg.n_paths);
    std::vector<BlockSums> sums(blocks);
    parallel_for(blocks, cfg.threads, [&](std::size_t blk) {
        BlockSums& bs = sums[blk];
        bs.coeff.assign(n_alpha, SumAccumulator{});
        std::vector<double> powers(static_cast<std::size_t>(k) * (degree + 1));
        const auto range = block_range(blk, cfg.n_paths);
        for (std::size_t p = range.begin; p < range.end; ++p) {
            const PathSample sample = simulate_path_sample(x, cfg, p, k);
            const double weight = u0(sample.terminal);
            for (std::size_t j = 0; j < sample.coeffs.size(); ++j) {
                double* pw = powers.data() + j * (degree + 1);
                pw[0] = 1.0;
                for (std::size_t a = 1; a <= degree; ++a) pw[a] = pw[a - 1] * sample.coeffs[j] / static_cast<double>(a);
            }
            for (std::size_t i = 0; i < n_alpha; ++i) {
                double v = weight;
                const auto& e = indices[i].entries();
                for (std::size_t j = 0; j < e.size(); ++j) v *= powers[j * (degree + 1) + e[j]];
                bs.coeff[i].add(v);
            }
            bs.tail += weight * weight * wick_exponential_tail(sample.coeffs, n);
        }
    });

    std::vector<SumAccumulator> total(n_alpha);
    double tail = 0.0;
    for (const auto& bs : sums) {
        for (std::size_t i = 0; i < n_alpha; ++i) total[i].merge(bs.coeff[i]);
        tail += bs.tail;
    }

    KernelCoefficients out;
    out.t = t;
    out.x = x;
    out.k = k;
    out.n = n;
    out.x_alpha = ChaosExpansion(k, n);
    out.n_paths = cfg.n_paths;
    for (std::size_t i = 0; i < n_alpha; ++i) {
        const auto est = total[i].estimate();
        out.x_alpha.set(indices[i], est.value);
        out.std_errors[indices[i]] = est.std_error;
    }
    out.truncation_tail = std::sqrt(tail / static_cast<double>(cfg.n_paths));
    return out;
}

std::string kernel_sidecar_json(const KernelCoefficients& kc) {
    nlohmann::ordered_json j;
    j["t"] = kc.t;
    j["x"] = kc.x;
    j["K"] = kc.k;
    j["N"] = kc.n;
    j["n_paths"] = kc.n_paths;
    j["truncation_tail"] = kc.truncation_tail;
    auto se = nlohmann::ordered_json::array();
    for (const auto& [alpha, v] : kc.std_errors) se.push_back({to_string(alpha), v});
    j["std_errors"] = se;
    return j.dump(2);
}

}  // namespace shefk
