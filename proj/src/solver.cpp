#include "shefk/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "shefk/hermite.hpp"
#include "shefk/kernels.hpp"
#include "shefk/parallel.hpp"
#include "shefk/wick.hpp"

namespace shefk {

void SolverConfig::validate() const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::domain_error("SolverConfig: t must be finite and >= 0");
    if (!std::isfinite(x)) throw std::domain_error("SolverConfig: x must be finite");
    if (k < 1) throw std::domain_error("SolverConfig: K must be >= 1");
    if (n_paths < 1) throw std::domain_error("SolverConfig: n_paths must be >= 1");
    if (!(dt > 0.0)) throw std::domain_error("SolverConfig: dt must be positive");
    if (degree < 0) throw std::domain_error("SolverConfig: degree must be >= 0");
    bins.validate();
}

PathConfig SolverConfig::paths(std::uint64_t block) const {
    return PathConfig{grid(), n_paths, seed, block, threads};
}

PathEnsemble::PathEnsemble(const SolverConfig& cfg, std::uint64_t block, bool with_local_time) : k_(cfg.k) {
    cfg.validate();
    if (cfg.t == 0.0) throw std::domain_error("PathEnsemble: t must be positive");
    const PathConfig pc = cfg.paths(block);
    const std::size_t n = pc.n_paths;
    const auto kk = static_cast<std::size_t>(k_);
    terminal_.resize(n);
    coeffs_.resize(n * kk);
    if (with_local_time) alpha_hist_.resize(n);
    parallel_for(block_count(n), pc.threads, [&](std::size_t blk) {
        const auto range = block_range(blk, n);
        for (std::size_t p = range.begin; p < range.end; ++p) {
            const PathSample s = simulate_path_sample(cfg.x, pc, p, k_, with_local_time ? &cfg.bins : nullptr);
            terminal_[p] = s.terminal;
            std::copy(s.coeffs.begin(), s.coeffs.end(), coeffs_.begin() + static_cast<std::ptrdiff_t>(p * kk));
            if (with_local_time) alpha_hist_[p] = s.alpha_hist;
        }
    });
}

PsiSample psi_sample(std::span<const double> coeffs, std::span<const double> z, double alpha_hist) {
    if (z.size() != coeffs.size()) throw std::domain_error("psi_sample: noise length must equal K");
    double dot = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        dot += z[j] * coeffs[j];
        s2 += coeffs[j] * coeffs[j];
    }
    return {dot - 0.5 * s2, dot - 0.5 * alpha_hist, s2};
}

namespace {

void check_noise(const SolverConfig& cfg, std::span<const double> z) {
    cfg.validate();
    if (z.size() != static_cast<std::size_t>(cfg.k)) {
        throw std::domain_error("solver: noise realization length must equal K");
    }
}

template <class Weight>
FieldEstimate ensemble_average(const PathEnsemble& paths, Weight&& weight) {
    std::vector<double> values(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) values[p] = weight(p);
    return mean_estimate(values);
}

}  // namespace

FieldEstimate solve_fk_truncated(const PathEnsemble& paths, const InitialCondition& u0, std::span<const double> z) {
    if (z.size() != static_cast<std::size_t>(paths.k())) {
        throw std::domain_error("solve_fk_truncated: noise realization length must equal K");
    }
    if (u0.is_zero()) return {0.0, 0.0, paths.size()};
    return ensemble_average(paths, [&](std::size_t p) {
        const double g = u0(paths.terminal(p));
        return g == 0.0 ? 0.0 : g * std::exp(psi_sample(paths.coeffs(p), z).psi_k);
    });
}

FieldEstimate solve_fk_truncated(const SolverConfig& cfg, std::span<const double> z) {
    check_noise(cfg, z);
    if (cfg.t == 0.0) return {cfg.u0(cfg.x), 0.0, 1};
    if (cfg.u0.is_zero()) return {0.0, 0.0, cfg.n_paths};
    return solve_fk_truncated(PathEnsemble(cfg, 0, false), cfg.u0, z);
}

FieldEstimate solve_fk_limit(const PathEnsemble& paths, const InitialCondition& u0, std::span<const double> z) {
    if (!paths.has_local_time()) throw std::domain_error("solve_fk_limit: ensemble lacks local-time estimates");
    if (z.size() != static_cast<std::size_t>(paths.k())) {
        throw std::domain_error("solve_fk_limit: noise realization length must equal K");
    }
    if (u0.is_zero()) return {0.0, 0.0, paths.size()};
    return ensemble_average(paths, [&](std::size_t p) {
        const double g = u0(paths.terminal(p));
        return g == 0.0 ? 0.0 : g * std::exp(psi_sample(paths.coeffs(p), z, paths.alpha_hist(p)).psi_limit);
    });
}

FieldEstimate solve_fk_limit(const SolverConfig& cfg, std::span<const double> z) {
    check_noise(cfg, z);
    if (cfg.t == 0.0) return {cfg.u0(cfg.x), 0.0, 1};
    if (cfg.u0.is_zero()) return {0.0, 0.0, cfg.n_paths};
    return solve_fk_limit(PathEnsemble(cfg, 0, true), cfg.u0, z);
}

FieldEstimate mean_field(const SolverConfig& cfg) {
    cfg.validate();
    if (cfg.n_noise < 2) throw std::domain_error("mean_field: need at least two noise draws");
    if (cfg.t == 0.0) return {cfg.u0(cfg.x), 0.0, cfg.n_noise};
    std::vector<double> per_draw(cfg.n_noise);
    SolverConfig inner = cfg;
    inner.threads = 1;
    parallel_for(cfg.n_noise, cfg.threads, [&](std::size_t i) {
        const auto z = NoiseRealization::sample(cfg.k, cfg.seed, i);
        per_draw[i] = solve_fk_truncated(PathEnsemble(inner, i + 1, false), cfg.u0, z.z).value;
    });
    return mean_estimate(per_draw);
}

PsiLawReport psi_conditional_law_check(std::span<const double> coeffs, std::size_t m, std::uint64_t seed,
                                       unsigned threads) {
    if (m < 10) throw std::domain_error("psi_conditional_law_check: need at least 10 draws");
    const int k = static_cast<int>(coeffs.size());
    std::vector<double> psi(m);
    parallel_for(m, threads, [&](std::size_t i) {
        const auto z = NoiseRealization::sample(k, seed, i);
        psi[i] = psi_sample(coeffs, z.z).psi_k;
    });
    const SampleMoments mom = sample_moments(psi);
    const double dm = static_cast<double>(m);

    PsiLawReport r;
    r.sigma2 = psi_sample(coeffs, std::vector<double>(coeffs.size(), 0.0)).sigma2;
    r.mean = mom.mean;
    r.variance = mom.variance;
    r.skewness = mom.skewness;
    r.excess_kurtosis = mom.excess_kurtosis;
    r.mean_se = std::sqrt(mom.variance / dm);
    r.draws = m;
    if (r.sigma2 > 0.0) {
        r.z_mean = (mom.mean + 0.5 * r.sigma2) / std::sqrt(r.sigma2 / dm);
        r.z_variance = (mom.variance - r.sigma2) / (r.sigma2 * std::sqrt(2.0 / (dm - 1.0)));
        r.z_skewness = mom.skewness / std::sqrt(6.0 / dm);
        r.z_kurtosis = mom.excess_kurtosis / std::sqrt(24.0 / dm);
        // mean and variance of a Gaussian sample are independent
        const double se = std::sqrt(r.sigma2 / dm + r.sigma2 * r.sigma2 / (2.0 * (dm - 1.0)));
        r.z_drift_consistency = (mom.mean + 0.5 * mom.variance) / se;
    }
    return r;
}

FieldEstimate moment_fk(int q, const SolverConfig& cfg) {
    if (q < 2) throw std::domain_error("moment_fk: q must be >= 2");
    cfg.validate();
    if (cfg.t == 0.0) return {std::pow(cfg.u0(cfg.x), q), 0.0, 1};
    if (cfg.u0.is_zero()) return {0.0, 0.0, cfg.n_paths};

    const PathConfig pc = cfg.paths(0);
    const auto qq = static_cast<std::size_t>(q);
    const auto kk = static_cast<std::size_t>(cfg.k);
    std::vector<double> values(cfg.n_paths);
    parallel_for(block_count(cfg.n_paths), cfg.threads, [&](std::size_t blk) {
        const auto range = block_range(blk, cfg.n_paths);
        std::vector<PathSample> tuple(qq);
        for (std::size_t i = range.begin; i < range.end; ++i) {
            double weight = 1.0;
            for (std::size_t r = 0; r < qq; ++r) {
                tuple[r] = simulate_path_sample(cfg.x, pc, i * qq + r, cfg.k);
                weight *= cfg.u0(tuple[r].terminal);
            }
            double expo = 0.0;
            for (std::size_t a = 0; a < qq; ++a) {
                for (std::size_t b = a + 1; b < qq; ++b) {
                    for (std::size_t j = 0; j < kk; ++j) expo += tuple[a].coeffs[j] * tuple[b].coeffs[j];
                }
            }
            values[i] = weight == 0.0 ? 0.0 : weight * std::exp(expo);
        }
    });
    return mean_estimate(values);
}

EmpiricalMoment empirical_moment(int q, const SolverConfig& cfg) {
    if (q < 1) throw std::domain_error("empirical_moment: q must be >= 1");
    cfg.validate();
    if (cfg.n_noise < 2) throw std::domain_error("empirical_moment: need at least two noise draws");
    EmpiricalMoment out;
    if (cfg.t == 0.0) {
        const double v = std::pow(cfg.u0(cfg.x), q);
        out.raw = out.corrected = {v, 0.0, cfg.n_noise};
        return out;
    }
    std::vector<double> raw(cfg.n_noise), corrected(cfg.n_noise);
    SolverConfig inner = cfg;
    inner.threads = 1;
    parallel_for(cfg.n_noise, cfg.threads, [&](std::size_t i) {
        const auto z = NoiseRealization::sample(cfg.k, cfg.seed, i);
        const auto u = solve_fk_truncated(PathEnsemble(inner, i + 1, false), cfg.u0, z.z);
        raw[i] = std::pow(u.value, q);
        corrected[i] = raw[i];
        // std_error^2 = within-draw sample variance / n_paths
        if (q == 2) corrected[i] -= u.std_error * u.std_error;
    });
    out.raw = mean_estimate(raw);
    out.corrected = mean_estimate(corrected);
    out.bias_corrected = (q == 2);
    out.mean_bias = out.raw.value - out.corrected.value;
    return out;
}

FieldEstimate s_transform_point(std::span<const double> xi, double t, double x, const InitialCondition& u0,
                                const PathConfig& paths) {
    if (xi.empty()) throw std::domain_error("s_transform_point: need at least one coefficient");
    if (t == 0.0) return {u0(x), 0.0, 1};
    PathConfig pc = paths;
    pc.grid = TimeGrid::with_step(t, paths.grid.dt());
    const int k = static_cast<int>(xi.size());
    std::vector<double> values(pc.n_paths);
    parallel_for(block_count(pc.n_paths), pc.threads, [&](std::size_t blk) {
        const auto range = block_range(blk, pc.n_paths);
        for (std::size_t p = range.begin; p < range.end; ++p) {
            const PathSample s = simulate_path_sample(x, pc, p, k);
            double expo = 0.0;
            for (std::size_t j = 0; j < xi.size(); ++j) expo += xi[j] * s.coeffs[j];
            values[p] = u0(s.terminal) * std::exp(expo);
        }
    });
    return mean_estimate(values);
}

namespace {

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }
double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

// int p_tau(x - y) g(y) dy for g piecewise linear on nodes ys (zero outside).
double heat_of_linear_interpolant(double tau, double x, std::span<const double> ys, std::span<const double> g) {
    if (tau <= 0.0) {
        if (x < ys.front() || x > ys.back()) return 0.0;
        const auto it = std::upper_bound(ys.begin(), ys.end(), x);
        const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(it - ys.begin()), ys.size() - 1);
        const std::size_t a = b - 1;
        const double w = (x - ys[a]) / (ys[b] - ys[a]);
        return (1.0 - w) * g[a] + w * g[b];
    }
    const double sigma = std::sqrt(tau);
    double total = 0.0;
    for (std::size_t a = 0; a + 1 < ys.size(); ++a) {
        const double ya = ys[a], yb = ys[a + 1];
        const double slope = (g[a + 1] - g[a]) / (yb - ya);
        const double intercept = g[a] - slope * ya;
        const double ua = (ya - x) / sigma, ub = (yb - x) / sigma;
        const double mass = normal_cdf(ub) - normal_cdf(ua);
        const double first = x * mass - sigma * (normal_pdf(ub) - normal_pdf(ua));
        total += intercept * mass + slope * first;
    }
    return total;
}

}  // namespace

StransformReport s_transform_residual(std::span<const double> xi, const SolverConfig& cfg, const SpaceTimeGrid& grid) {
    cfg.validate();
    if (xi.empty()) throw std::domain_error("s_transform_residual: need at least one coefficient");
    if (grid.time_nodes < 3 || grid.space_nodes < 3) throw std::domain_error("s_transform_residual: grid too coarse");
    if (!(cfg.t > 0.0)) throw std::domain_error("s_transform_residual: t must be positive");

    const std::size_t nt = grid.time_nodes, nx = grid.space_nodes;
    std::vector<double> ts(nt), xs(nx), potential(nx);
    for (std::size_t i = 0; i < nt; ++i) ts[i] = cfg.t * static_cast<double>(i) / static_cast<double>(nt - 1);
    std::vector<double> basis(xi.size());
    double max_potential = 0.0;
    for (std::size_t k = 0; k < nx; ++k) {
        xs[k] = -grid.half_width + 2.0 * grid.half_width * static_cast<double>(k) / static_cast<double>(nx - 1);
        hermite_functions(xs[k], basis);
        double v = 0.0;
        for (std::size_t j = 0; j < xi.size(); ++j) v += xi[j] * basis[j];
        potential[k] = v;
        max_potential = std::max(max_potential, std::abs(v));
    }

    // S at every node; node (i, k) uses path block i * nx + k.
    std::vector<double> s(nt * nx), se(nt * nx, 0.0);
    PathConfig pc = cfg.paths(0);
    pc.threads = 1;
    parallel_for(nt * nx, cfg.threads, [&](std::size_t node) {
        const std::size_t i = node / nx, k = node % nx;
        if (i == 0) {
            s[node] = cfg.u0(xs[k]);
            return;
        }
        PathConfig local = pc;
        local.block = node;
        const auto est = s_transform_point(xi, ts[i], xs[k], cfg.u0, local);
        s[node] = est.value;
        se[node] = est.std_error;
    });
    const double max_se = *std::max_element(se.begin(), se.end());

    // g_r(y) = S_{r,y} V(y) on the grid; spatial interpolation error bound from
    // second differences.
    std::vector<double> g(nt * nx);
    double max_second_diff = 0.0;
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t k = 0; k < nx; ++k) g[i * nx + k] = s[i * nx + k] * potential[k];
        for (std::size_t k = 1; k + 1 < nx; ++k) {
            const double d2 = g[i * nx + k - 1] - 2.0 * g[i * nx + k] + g[i * nx + k + 1];
            max_second_diff = std::max(max_second_diff, std::abs(d2));
        }
    }

    StransformReport report;
    for (std::size_t i = 1; i < nt; ++i) {
        for (std::size_t k = 0; k < nx; ++k) {
            const double t_i = ts[i];
            // h(r_m) = int p_{t_i - r_m}(x_k - y) g_{r_m}(y) dy, m = 0..i
            std::vector<double> h(i + 1);
            for (std::size_t m = 0; m <= i; ++m) {
                h[m] = heat_of_linear_interpolant(t_i - ts[m], xs[k], xs, std::span<const double>(g.data() + m * nx, nx));
            }
            const double dr = ts[1] - ts[0];
            double trap = 0.0;
            for (std::size_t m = 0; m <= i; ++m) trap += (m == 0 || m == i ? 0.5 : 1.0) * dr * h[m];
            // Coarse rule on nodes i, i-2, ...; a final single-width panel if i is odd.
            double coarse = 0.0;
            std::size_t m = i;
            while (m >= 2) {
                coarse += dr * (h[m] + h[m - 2]);
                m -= 2;
            }
            if (m == 1) coarse += 0.5 * dr * (h[1] + h[0]);
            const double time_err = std::abs(trap - coarse) / 3.0;
            const double space_err = t_i * max_second_diff / 8.0;
            const double quad_err = time_err + space_err;

            const double rhs = heat_semigroup(cfg.u0, t_i, xs[k]) + trap;
            const double residual = std::abs(s[i * nx + k] - rhs);
            const double budget = 3.0 * (se[i * nx + k] + t_i * max_potential * max_se) + quad_err;

            report.max_abs = std::max(report.max_abs, residual);
            report.mean_abs += residual;
            report.max_budget = std::max(report.max_budget, budget);
            report.mean_std_error += se[i * nx + k];
            report.mean_budget += budget;
            report.max_quadrature_error = std::max(report.max_quadrature_error, quad_err);
            ++report.nodes;
            if (residual <= budget) ++report.nodes_within_budget;
        }
    }
    report.mean_abs /= static_cast<double>(report.nodes);
    report.mean_budget /= static_cast<double>(report.nodes);
    report.mean_std_error /= static_cast<double>(report.nodes);
    report.max_std_error = max_se;
    return report;
}

std::vector<ConvergenceRow> convergence_study(const PathEnsemble& paths, const InitialCondition& u0,
                                              std::span<const int> k_list, std::span<const double> z) {
    if (k_list.empty()) throw std::domain_error("convergence_study: empty K list");
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        if (k_list[i] < 1 || (i > 0 && k_list[i] < k_list[i - 1])) {
            throw std::domain_error("convergence_study: K list must be positive and nondecreasing");
        }
    }
    if (k_list.back() > paths.k() || z.size() < static_cast<std::size_t>(k_list.back())) {
        throw std::domain_error("convergence_study: ensemble or noise shorter than max K");
    }
    std::vector<ConvergenceRow> rows;
    std::vector<double> values(paths.size());
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        const auto kk = static_cast<std::size_t>(k_list[i]);
        for (std::size_t p = 0; p < paths.size(); ++p) {
            const double g = u0(paths.terminal(p));
            values[p] = g == 0.0 ? 0.0 : g * std::exp(psi_sample(paths.coeffs(p).first(kk), z.first(kk)).psi_k);
        }
        ConvergenceRow row{k_list[i], mean_estimate(values), std::nullopt};
        if (i > 0) row.gap = std::abs(row.estimate.value - rows.back().estimate.value);
        rows.push_back(row);
    }
    return rows;
}

std::vector<ConvergenceRow> convergence_study(const SolverConfig& cfg, std::span<const int> k_list,
                                              std::span<const double> z) {
    cfg.validate();
    if (k_list.empty()) throw std::domain_error("convergence_study: empty K list");
    SolverConfig wide = cfg;
    wide.k = *std::max_element(k_list.begin(), k_list.end());
    if (cfg.t == 0.0) {
        std::vector<ConvergenceRow> rows;
        for (std::size_t i = 0; i < k_list.size(); ++i) {
            rows.push_back({k_list[i], {cfg.u0(cfg.x), 0.0, 1}, i ? std::optional<double>(0.0) : std::nullopt});
        }
        return rows;
    }
    return convergence_study(PathEnsemble(wide, 0, false), cfg.u0, k_list, z);
}

}  // namespace shefk
