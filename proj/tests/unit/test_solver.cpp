#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "shefk/kernels.hpp"
#include "shefk/solver.hpp"
#include "shefk/wick.hpp"

using namespace shefk;

namespace {

SolverConfig small(int k = 10, std::size_t paths = 2000) {
    SolverConfig cfg;
    cfg.t = 1.0;
    cfg.x = 0.0;
    cfg.k = k;
    cfg.n_paths = paths;
    cfg.n_noise = 200;
    cfg.dt = 1e-2;
    cfg.seed = 5;
    return cfg;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("config validation") {
    SolverConfig cfg = small();
    CHECK_NOTHROW(cfg.validate());
    cfg.k = 0;
    CHECK_THROWS(cfg.validate());
    cfg = small();
    cfg.n_paths = 0;
    CHECK_THROWS(cfg.validate());
    cfg = small();
    cfg.t = -1;
    CHECK_THROWS(cfg.validate());
    cfg = small();
    const std::vector<double> z(3, 0.0);
    CHECK_THROWS(solve_fk_truncated(cfg, z));  // length must equal K
}

TEST_CASE("degenerate inputs") {
    SolverConfig cfg = small(3, 50);
    const std::vector<double> z{0.4, -0.2, 1.0};
    cfg.u0 = InitialCondition::zero();
    CHECK(solve_fk_truncated(cfg, z).value == 0.0);
    CHECK(solve_fk_limit(cfg, z).value == 0.0);
    CHECK(moment_fk(2, cfg).value == 0.0);
    cfg.u0 = InitialCondition::gauss_bump();
    cfg.t = 0.0;
    cfg.x = 0.6;
    CHECK(solve_fk_truncated(cfg, z).value == cfg.u0(0.6));
    CHECK(solve_fk_limit(cfg, z).value == cfg.u0(0.6));
}

TEST_CASE("psi sample algebra") {
    const std::vector<double> c{0.3, -0.1, 0.2};
    const std::vector<double> z{1.0, 2.0, -0.5};
    const auto s = psi_sample(c, z, 0.5);
    const double dot = 0.3 - 0.2 - 0.1;
    CHECK(s.sigma2 == doctest::Approx(0.14));
    CHECK(s.psi_k == doctest::Approx(dot - 0.07));
    CHECK(s.psi_limit == doctest::Approx(dot - 0.25));
    CHECK(s.psi_k <= dot);
}

TEST_CASE("u0 = 1 at z = 0 lies in (0, 1] and is seed-stable") {
    SolverConfig cfg = small();
    const std::vector<double> z(10, 0.0);
    const auto a = solve_fk_truncated(cfg, z);
    CHECK(a.value > 0.0);
    CHECK(a.value <= 1.0);
    cfg.seed = 99;
    const auto b = solve_fk_truncated(cfg, z);
    CHECK(within_combined(a, b, 3.0));
}

TEST_CASE("positivity for nonnegative u0") {
    SolverConfig cfg = small(6, 300);
    cfg.u0 = InitialCondition::indicator(-0.5, 0.5);
    for (std::uint64_t d = 0; d < 5; ++d) {
        const auto z = NoiseRealization::sample(6, 1, d);
        CHECK(solve_fk_truncated(cfg, z.z).value >= 0.0);
    }
}

TEST_CASE("mean field equals the heat semigroup") {
    SolverConfig cfg = small(8, 200);
    cfg.n_noise = 400;
    const auto one = mean_field(cfg);
    CHECK(std::abs(one.value - 1.0) <= 3 * one.std_error);

    cfg.u0 = InitialCondition::indicator(0.0, 1.0);
    cfg.t = 0.5;
    const auto ind = mean_field(cfg);
    CHECK(std::abs(ind.value - heat_semigroup(cfg.u0, cfg.t, cfg.x)) <= 3 * ind.std_error + 1e-6);
}

TEST_CASE("frozen path: conditional law of Psi") {
    // c_1 = e_1(0) for t = 1, so sigma^2 = pi^{-1/2}
    const std::vector<double> c{std::pow(std::numbers::pi, -0.25)};
    const auto r = psi_conditional_law_check(c, 20000, 3);
    CHECK(r.sigma2 == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)));
    CHECK(r.sigma2 == doctest::Approx(0.5641896).epsilon(1e-6));
    CHECK(std::abs(r.z_mean) <= 3.0);
    CHECK(std::abs(r.z_variance) <= 3.0);
    CHECK(std::abs(r.z_skewness) <= 3.0);
    CHECK(std::abs(r.z_drift_consistency) <= 3.0);

    const auto r4 = psi_conditional_law_check(c, 80000, 3);
    CHECK(r4.mean_se / r.mean_se == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("limit solver drift gap shrinks with K") {
    SolverConfig cfg = small(200, 200);
    cfg.dt = 1e-3;
    const PathEnsemble paths(cfg, 0, true);
    double last = INFINITY;
    for (int k : {25, 50, 100, 200}) {
        std::vector<double> gaps;
        for (std::uint64_t d = 0; d < 20; ++d) {
            const auto z = NoiseRealization::sample(200, 7, d);
            double dev = 0.0;
            // per-path drift gap averaged over paths at this K
            for (std::size_t p = 0; p < paths.size(); ++p) {
                const auto s = psi_sample(paths.coeffs(p).first(static_cast<std::size_t>(k)),
                                          std::span<const double>(z.z).first(static_cast<std::size_t>(k)),
                                          paths.alpha_hist(p));
                dev += std::abs(s.psi_limit - s.psi_k);
            }
            gaps.push_back(dev / static_cast<double>(paths.size()));
        }
        const double m = median(gaps);
        CHECK(m < last);
        last = m;
    }
}

TEST_CASE("moments") {
    SolverConfig cfg = small(20, 4000);
    const auto m2 = moment_fk(2, cfg);
    CHECK(m2.value >= 1.0 - 3 * m2.std_error);
    CHECK_THROWS(moment_fk(1, cfg));

    SolverConfig e = small(20, 200);
    e.n_noise = 300;
    const auto q1 = empirical_moment(1, e);
    CHECK(std::abs(q1.raw.value - 1.0) <= 3 * q1.raw.std_error);
    CHECK_FALSE(q1.bias_corrected);
    const auto q2 = empirical_moment(2, e);
    CHECK(q2.bias_corrected);
    CHECK(q2.mean_bias > 0.0);
    const auto q4 = empirical_moment(4, e);
    CHECK(q4.raw.value >= q2.raw.value * q2.raw.value - 3 * q4.raw.std_error);
}

TEST_CASE("moment duality at small K") {
    SolverConfig cfg = small(10, 400);
    cfg.n_noise = 600;
    const auto emp = empirical_moment(2, cfg);
    SolverConfig big = cfg;
    big.n_paths = 20000;
    const auto fk = moment_fk(2, big);
    CHECK(within_combined(fk, emp.corrected, 3.0));
}

TEST_CASE("chaos expansion matches the solver pointwise") {
    SolverConfig cfg = small(4, 4000);
    const PathConfig pc = cfg.paths(0);
    const auto kc = chaos_coefficients_mc(cfg.t, cfg.x, cfg.k, 10, cfg.u0, pc);
    for (std::uint64_t d = 0; d < 5; ++d) {
        const auto z = NoiseRealization::sample(4, 11, d);
        const auto fk = solve_fk_truncated(cfg, z.z);
        CHECK(std::abs(chaos_eval(kc.x_alpha, z.z) - fk.value) <= 3 * fk.std_error + kc.truncation_tail);
    }
}

TEST_CASE("S-transform") {
    PathConfig pc;
    pc.grid = TimeGrid::with_step(1.0, 1e-2);
    pc.n_paths = 500;
    const std::vector<double> zero{0.0};
    const auto bump = InitialCondition::gauss_bump();
    const auto s0 = s_transform_point(zero, 0.5, 0.2, bump, pc);
    CHECK(std::abs(s0.value - heat_semigroup(bump, 0.5, 0.2)) <= 3 * s0.std_error);

    SolverConfig cfg = small(1, 200);
    SpaceTimeGrid grid;
    grid.time_nodes = 4;
    grid.space_nodes = 11;
    const auto r0 = s_transform_residual(zero, cfg, grid);
    CHECK(r0.max_abs <= 1e-12);

    const std::vector<double> xi{0.5};
    const auto r = s_transform_residual(xi, cfg, grid);
    CHECK(r.nodes == 3 * 11);
    CHECK(r.mean_abs <= r.mean_budget);
}

TEST_CASE("S-transform first-order response") {
    // dS/d(eps) at eps = 0 for xi = eps e_1 and u0 = 1 is <f_1(t, x; .), e_1>
    SolverConfig cfg = small(1, 20000);
    const PathConfig pc = cfg.paths(0);
    const auto one = InitialCondition::one();
    const double eps = 0.05;
    const std::vector<double> plus{eps}, minus{-eps};
    // same paths on both sides: the finite difference is the sample mean of
    // (exp(eps c) - exp(-eps c)) / (2 eps)
    const auto sp = s_transform_point(plus, 1.0, 0.0, one, pc);
    const auto sm = s_transform_point(minus, 1.0, 0.0, one, pc);
    const double fd = (sp.value - sm.value) / (2 * eps);
    const auto proj = project_first_order_kernel(1.0, 0.0, 1, one);
    // the SE of the difference quotient is at most that of c_1 itself
    const auto kc = chaos_coefficients_mc(1.0, 0.0, 1, 1, one, pc);
    const double se = kc.std_errors.at(MultiIndex{1});
    CHECK(std::abs(fd - proj.coeffs[0]) <= 3 * se + proj.error[0] + eps * eps);
}

TEST_CASE("convergence study") {
    SolverConfig cfg = small(100, 300);
    cfg.dt = 2e-3;
    const auto z = NoiseRealization::sample(100, 2, 0);
    const std::vector<int> ks{25, 25, 50, 100};
    const auto rows = convergence_study(cfg, ks, z.z);
    REQUIRE(rows.size() == 4);
    CHECK_FALSE(rows[0].gap.has_value());
    CHECK(*rows[1].gap == 0.0);
    const std::vector<int> bad{50, 25};
    CHECK_THROWS(convergence_study(cfg, bad, z.z));
}

TEST_CASE("determinism across worker counts") {
    SolverConfig cfg = small(12, 3000);
    const auto z = NoiseRealization::sample(12, 1, 0);
    cfg.threads = 1;
    const auto a = solve_fk_truncated(cfg, z.z);
    cfg.threads = 3;
    const auto b = solve_fk_truncated(cfg, z.z);
    CHECK(std::memcmp(&a.value, &b.value, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.std_error, &b.std_error, sizeof(double)) == 0);

    cfg.n_noise = 20;
    cfg.n_paths = 100;
    cfg.threads = 1;
    const auto m1 = mean_field(cfg);
    cfg.threads = 4;
    const auto m4 = mean_field(cfg);
    CHECK(std::memcmp(&m1.value, &m4.value, sizeof(double)) == 0);
}
