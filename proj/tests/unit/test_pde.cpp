#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "shefk/kernels.hpp"
#include "shefk/pde.hpp"
#include "shefk/solver.hpp"

using namespace shefk;

namespace {

PdeGrid coarse_grid() {
    PdeGrid g;
    g.k = 1;
    g.h_x = 0.2;
    g.h_z = 0.1;
    return g;
}

PathConfig paths(std::size_t n) {
    PathConfig pc;
    pc.grid = TimeGrid::with_step(0.5, 2e-3);
    pc.n_paths = n;
    pc.seed = 4;
    return pc;
}

}  // namespace

TEST_CASE("grid validation and stability bound") {
    PdeGrid g = coarse_grid();
    CHECK_NOTHROW(g.validate());
    CHECK(g.nx() == 61);
    CHECK(g.nz() == 121);
    const double sup = std::pow(std::numbers::pi, -0.25);
    CHECK(g.stable_dt() == doctest::Approx(0.9 / (1 / 0.04 + sup / 0.1)).epsilon(1e-3));
    g.dt = 2 * g.stable_dt();
    CHECK_THROWS_AS(g.validate(), std::domain_error);
    g = coarse_grid();
    g.k = 3;
    CHECK_THROWS(g.validate());
    g = coarse_grid();
    g.h_x = 0.7;  // does not divide the window
    CHECK_THROWS(g.validate());
    CHECK_THROWS(solve_reduced_pde(InitialCondition::one(), [] {
        PdeGrid bad = coarse_grid();
        bad.dt = 1.0;
        return bad;
    }(), 0.5));
}

TEST_CASE("t = 0 reproduces the initial datum") {
    const auto u0 = InitialCondition::gauss_bump();
    for (int k : {1, 2}) {
        PdeGrid g = coarse_grid();
        g.k = k;
        g.h_z = 0.5;
        const auto f = solve_reduced_pde(u0, g, 0.0);
        std::vector<std::size_t> iz(static_cast<std::size_t>(k), 3);
        for (std::size_t ix = 0; ix < g.nx(); ix += 7) {
            CHECK(f.u_at(ix, iz) == doctest::Approx(u0(g.x_at(ix))).epsilon(1e-14));
        }
    }
}

TEST_CASE("potential off gives the heat semigroup") {
    PdeGrid g = coarse_grid();
    g.potential = false;
    const auto u0 = InitialCondition::cosine_bounded();
    double worst_coarse = 0.0, worst_fine = 0.0;
    const auto fc = solve_reduced_pde(u0, g, 0.5);
    const auto ff = solve_reduced_pde(u0, g.refined(), 0.5);
    for (double x : {-1.0, 0.0, 1.0}) {
        for (double z : {-1.0, 0.0, 0.5}) {
            const double zz[1] = {z};
            const double exact = heat_semigroup(u0, 0.5, x);
            worst_coarse = std::max(worst_coarse, std::abs(fc.u_at(x, zz) - exact));
            worst_fine = std::max(worst_fine, std::abs(ff.u_at(x, zz) - exact));
        }
    }
    CHECK(worst_coarse < 5e-3);
    // C (h_x^2 + dt) halves at least by a factor near 4 in h_x^2 and 4 in dt
    CHECK(worst_fine < worst_coarse / 3);
}

TEST_CASE("K = 2 runs and stays bounded") {
    PdeGrid g;
    g.k = 2;
    g.x_half = 4.0;
    g.z_half = 4.0;
    g.h_x = 0.25;
    g.h_z = 0.25;
    const auto f = solve_reduced_pde(InitialCondition::one(), g, 0.2);
    double vmax = 0.0;
    for (double v : f.v) vmax = std::max(vmax, v);
    CHECK(vmax <= 1.0 + 1e-12);
    const double z[2] = {0.0, 0.0};
    const auto fk = fk_pde_point(0.2, 0.0, z, InitialCondition::one(), paths(4000));
    CHECK(std::abs(f.u_at(0.0, z) - fk.u.value) < 0.05);
}

TEST_CASE("Feynman-Kac point estimator") {
    const double z[1] = {0.3};
    const auto zero = fk_pde_point(0.5, 0.0, z, InitialCondition::zero(), paths(100));
    CHECK(zero.v.value == 0.0);
    CHECK(zero.u.value == 0.0);
    const auto one = fk_pde_point(0.5, 0.0, z, InitialCondition::one(), paths(2000));
    CHECK(one.v.value <= 1.0);
    CHECK(one.u.value == doctest::Approx(one.v.value * std::exp(0.045)));
    const double z3[3] = {0, 0, 0};
    CHECK_THROWS(fk_pde_point(0.5, 0.0, z3, InitialCondition::one(), paths(10)));
}

TEST_CASE("substitution identity with shared paths") {
    SolverConfig cfg;
    cfg.t = 0.5;
    cfg.k = 1;
    cfg.n_paths = 3000;
    cfg.dt = 2e-3;
    cfg.u0 = InitialCondition::indicator(-1.0, 0.5);
    const PathEnsemble ens(cfg, 0, false);
    std::vector<double> terminals(ens.size()), coeffs(ens.size());
    for (std::size_t p = 0; p < ens.size(); ++p) {
        terminals[p] = ens.terminal(p);
        coeffs[p] = ens.coeffs(p)[0];
    }
    for (double zv : {-1.2, 0.0, 0.8}) {
        const double z[1] = {zv};
        const auto a = solve_fk_truncated(ens, cfg.u0, z);
        const auto b = fk_pde_point(terminals, coeffs, z, cfg.u0);
        CHECK(a.value == doctest::Approx(b.u.value).epsilon(1e-12));
        CHECK(std::abs(a.value - b.u.value) <= 3 * a.std_error);
    }
    // at z = 0 the PDE route is exactly the truncated solver
    const double z0[1] = {0.0};
    CHECK(fk_pde_point(terminals, coeffs, z0, cfg.u0).u.value ==
          doctest::Approx(solve_fk_truncated(ens, cfg.u0, z0).value).epsilon(1e-14));
}

TEST_CASE("PDE against Feynman-Kac on a coarse grid") {
    const std::vector<double> px{-0.4, 0.0, 0.4}, pz{-0.5, 0.0, 0.5};
    const auto r = pde_cross_check(InitialCondition::one(), coarse_grid(), 0.5, px, pz, paths(20000));
    CHECK(r.probes.size() == 9);
    CHECK(r.max_rel_gap < 0.03);
    CHECK(r.refinement_factor > 1.5);
    CHECK(r.within_tolerance >= 8);
}

TEST_CASE("field CSV") {
    PdeGrid g = coarse_grid();
    g.x_half = 1.0;
    g.z_half = 1.0;
    g.h_x = 0.5;
    g.h_z = 0.5;
    const auto f = solve_reduced_pde(InitialCondition::one(), g, 0.1);
    std::ostringstream os;
    f.write_csv(os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,z1,v,u");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5 * 5);
}
