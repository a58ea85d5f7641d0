#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "shefk/hermite.hpp"
#include "shefk/paths.hpp"
#include "shefk/stats.hpp"

using namespace shefk;

TEST_CASE("time grid") {
    const TimeGrid g(1.0, 1000);
    CHECK(g.dt() == doctest::Approx(1e-3));
    CHECK(g.at(0) == 0.0);
    CHECK(g.at(1000) == 1.0);
    const TimeGrid h = TimeGrid::with_step(0.5, 1e-3);
    CHECK(h.steps == 500);
    CHECK_THROWS(TimeGrid(0.0, 10));
    CHECK_THROWS(TimeGrid(1.0, 0));
}

TEST_CASE("paths start at x") {
    RngStream s(3, StreamRole::brownian, 0);
    const auto p = sample_path(2.0, TimeGrid(1.0, 100), s);
    REQUIRE(p.values.size() == 101);
    CHECK(p.values[0] == 2.0);
}

TEST_CASE("terminal law of B_1") {
    const TimeGrid g(1.0, 100);
    std::vector<double> terminal(20000);
    for (std::size_t i = 0; i < terminal.size(); ++i) {
        RngStream s(11, StreamRole::brownian, i);
        terminal[i] = sample_path(0.0, g, s).terminal();
    }
    const auto m = sample_moments(terminal);
    // 20000 samples: SE(mean) ~ 0.007, SE(var) ~ 0.01
    CHECK(std::abs(m.mean) < 0.03);
    CHECK(std::abs(m.variance - 1.0) < 0.04);
}

TEST_CASE("frozen path functionals") {
    const TimeGrid g(1.0, 1000);
    const auto p = frozen_path(0.0, g);
    const auto c = basis_time_integrals(p, 3);
    CHECK(c[0] == doctest::Approx(std::pow(std::numbers::pi, -0.25)).epsilon(1e-12));
    CHECK(c[0] == doctest::Approx(0.751126).epsilon(1e-6));
    CHECK(c[1] == doctest::Approx(0.0));

    BinSpec bins;
    bins.width = 0.1;
    const auto h = local_time_histogram(p, bins);
    std::size_t nonzero = 0;
    double peak = 0.0;
    for (double d : h.density) {
        if (d != 0.0) ++nonzero;
        peak = std::max(peak, d);
    }
    CHECK(nonzero == 1);
    CHECK(peak == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("occupation mass equals t") {
    for (std::uint64_t i = 0; i < 5; ++i) {
        RngStream s(5, StreamRole::brownian, i);
        const auto p = sample_path(0.3, TimeGrid(0.7, 700), s);
        BinSpec bins;
        CHECK(std::abs(local_time_histogram(p, bins).total_mass() - 0.7) < 1e-9);
        bins.lower = -0.1;
        bins.upper = 0.1;  // narrower than the path: widened
        CHECK(std::abs(local_time_histogram(p, bins).total_mass() - 0.7) < 1e-9);
    }
}

TEST_CASE("c_1 respects the sup bound") {
    const double bound = std::pow(std::numbers::pi, -0.25);
    for (std::uint64_t i = 0; i < 20; ++i) {
        RngStream s(8, StreamRole::brownian, i);
        const auto c = basis_time_integrals(sample_path(0.0, TimeGrid(2.0, 400), s), 1);
        CHECK(std::abs(c[0]) <= 2.0 * bound + 1e-12);
    }
}

TEST_CASE("Parseval partial sums are nondecreasing and nonnegative") {
    RngStream s(2, StreamRole::brownian, 0);
    const auto p = sample_path(0.0, TimeGrid(1.0, 1000), s);
    const auto c = basis_time_integrals(p, 100);
    double prev = 0.0;
    for (std::size_t k = 1; k <= 100; ++k) {
        const double v = parseval_sum(c, k);
        CHECK(v >= prev);
        prev = v;
    }
    const auto a = alpha(p, 100, BinSpec{});
    CHECK(a.parseval == doctest::Approx(prev));
    CHECK(a.histogram > 0.0);
}

TEST_CASE("Bessel bound and closeness of the two alpha estimators") {
    const TimeGrid g(1.0, 1000);
    std::vector<double> gaps;
    for (std::uint64_t i = 0; i < 20; ++i) {
        RngStream s(1, StreamRole::brownian, i, 77);
        const auto a = alpha(sample_path(0.0, g, s), 400, BinSpec{});
        CHECK(a.parseval <= 1.1 * a.histogram);
        gaps.push_back(std::abs(a.parseval - a.histogram) / a.histogram);
    }
    std::sort(gaps.begin(), gaps.end());
    CHECK(gaps[gaps.size() / 2] < 0.1);
}

TEST_CASE("quadrature of c_j against a fine oracle on a smooth path") {
    // deterministic path B_s = sin(3s); trapezoid vs Simpson on a 10x finer grid
    const TimeGrid coarse(1.0, 2000), fine(1.0, 20000);
    BrownianPath a{0.0, coarse, {}}, b{0.0, fine, {}};
    for (std::size_t m = 0; m <= coarse.steps; ++m) a.values.push_back(std::sin(3 * coarse.at(m)));
    for (std::size_t m = 0; m <= fine.steps; ++m) b.values.push_back(std::sin(3 * fine.at(m)));
    const auto ca = basis_time_integrals(a, 6);
    std::vector<double> simpson(6, 0.0);
    const double h = fine.dt();
    std::vector<double> e(6);
    for (std::size_t m = 0; m <= fine.steps; ++m) {
        hermite_functions(b.values[m], e);
        const double w = (m == 0 || m == fine.steps) ? 1.0 : (m % 2 ? 4.0 : 2.0);
        for (std::size_t j = 0; j < 6; ++j) simpson[j] += w * h / 3.0 * e[j];
    }
    for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(ca[j] - simpson[j]) < 1e-6);
}

TEST_CASE("path samples are reproducible and block-separated") {
    PathConfig cfg;
    cfg.grid = TimeGrid(1.0, 200);
    const auto a = simulate_path_sample(0.0, cfg, 7, 5);
    const auto b = simulate_path_sample(0.0, cfg, 7, 5);
    CHECK(a.terminal == b.terminal);
    CHECK(a.coeffs == b.coeffs);
    cfg.block = 1;
    const auto c = simulate_path_sample(0.0, cfg, 7, 5);
    CHECK(c.terminal != a.terminal);
}

TEST_CASE("bin spec validation") {
    BinSpec b;
    b.width = 0.0;
    CHECK_THROWS(b.validate());
    b = BinSpec{};
    b.lower = 1.0;
    b.upper = 0.0;
    CHECK_THROWS(b.validate());
}
