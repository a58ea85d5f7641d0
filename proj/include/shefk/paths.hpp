#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "shefk/rng.hpp"

namespace shefk {

/// Uniform grid s_m = m * dt, m = 0..steps, on [0, horizon].
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 1000;

    TimeGrid() = default;
    TimeGrid(double horizon, std::size_t steps);

    /// Grid with spacing as close to `dt` as an integer step count allows.
    static TimeGrid with_step(double horizon, double dt);

    double dt() const { return horizon / static_cast<double>(steps); }
    double at(std::size_t m) const { return horizon * static_cast<double>(m) / static_cast<double>(steps); }
};

struct BrownianPath {
    double start = 0.0;
    TimeGrid grid;
    std::vector<double> values;  // steps + 1 entries, values[0] == start

    double terminal() const { return values.back(); }
};

/// Binning for the occupation-time histogram. Without an explicit window the
/// bins are fitted to the path range padded by `padding_bins` bins each side.
struct BinSpec {
    double width = 0.02;
    int padding_bins = 3;
    std::optional<double> lower;
    std::optional<double> upper;

    void validate() const;
};

/// Local-time density estimate: density[i] is occupation time of bin i over width.
struct LocalTimeHistogram {
    double lower = 0.0;
    double width = 0.0;
    std::vector<double> density;

    double center(std::size_t i) const { return lower + (static_cast<double>(i) + 0.5) * width; }
    double total_mass() const;
    /// sum_i density_i^2 * width, the histogram estimate of alpha_t.
    double l2_norm_sq() const;
};

struct AlphaEstimates {
    double parseval = 0.0;
    double histogram = 0.0;
};

struct PathFunctionals {
    std::vector<double> coeffs;  // c_j, j = 1..K
    LocalTimeHistogram local_time;
    double alpha_hist = 0.0;
    double alpha_parseval = 0.0;
    double terminal = 0.0;
};

/// Independent N(0, dt) increments from `stream`, anchored at x.
BrownianPath sample_path(double x, const TimeGrid& grid, RngStream& stream);

/// Path frozen at x (all increments zero). Test fixture.
BrownianPath frozen_path(double x, const TimeGrid& grid);

/// c_j = int_0^t e_j(B_s) ds by composite trapezoid on the path grid.
std::vector<double> basis_time_integrals(const BrownianPath& path, int k);

/// Occupation-time histogram with the left-endpoint rule.
LocalTimeHistogram local_time_histogram(const BrownianPath& path, const BinSpec& bins);

/// sum_{j <= k} c_j^2 over a prefix of coeffs.
double parseval_sum(std::span<const double> coeffs, std::size_t k);

AlphaEstimates alpha(const BrownianPath& path, int k, const BinSpec& bins);

PathFunctionals compute_functionals(const BrownianPath& path, int k, const BinSpec& bins);

/// How Brownian samples are drawn for a Monte Carlo estimate. Path i of a
/// run uses the stream (seed, brownian, i, block); `block` separates
/// otherwise independent groups of paths that share a seed.
struct PathConfig {
    TimeGrid grid;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    std::uint64_t block = 0;
    unsigned threads = 1;
};

/// The per-path quantities every estimator in the library consumes.
struct PathSample {
    double terminal = 0.0;
    std::vector<double> coeffs;  // c_1 .. c_K
    double alpha_hist = 0.0;     // filled only when bins are requested
};

PathSample simulate_path_sample(double x, const PathConfig& cfg, std::size_t index, int k,
                                const BinSpec* bins = nullptr);

}  // namespace shefk
