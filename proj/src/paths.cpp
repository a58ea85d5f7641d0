#include "shefk/paths.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shefk/hermite.hpp"

namespace shefk {

TimeGrid::TimeGrid(double t, std::size_t m) : horizon(t), steps(m) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("TimeGrid: horizon must be positive");
    if (m == 0) throw std::domain_error("TimeGrid: steps must be positive");
}

TimeGrid TimeGrid::with_step(double t, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("TimeGrid: dt must be positive");
    const auto m = static_cast<std::size_t>(std::max(1.0, std::round(t / dt)));
    return TimeGrid(t, m);
}

void BinSpec::validate() const {
    if (!(width > 0.0) || !std::isfinite(width)) throw std::domain_error("BinSpec: width must be positive");
    if (padding_bins < 0) throw std::domain_error("BinSpec: negative padding");
    if (lower.has_value() != upper.has_value()) throw std::domain_error("BinSpec: window needs both ends");
    if (lower && !(*upper > *lower)) throw std::domain_error("BinSpec: empty window");
}

double LocalTimeHistogram::total_mass() const {
    double sum = 0.0;
    for (double d : density) sum += d;
    return sum * width;
}

double LocalTimeHistogram::l2_norm_sq() const {
    double sum = 0.0;
    for (double d : density) sum += d * d;
    return sum * width;
}

BrownianPath sample_path(double x, const TimeGrid& grid, RngStream& stream) {
    BrownianPath path{x, grid, std::vector<double>(grid.steps + 1)};
    const double sd = std::sqrt(grid.dt());
    double b = x;
    path.values[0] = b;
    for (std::size_t m = 1; m <= grid.steps; ++m) {
        b += sd * stream.normal();
        path.values[m] = b;
    }
    return path;
}

BrownianPath frozen_path(double x, const TimeGrid& grid) {
    return BrownianPath{x, grid, std::vector<double>(grid.steps + 1, x)};
}

std::vector<double> basis_time_integrals(const BrownianPath& path, int k) {
    if (k < 1) throw std::domain_error("basis_time_integrals: K must be >= 1");
    const auto kk = static_cast<std::size_t>(k);
    const double dt = path.grid.dt();
    const std::size_t last = path.values.size() - 1;
    std::vector<double> coeffs(kk, 0.0);
    std::vector<double> basis(kk);
    for (std::size_t m = 0; m <= last; ++m) {
        const double w = (m == 0 || m == last) ? 0.5 * dt : dt;
        hermite_functions(path.values[m], basis);
        for (std::size_t j = 0; j < kk; ++j) coeffs[j] += w * basis[j];
    }
    return coeffs;
}

LocalTimeHistogram local_time_histogram(const BrownianPath& path, const BinSpec& bins) {
    bins.validate();
    const std::size_t samples = path.values.size() - 1;  // left endpoints s_0 .. s_{M-1}
    const auto [min_it, max_it] = std::minmax_element(path.values.begin(), path.values.begin() + static_cast<std::ptrdiff_t>(samples));
    const double pad = bins.padding_bins * bins.width;
    double lo = *min_it - pad;
    double hi = *max_it + pad;
    if (bins.lower) {
        // Expand an explicit window that does not cover the path.
        lo = std::min(*bins.lower, lo + pad);
        hi = std::max(*bins.upper, hi - pad);
    }
    const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / bins.width)) + 1;

    LocalTimeHistogram hist{lo, bins.width, std::vector<double>(count, 0.0)};
    const double dt = path.grid.dt();
    const double weight = dt / bins.width;
    for (std::size_t m = 0; m < samples; ++m) {
        const auto i = static_cast<std::size_t>(std::floor((path.values[m] - lo) / bins.width));
        hist.density[std::min(i, count - 1)] += weight;
    }
    return hist;
}

double parseval_sum(std::span<const double> coeffs, std::size_t k) {
    const std::size_t n = std::min(k, coeffs.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += coeffs[j] * coeffs[j];
    return sum;
}

AlphaEstimates alpha(const BrownianPath& path, int k, const BinSpec& bins) {
    const auto coeffs = basis_time_integrals(path, k);
    return {parseval_sum(coeffs, coeffs.size()), local_time_histogram(path, bins).l2_norm_sq()};
}

PathFunctionals compute_functionals(const BrownianPath& path, int k, const BinSpec& bins) {
    PathFunctionals out;
    out.coeffs = basis_time_integrals(path, k);
    out.local_time = local_time_histogram(path, bins);
    out.alpha_hist = out.local_time.l2_norm_sq();
    out.alpha_parseval = parseval_sum(out.coeffs, out.coeffs.size());
    out.terminal = path.terminal();
    return out;
}

PathSample simulate_path_sample(double x, const PathConfig& cfg, std::size_t index, int k, const BinSpec* bins) {
    RngStream stream(cfg.seed, StreamRole::brownian, index, cfg.block);
    const BrownianPath path = sample_path(x, cfg.grid, stream);
    PathSample out;
    out.terminal = path.terminal();
    out.coeffs = basis_time_integrals(path, k);
    if (bins) out.alpha_hist = local_time_histogram(path, *bins).l2_norm_sq();
    return out;
}

}  // namespace shefk
