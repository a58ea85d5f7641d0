#include "shefk/pde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "shefk/hermite.hpp"
#include "shefk/kernels.hpp"
#include "shefk/parallel.hpp"

namespace shefk {

namespace {

std::size_t nodes(double half, double h) {
    const double n = 2.0 * half / h;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
        throw std::domain_error("PdeGrid: step must divide the window");
    }
    return static_cast<std::size_t>(r) + 1;
}

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

std::size_t node_of(double value, double half, double h, std::size_t n) {
    const double pos = (value + half) / h;
    const double r = std::round(pos);
    if (std::abs(pos - r) > 1e-7 || r < 0.0 || r >= static_cast<double>(n)) {
        throw std::domain_error("PdeField: coordinate is not a grid node");
    }
    return static_cast<std::size_t>(r);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void PdeGrid::validate() const {
    if (k < 1 || k > 2) throw std::domain_error("PdeGrid: K must be 1 or 2");
    if (!(x_half > 0.0) || !(z_half > 0.0)) throw std::domain_error("PdeGrid: windows must be positive");
    if (!(h_x > 0.0) || !(h_z > 0.0)) throw std::domain_error("PdeGrid: steps must be positive");
    if (nx() < 3 || nz() < 3) throw std::domain_error("PdeGrid: need at least 3 nodes per axis");
    if (dt < 0.0) throw std::domain_error("PdeGrid: dt must be >= 0");
    if (dt > 0.0 && dt > stable_dt() * (1.0 + 1e-12)) {
        throw std::domain_error("PdeGrid: dt violates the explicit stability bound");
    }
}

std::size_t PdeGrid::nx() const { return nodes(x_half, h_x); }
std::size_t PdeGrid::nz() const { return nodes(z_half, h_z); }

double PdeGrid::stable_dt() const {
    double rate = 1.0 / (h_x * h_x);
    if (potential) {
        std::vector<double> e(static_cast<std::size_t>(k));
        std::vector<double> sup(e.size(), 0.0);
        for (std::size_t i = 0; i < nx(); ++i) {
            hermite_functions(x_at(i), e);
            for (std::size_t j = 0; j < e.size(); ++j) sup[j] = std::max(sup[j], std::abs(e[j]));
        }
        for (double s : sup) rate += s / h_z;
    }
    return 0.9 / rate;
}

PdeGrid PdeGrid::refined() const {
    PdeGrid g = *this;
    g.h_x *= 0.5;
    g.h_z *= 0.5;
    g.dt = 0.0;
    return g;
}

std::size_t PdeField::index(std::size_t ix, std::span<const std::size_t> iz) const {
    if (iz.size() != static_cast<std::size_t>(grid.k)) throw std::domain_error("PdeField: wrong z dimension");
    std::size_t idx = ix;
    for (std::size_t z : iz) idx = idx * grid.nz() + z;
    return idx;
}

double PdeField::u_at(std::size_t ix, std::span<const std::size_t> iz) const {
    double r2 = 0.0;
    for (std::size_t z : iz) r2 += grid.z_at(z) * grid.z_at(z);
    return v_at(ix, iz) * std::exp(0.5 * r2);
}

double PdeField::u_at(double x, std::span<const double> z) const {
    if (z.size() != static_cast<std::size_t>(grid.k)) throw std::domain_error("PdeField: wrong z dimension");
    const std::size_t ix = node_of(x, grid.x_half, grid.h_x, grid.nx());
    std::vector<std::size_t> iz(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) iz[j] = node_of(z[j], grid.z_half, grid.h_z, grid.nz());
    return u_at(ix, iz);
}

void PdeField::write_csv(std::ostream& os) const {
    os << 'x';
    for (int j = 1; j <= grid.k; ++j) os << ",z" << j;
    os << ",v,u\n";
    const std::size_t nx = grid.nx(), nz = grid.nz(), nzk = ipow(nz, grid.k);
    std::vector<std::size_t> iz(static_cast<std::size_t>(grid.k));
    os.precision(17);
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t f = 0; f < nzk; ++f) {
            std::size_t rest = f;
            for (std::size_t j = iz.size(); j-- > 0;) {
                iz[j] = rest % nz;
                rest /= nz;
            }
            os << grid.x_at(ix);
            for (std::size_t z : iz) os << ',' << grid.z_at(z);
            os << ',' << v_at(ix, iz) << ',' << u_at(ix, iz) << '\n';
        }
    }
}

PdeField solve_reduced_pde(const InitialCondition& u0, const PdeGrid& grid, double t) {
    grid.validate();
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::domain_error("solve_reduced_pde: t must be finite and >= 0");

    const std::size_t nx = grid.nx(), nz = grid.nz();
    const auto kk = static_cast<std::size_t>(grid.k);
    const std::size_t nzk = ipow(nz, grid.k);

    PdeField field;
    field.grid = grid;
    field.t = t;
    field.v.resize(nx * nzk);

    std::vector<std::size_t> stride(kk);
    for (std::size_t j = 0; j < kk; ++j) stride[j] = ipow(nz, grid.k - 1 - static_cast<int>(j));

    for (std::size_t ix = 0; ix < nx; ++ix) {
        const double g = u0(grid.x_at(ix));
        for (std::size_t f = 0; f < nzk; ++f) {
            double r2 = 0.0;
            for (std::size_t j = 0; j < kk; ++j) {
                const double z = grid.z_at((f / stride[j]) % nz);
                r2 += z * z;
            }
            field.v[ix * nzk + f] = g * std::exp(-0.5 * r2);
        }
    }
    if (t == 0.0) return field;

    const double dt_max = grid.dt > 0.0 ? grid.dt : grid.stable_dt();
    field.steps = static_cast<std::size_t>(std::ceil(t / dt_max - 1e-12));
    field.dt = t / static_cast<double>(field.steps);

    // velocity of the z_j transport at each x node
    std::vector<double> velocity(nx * kk, 0.0);
    if (grid.potential) {
        std::vector<double> e(kk);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            hermite_functions(grid.x_at(ix), e);
            std::copy(e.begin(), e.end(), velocity.begin() + static_cast<std::ptrdiff_t>(ix * kk));
        }
    }

    const double dt = field.dt;
    const double diff = 0.5 * dt / (grid.h_x * grid.h_x);
    const double adv = dt / grid.h_z;
    std::vector<double> next(field.v.size(), 0.0);
    for (std::size_t step = 0; step < field.steps; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t ix = 1; ix + 1 < nx; ++ix) {
            const double* row = field.v.data() + ix * nzk;
            const double* left = row - nzk;
            const double* right = row + nzk;
            double* out = next.data() + ix * nzk;
            for (std::size_t f = 0; f < nzk; ++f) {
                bool interior = true;
                for (std::size_t j = 0; j < kk && interior; ++j) {
                    const std::size_t iz = (f / stride[j]) % nz;
                    interior = iz > 0 && iz + 1 < nz;
                }
                if (!interior) continue;
                double value = row[f] + diff * (left[f] - 2.0 * row[f] + right[f]);
                for (std::size_t j = 0; j < kk; ++j) {
                    const double a = velocity[ix * kk + j];
                    const std::size_t s = stride[j];
                    value -= a > 0.0 ? adv * a * (row[f] - row[f - s]) : adv * a * (row[f + s] - row[f]);
                }
                out[f] = value;
            }
        }
        field.v.swap(next);
    }
    return field;
}

FkPdeEstimate fk_pde_point(std::span<const double> terminals, std::span<const double> coeffs,
                           std::span<const double> z, const InitialCondition& u0) {
    const std::size_t k = z.size();
    if (k == 0 || coeffs.size() != terminals.size() * k) {
        throw std::domain_error("fk_pde_point: coefficient block does not match z");
    }
    double r2 = 0.0;
    for (double zj : z) r2 += zj * zj;
    const double lift = std::exp(0.5 * r2);
    std::vector<double> v(terminals.size());
    for (std::size_t p = 0; p < terminals.size(); ++p) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double d = z[j] - coeffs[p * k + j];
            d2 += d * d;
        }
        v[p] = u0(terminals[p]) * std::exp(-0.5 * d2);
    }
    FkPdeEstimate est;
    est.v = mean_estimate(v);
    est.u = {est.v.value * lift, est.v.std_error * lift, est.v.n};
    return est;
}

namespace {

void sample_block(double t, double x, int k, const PathConfig& paths, std::vector<double>& terminals,
                  std::vector<double>& coeffs) {
    PathConfig pc = paths;
    pc.grid = TimeGrid::with_step(t, paths.grid.dt());
    const std::size_t n = pc.n_paths;
    const auto kk = static_cast<std::size_t>(k);
    terminals.assign(n, 0.0);
    coeffs.assign(n * kk, 0.0);
    parallel_for(block_count(n), pc.threads, [&](std::size_t blk) {
        const auto range = block_range(blk, n);
        for (std::size_t p = range.begin; p < range.end; ++p) {
            const PathSample s = simulate_path_sample(x, pc, p, k);
            terminals[p] = s.terminal;
            std::copy(s.coeffs.begin(), s.coeffs.end(), coeffs.begin() + static_cast<std::ptrdiff_t>(p * kk));
        }
    });
}

}  // namespace

FkPdeEstimate fk_pde_point(double t, double x, std::span<const double> z, const InitialCondition& u0,
                           const PathConfig& paths) {
    if (z.empty() || z.size() > 2) throw std::domain_error("fk_pde_point: K must be 1 or 2");
    if (!(t >= 0.0)) throw std::domain_error("fk_pde_point: t must be >= 0");
    if (u0.is_zero()) return {{0.0, 0.0, paths.n_paths}, {0.0, 0.0, paths.n_paths}};
    if (t == 0.0) {
        double r2 = 0.0;
        for (double zj : z) r2 += zj * zj;
        return {{u0(x) * std::exp(-0.5 * r2), 0.0, 1}, {u0(x), 0.0, 1}};
    }
    std::vector<double> terminals, coeffs;
    sample_block(t, x, static_cast<int>(z.size()), paths, terminals, coeffs);
    return fk_pde_point(terminals, coeffs, z, u0);
}

PdeCheckReport pde_cross_check(const InitialCondition& u0, const PdeGrid& grid, double t,
                               std::span<const double> probe_x, std::span<const double> probe_z,
                               const PathConfig& paths) {
    if (grid.k != 1) throw std::domain_error("pde_cross_check: K must be 1");
    if (!(t > 0.0)) throw std::domain_error("pde_cross_check: t must be positive");
    if (probe_x.empty() || probe_z.empty()) throw std::domain_error("pde_cross_check: empty probe set");

    const PdeField coarse = solve_reduced_pde(u0, grid, t);
    const PdeField fine = solve_reduced_pde(u0, grid.refined(), t);
    const PdeField finest = solve_reduced_pde(u0, grid.refined().refined(), t);
    PdeGrid heat = grid;
    heat.potential = false;
    heat.dt = 0.0;
    const PdeField control = solve_reduced_pde(u0, heat, t);

    PdeCheckReport report;
    std::vector<double> terminals, coeffs;
    std::vector<double> gaps, gaps_fine;
    for (std::size_t i = 0; i < probe_x.size(); ++i) {
        const double x = probe_x[i];
        // one path block per probe x, shared across z
        PathConfig pc = paths;
        pc.block = paths.block + i;
        sample_block(t, x, 1, pc, terminals, coeffs);
        const double exact = heat_semigroup(u0, t, x);
        for (double z : probe_z) {
            const double zz[1] = {z};
            PdeProbe probe;
            probe.x = x;
            probe.z = z;
            probe.pde = coarse.u_at(x, zz);
            probe.pde_refined = fine.u_at(x, zz);
            const auto fk = fk_pde_point(terminals, coeffs, zz, u0);
            probe.fk = fk.u.value;
            probe.fk_se = fk.u.std_error;
            const double d1 = std::abs(probe.pde - probe.pde_refined);
            const double d2 = std::abs(probe.pde_refined - finest.u_at(x, zz));
            probe.observed_order = d2 > 0.0 && d1 > 0.0 ? std::clamp(std::log2(d1 / d2), 0.5, 2.0) : 1.0;
            probe.scheme_error = 1.25 * d1 / (1.0 - std::pow(2.0, -probe.observed_order));
            const double scale = std::max(std::abs(probe.fk), 1e-300);
            probe.rel_gap = std::abs(probe.pde - probe.fk) / scale;
            probe.rel_gap_refined = std::abs(probe.pde_refined - probe.fk) / scale;
            probe.within_tolerance = std::abs(probe.pde - probe.fk) <= probe.scheme_error + 3.0 * probe.fk_se;
            report.probes.push_back(probe);
            report.max_rel_gap = std::max(report.max_rel_gap, probe.rel_gap);
            if (probe.within_tolerance) ++report.within_tolerance;
            gaps.push_back(std::abs(probe.pde - probe.fk));
            gaps_fine.push_back(std::abs(probe.pde_refined - probe.fk));

            const double c = control.u_at(x, zz);
            const double denom = std::max(std::abs(exact), 1e-300);
            report.control_max_rel = std::max(report.control_max_rel, std::abs(c - exact) / denom);
        }
    }
    report.median_gap = median(gaps);
    report.median_gap_refined = median(gaps_fine);
    report.refinement_factor =
        report.median_gap_refined > 0.0 ? report.median_gap / report.median_gap_refined : INFINITY;
    return report;
}

}  // namespace shefk
