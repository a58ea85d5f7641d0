#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "shefk/initial_condition.hpp"
#include "shefk/paths.hpp"
#include "shefk/stats.hpp"

namespace shefk {

/// Box [-X, X] x [-Z, Z]^K with uniform steps. `dt = 0` picks the largest
/// stable time step.
struct PdeGrid {
    int k = 1;
    double x_half = 6.0;
    double z_half = 6.0;
    double h_x = 0.1;
    double h_z = 0.05;
    double dt = 0.0;
    bool potential = true;  // false drops the transport terms

    void validate() const;
    std::size_t nx() const;
    std::size_t nz() const;
    double x_at(std::size_t i) const { return -x_half + h_x * static_cast<double>(i); }
    double z_at(std::size_t i) const { return -z_half + h_z * static_cast<double>(i); }
    /// Largest dt with dt/h_x^2 + dt * sum_j max|e_j| / h_z <= 0.9.
    double stable_dt() const;
    /// Same box with h_x and h_z halved and dt re-derived.
    PdeGrid refined() const;
};

struct PdeField {
    PdeGrid grid;
    double t = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    std::vector<double> v;  // index (ix * nz + iz1) * nz + iz2 ...

    std::size_t index(std::size_t ix, std::span<const std::size_t> iz) const;
    double v_at(std::size_t ix, std::span<const std::size_t> iz) const { return v[index(ix, iz)]; }
    double u_at(std::size_t ix, std::span<const std::size_t> iz) const;
    /// Node lookup by coordinates; throws if (x, z) is not a grid node.
    double u_at(double x, std::span<const double> z) const;
    /// Rows "x,z1[,z2],v,u".
    void write_csv(std::ostream& os) const;
};

/// Explicit scheme for v_t = v_xx / 2 - sum_j e_j(x) dv/dz_j with
/// v(0, x, z) = u0(x) exp(-|z|^2 / 2) and v = 0 on the box boundary.
PdeField solve_reduced_pde(const InitialCondition& u0, const PdeGrid& grid, double t);

struct FkPdeEstimate {
    FieldEstimate v;
    FieldEstimate u;  // v * exp(|z|^2 / 2)
};

/// v(t, x, z) = E^B[u0(B_t^x) exp(-|z - c|^2 / 2)], c_j = int_0^t e_j(B_s) ds.
FkPdeEstimate fk_pde_point(double t, double x, std::span<const double> z, const InitialCondition& u0,
                           const PathConfig& paths);

/// Same estimator over precomputed per-path (terminal, c) with K = z.size().
FkPdeEstimate fk_pde_point(std::span<const double> terminals, std::span<const double> coeffs,
                           std::span<const double> z, const InitialCondition& u0);

/// PDE-vs-Feynman-Kac comparison for K = 1 on a probe set of grid nodes.
struct PdeProbe {
    double x = 0.0;
    double z = 0.0;
    double pde = 0.0;         // u from the grid
    double pde_refined = 0.0; // u from the refined grid
    double fk = 0.0;
    double fk_se = 0.0;
    double observed_order = 0.0;
    /// Three-grid estimate of |pde - exact|: 1.25 |pde - pde_refined| / (1 - 2^-p)
    /// with p the observed order (clamped to [0.5, 2]).
    double scheme_error = 0.0;
    double rel_gap = 0.0;       // |pde - fk| / |fk|
    double rel_gap_refined = 0.0;
    bool within_tolerance = false;  // |pde - fk| <= scheme_error + 3 SE
};

struct PdeCheckReport {
    std::vector<PdeProbe> probes;
    double control_max_rel = 0.0;  // potential-free run vs P_t u0 over the probes
    double max_rel_gap = 0.0;
    double median_gap = 0.0;
    double median_gap_refined = 0.0;
    double refinement_factor = 0.0;  // median_gap / median_gap_refined
    std::size_t within_tolerance = 0;
};

PdeCheckReport pde_cross_check(const InitialCondition& u0, const PdeGrid& grid, double t,
                               std::span<const double> probe_x, std::span<const double> probe_z,
                               const PathConfig& paths);

}  // namespace shefk
