#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "shefk/initial_condition.hpp"
#include "shefk/paths.hpp"
#include "shefk/stats.hpp"

namespace shefk {

struct SolverConfig {
    double t = 1.0;
    double x = 0.0;
    int k = 50;
    std::size_t n_paths = 10000;  // B-side sample size
    std::size_t n_noise = 1000;   // W-side sample size
    double dt = 1e-3;
    BinSpec bins;
    int degree = 12;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    InitialCondition u0 = InitialCondition::one();

    void validate() const;
    TimeGrid grid() const { return TimeGrid::with_step(t, dt); }
    /// Path sampling for block `block` (0 is the shared block used by the
    /// fixed-noise solvers; per-draw blocks start at 1).
    PathConfig paths(std::uint64_t block = 0) const;
};

/// Per-path functionals of a batch of Brownian paths started at cfg.x.
class PathEnsemble {
public:
    PathEnsemble(const SolverConfig& cfg, std::uint64_t block, bool with_local_time);

    std::size_t size() const { return terminal_.size(); }
    int k() const { return k_; }
    double terminal(std::size_t p) const { return terminal_[p]; }
    std::span<const double> coeffs(std::size_t p) const {
        return {coeffs_.data() + p * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
    }
    double alpha_hist(std::size_t p) const { return alpha_hist_.at(p); }
    bool has_local_time() const { return !alpha_hist_.empty(); }

private:
    int k_;
    std::vector<double> terminal_;
    std::vector<double> coeffs_;
    std::vector<double> alpha_hist_;
};

/// Psi^K = sum_j z_j c_j - |c|^2 / 2 and its local-time limit variant.
struct PsiSample {
    double psi_k = 0.0;
    double psi_limit = 0.0;
    double sigma2 = 0.0;  // sum_j c_j^2
};

PsiSample psi_sample(std::span<const double> coeffs, std::span<const double> z, double alpha_hist = 0.0);

/// u^K_{t,x}(z) = E^B[u0(B_t^x) exp(Psi^K)].
FieldEstimate solve_fk_truncated(const SolverConfig& cfg, std::span<const double> z);
FieldEstimate solve_fk_truncated(const PathEnsemble& paths, const InitialCondition& u0,
                                 std::span<const double> z);

/// Same estimator with the drift replaced by the histogram local-time
/// estimate of alpha_t; the stochastic-integral part stays truncated at K.
FieldEstimate solve_fk_limit(const SolverConfig& cfg, std::span<const double> z);
FieldEstimate solve_fk_limit(const PathEnsemble& paths, const InitialCondition& u0, std::span<const double> z);

/// E^W[u^K_{t,x}]: n_noise independent noise draws, each with its own block
/// of n_paths Brownian paths.
FieldEstimate mean_field(const SolverConfig& cfg);

/// Sample law of Psi^K over noise draws for one fixed path, compared with
/// N(-sigma^2/2, sigma^2). z-scores are deviations in standard errors.
struct PsiLawReport {
    double sigma2 = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double mean_se = 0.0;
    double z_mean = 0.0;
    double z_variance = 0.0;
    double z_skewness = 0.0;
    double z_kurtosis = 0.0;
    double z_drift_consistency = 0.0;  // sample mean vs -sample variance / 2
    std::size_t draws = 0;
};

PsiLawReport psi_conditional_law_check(std::span<const double> coeffs, std::size_t m, std::uint64_t seed,
                                       unsigned threads = 1);

/// E^W[(u^K)^q] = E^B[prod_i u0(B^(i)_t) exp(sum_{i<j} sum_k c_k^(i) c_k^(j))]
/// over n_paths independent q-tuples of paths.
FieldEstimate moment_fk(int q, const SolverConfig& cfg);

/// Direct route: the q-th power of the solver output averaged over n_noise
/// draws. For q = 2 the nested-sampling bias (within-draw variance over
/// n_paths) is subtracted sample by sample.
struct EmpiricalMoment {
    FieldEstimate raw;
    FieldEstimate corrected;
    bool bias_corrected = false;
    double mean_bias = 0.0;
};

EmpiricalMoment empirical_moment(int q, const SolverConfig& cfg);

/// Space-time grid for the mild-equation check: time nodes evenly spaced on
/// [0, t] (both ends included), space nodes evenly spaced on [-L, L].
struct SpaceTimeGrid {
    std::size_t time_nodes = 12;
    std::size_t space_nodes = 41;
    double half_width = 5.0;
};

/// S_{t,x}(xi) = E^B[u0(B_t^x) exp(sum_j xi_j c_j)].
FieldEstimate s_transform_point(std::span<const double> xi, double t, double x, const InitialCondition& u0,
                                const PathConfig& paths);

struct StransformReport {
    double max_abs = 0.0;
    double mean_abs = 0.0;
    double max_budget = 0.0;
    double mean_budget = 0.0;
    double max_std_error = 0.0;
    double mean_std_error = 0.0;  // over the residual nodes
    double max_quadrature_error = 0.0;
    std::size_t nodes = 0;  // residual nodes checked (t > 0)
    std::size_t nodes_within_budget = 0;
};

StransformReport s_transform_residual(std::span<const double> xi, const SolverConfig& cfg,
                                      const SpaceTimeGrid& grid = {});

/// u^K for each K in an increasing list, sharing one path ensemble and the
/// prefixes of one noise vector of length max K.
struct ConvergenceRow {
    int k = 0;
    FieldEstimate estimate;
    std::optional<double> gap;  // |u^{K_i} - u^{K_{i-1}}|
};

std::vector<ConvergenceRow> convergence_study(const SolverConfig& cfg, std::span<const int> k_list,
                                              std::span<const double> z);
std::vector<ConvergenceRow> convergence_study(const PathEnsemble& paths, const InitialCondition& u0,
                                              std::span<const int> k_list, std::span<const double> z);

}  // namespace shefk
