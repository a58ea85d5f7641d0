#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shefk/stats.hpp"

namespace shefk {

/// Finitely supported sequence alpha = (alpha_1, alpha_2, ...) of
/// nonnegative integers. Stored with trailing zeros trimmed, so two equal
/// multi-indices always compare equal entry by entry.
class MultiIndex {
public:
    MultiIndex() = default;
    MultiIndex(std::initializer_list<unsigned> entries);
    explicit MultiIndex(std::vector<unsigned> entries);

    /// delta_j, the multi-index with a single 1 at (1-based) position j.
    static MultiIndex unit(int j);

    /// alpha_j for 1-based j; zero beyond the support.
    unsigned operator[](int j) const;
    /// 0-based view of the trimmed entries.
    const std::vector<unsigned>& entries() const { return entries_; }

    unsigned order() const;
    /// Largest j with alpha_j > 0 (0 for the zero multi-index).
    int support() const { return static_cast<int>(entries_.size()); }
    bool is_zero() const { return entries_.empty(); }
    /// alpha! = prod_j alpha_j!
    double factorial() const;

    MultiIndex operator+(const MultiIndex& other) const;
    /// Copy with entries beyond position k removed.
    MultiIndex truncated(int k) const;

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

private:
    void trim();
    std::vector<unsigned> entries_;
};

/// Graded lexicographic order: by |alpha| first, then entrywise.
struct GradedLexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const;
};

/// Calls f(alpha) for every alpha with support <= k and |alpha| <= n, in
/// graded lexicographic order.
void for_each_multi_index(int k, int n, const std::function<void(const MultiIndex&)>& f);

/// Number of multi-indices with support <= k and |alpha| <= n: C(k+n, n).
std::size_t multi_index_count(int k, int n);

/// A sample of (Z_1, ..., Z_K), i.i.d. standard Gaussians.
struct NoiseRealization {
    std::vector<double> z;
    std::uint64_t seed = 0;
    std::uint64_t draw = 0;

    static NoiseRealization sample(int k, std::uint64_t seed, std::uint64_t draw);
    std::size_t size() const { return z.size(); }
    /// First k coordinates, sharing the same (seed, draw) metadata.
    NoiseRealization prefix(int k) const;
};

/// Finite Cameron-Martin series X = sum_alpha x_alpha H_alpha(Z).
class ChaosExpansion {
public:
    using Terms = std::map<MultiIndex, double, GradedLexLess>;

    ChaosExpansion() = default;
    ChaosExpansion(int basis_bound, int degree_bound);

    /// Adds c to the coefficient of alpha; widens the declared bounds if needed.
    void add(const MultiIndex& alpha, double c);
    void set(const MultiIndex& alpha, double c);
    double coefficient(const MultiIndex& alpha) const;

    const Terms& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    int basis_bound() const { return basis_bound_; }
    int degree_bound() const { return degree_bound_; }

    /// E[X^2] = sum_alpha x_alpha^2 alpha!
    double l2_norm_sq() const;
    /// sum over terms with |alpha| <= n of x_alpha^2 alpha!
    double l2_norm_sq_up_to(unsigned n) const;

    friend bool operator==(const ChaosExpansion&, const ChaosExpansion&) = default;

private:
    Terms terms_;
    int basis_bound_ = 0;
    int degree_bound_ = 0;
};

/// H_alpha(z) = prod_j He_{alpha_j}(z_j).
double wick_polynomial(const MultiIndex& alpha, std::span<const double> z);

double chaos_eval(const ChaosExpansion& x, std::span<const double> z);

/// (X <> Y)_gamma = sum_{alpha + beta = gamma} x_alpha y_beta.
ChaosExpansion wick_product(const ChaosExpansion& x, const ChaosExpansion& y);

/// Truncated chaos expansion of exp(sum_j c_j Z_j - |c|^2 / 2):
/// x_alpha = prod_j c_j^{alpha_j} / alpha_j! for |alpha| <= n.
ChaosExpansion wick_exponential(std::span<const double> c, int n);

/// L^2 mass of the terms wick_exponential drops: e^s - sum_{m<=n} s^m/m!, s = |c|^2.
double wick_exponential_tail(std::span<const double> c, int n);

/// Gamma(A_k): keeps exactly the terms supported in the first k coordinates.
ChaosExpansion second_quantization(const ChaosExpansion& x, int k);

/// Monte Carlo estimate of E[X | Z_1..Z_kp = z_cond] for X given as an
/// evaluator on full noise vectors of length k_big. Coordinates beyond kp are
/// resampled from the (seed, point_id) stream.
FieldEstimate conditional_expectation_mc(const std::function<double(std::span<const double>)>& x,
                                         std::span<const double> z_cond, int k_big, std::size_t samples,
                                         std::uint64_t seed, std::uint64_t point_id);

/// Line format: header "# chaos K=<k> N=<n>", then one "a1,a2,...,am : coeff"
/// line per term (trailing zeros omitted; the zero index is written "0").
std::string to_text(const ChaosExpansion& x);
ChaosExpansion from_text(std::string_view text);

std::string to_string(const MultiIndex& alpha);
MultiIndex parse_multi_index(std::string_view text);

}  // namespace shefk
