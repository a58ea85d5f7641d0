#pragma once

#include <cstddef>
#include <span>

namespace shefk {

/// A Monte Carlo scalar result.
struct FieldEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 1;
};

/// Sample mean with the standard error of the mean, summed in index order.
FieldEstimate mean_estimate(std::span<const double> samples);

/// Running sums merged in a fixed order.
struct SumAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    void merge(const SumAccumulator& other) {
        sum += other.sum;
        sum_sq += other.sum_sq;
        n += other.n;
    }
    FieldEstimate estimate() const;
};

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    std::size_t n = 0;
};

SampleMoments sample_moments(std::span<const double> samples);

/// |a - b| <= k * sqrt(se_a^2 + se_b^2) + extra
bool within_combined(const FieldEstimate& a, const FieldEstimate& b, double k, double extra = 0.0);

}  // namespace shefk
