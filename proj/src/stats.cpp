#include "shefk/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace shefk {

FieldEstimate SumAccumulator::estimate() const {
    if (n == 0) throw std::domain_error("SumAccumulator: no samples");
    const double dn = static_cast<double>(n);
    const double mean = sum / dn;
    double var = 0.0;
    if (n > 1) var = std::max(0.0, (sum_sq - dn * mean * mean) / (dn - 1.0));
    return {mean, std::sqrt(var / dn), n};
}

FieldEstimate mean_estimate(std::span<const double> samples) {
    if (samples.empty()) throw std::domain_error("mean_estimate: no samples");
    double sum = 0.0;
    for (double v : samples) sum += v;
    const double dn = static_cast<double>(samples.size());
    const double mean = sum / dn;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double var = samples.size() > 1 ? ss / (dn - 1.0) : 0.0;
    return {mean, std::sqrt(var / dn), samples.size()};
}

SampleMoments sample_moments(std::span<const double> samples) {
    if (samples.size() < 2) throw std::domain_error("sample_moments: need at least two samples");
    const double dn = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double v : samples) sum += v;
    const double mean = sum / dn;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : samples) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    SampleMoments out;
    out.mean = mean;
    out.variance = m2 * dn / (dn - 1.0);
    out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    out.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    out.n = samples.size();
    return out;
}

bool within_combined(const FieldEstimate& a, const FieldEstimate& b, double k, double extra) {
    const double se = std::hypot(a.std_error, b.std_error);
    return std::abs(a.value - b.value) <= k * se + extra;
}

}  // namespace shefk
