#include "shefk/wick.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "shefk/hermite.hpp"
#include "shefk/rng.hpp"

namespace shefk {

MultiIndex::MultiIndex(std::initializer_list<unsigned> entries) : entries_(entries) { trim(); }

MultiIndex::MultiIndex(std::vector<unsigned> entries) : entries_(std::move(entries)) { trim(); }

MultiIndex MultiIndex::unit(int j) {
    if (j < 1) throw std::domain_error("MultiIndex::unit: index must be >= 1");
    std::vector<unsigned> e(static_cast<std::size_t>(j), 0u);
    e.back() = 1;
    return MultiIndex(std::move(e));
}

void MultiIndex::trim() {
    while (!entries_.empty() && entries_.back() == 0) entries_.pop_back();
}

unsigned MultiIndex::operator[](int j) const {
    if (j < 1) throw std::domain_error("MultiIndex: positions are 1-based");
    const auto i = static_cast<std::size_t>(j - 1);
    return i < entries_.size() ? entries_[i] : 0u;
}

unsigned MultiIndex::order() const {
    unsigned n = 0;
    for (unsigned a : entries_) n += a;
    return n;
}

double MultiIndex::factorial() const {
    double f = 1.0;
    for (unsigned a : entries_) {
        for (unsigned k = 2; k <= a; ++k) f *= k;
    }
    return f;
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
    std::vector<unsigned> sum(std::max(entries_.size(), other.entries_.size()), 0u);
    for (std::size_t i = 0; i < entries_.size(); ++i) sum[i] += entries_[i];
    for (std::size_t i = 0; i < other.entries_.size(); ++i) sum[i] += other.entries_[i];
    return MultiIndex(std::move(sum));
}

MultiIndex MultiIndex::truncated(int k) const {
    const auto n = std::min(entries_.size(), static_cast<std::size_t>(std::max(0, k)));
    return MultiIndex(std::vector<unsigned>(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(n)));
}

bool GradedLexLess::operator()(const MultiIndex& a, const MultiIndex& b) const {
    const unsigned oa = a.order();
    const unsigned ob = b.order();
    if (oa != ob) return oa < ob;
    // Within a grade, larger leading entries come first: (1) < (0,1).
    const auto& ea = a.entries();
    const auto& eb = b.entries();
    const std::size_t n = std::max(ea.size(), eb.size());
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned x = i < ea.size() ? ea[i] : 0u;
        const unsigned y = i < eb.size() ? eb[i] : 0u;
        if (x != y) return x > y;
    }
    return false;
}

namespace {

void enumerate_grade(std::vector<unsigned>& entries, std::size_t pos, unsigned remaining,
                     const std::function<void(const MultiIndex&)>& f) {
    if (pos + 1 == entries.size()) {
        entries[pos] = remaining;
        f(MultiIndex(entries));
        entries[pos] = 0;
        return;
    }
    for (unsigned a = remaining + 1; a-- > 0;) {
        entries[pos] = a;
        enumerate_grade(entries, pos + 1, remaining - a, f);
    }
    entries[pos] = 0;
}

}  // namespace

void for_each_multi_index(int k, int n, const std::function<void(const MultiIndex&)>& f) {
    if (k < 1) throw std::domain_error("for_each_multi_index: K must be >= 1");
    if (n < 0) throw std::domain_error("for_each_multi_index: N must be >= 0");
    std::vector<unsigned> entries(static_cast<std::size_t>(k), 0u);
    for (int grade = 0; grade <= n; ++grade) {
        enumerate_grade(entries, 0, static_cast<unsigned>(grade), f);
    }
}

std::size_t multi_index_count(int k, int n) {
    // C(k + n, n), computed incrementally to stay exact for small arguments.
    std::size_t c = 1;
    for (int i = 1; i <= n; ++i) c = c * static_cast<std::size_t>(k + i) / static_cast<std::size_t>(i);
    return c;
}

NoiseRealization NoiseRealization::sample(int k, std::uint64_t seed, std::uint64_t draw) {
    if (k < 1) throw std::domain_error("NoiseRealization: K must be >= 1");
    RngStream stream(seed, StreamRole::noise, draw);
    NoiseRealization out{std::vector<double>(static_cast<std::size_t>(k)), seed, draw};
    for (double& v : out.z) v = stream.normal();
    return out;
}

NoiseRealization NoiseRealization::prefix(int k) const {
    if (k < 1 || static_cast<std::size_t>(k) > z.size()) throw std::domain_error("NoiseRealization: bad prefix length");
    return {std::vector<double>(z.begin(), z.begin() + k), seed, draw};
}

ChaosExpansion::ChaosExpansion(int basis_bound, int degree_bound)
    : basis_bound_(basis_bound), degree_bound_(degree_bound) {
    if (basis_bound < 0 || degree_bound < 0) throw std::domain_error("ChaosExpansion: negative bounds");
}

void ChaosExpansion::add(const MultiIndex& alpha, double c) {
    if (!std::isfinite(c)) throw std::domain_error("ChaosExpansion: non-finite coefficient");
    terms_[alpha] += c;
    basis_bound_ = std::max(basis_bound_, alpha.support());
    degree_bound_ = std::max(degree_bound_, static_cast<int>(alpha.order()));
}

void ChaosExpansion::set(const MultiIndex& alpha, double c) {
    if (!std::isfinite(c)) throw std::domain_error("ChaosExpansion: non-finite coefficient");
    terms_[alpha] = c;
    basis_bound_ = std::max(basis_bound_, alpha.support());
    degree_bound_ = std::max(degree_bound_, static_cast<int>(alpha.order()));
}

double ChaosExpansion::coefficient(const MultiIndex& alpha) const {
    const auto it = terms_.find(alpha);
    return it == terms_.end() ? 0.0 : it->second;
}

double ChaosExpansion::l2_norm_sq() const {
    double sum = 0.0;
    for (const auto& [alpha, c] : terms_) sum += c * c * alpha.factorial();
    return sum;
}

double ChaosExpansion::l2_norm_sq_up_to(unsigned n) const {
    double sum = 0.0;
    for (const auto& [alpha, c] : terms_) {
        if (alpha.order() <= n) sum += c * c * alpha.factorial();
    }
    return sum;
}

double wick_polynomial(const MultiIndex& alpha, std::span<const double> z) {
    if (static_cast<std::size_t>(alpha.support()) > z.size()) {
        throw std::domain_error("wick_polynomial: multi-index support exceeds noise length");
    }
    double prod = 1.0;
    const auto& e = alpha.entries();
    for (std::size_t j = 0; j < e.size(); ++j) {
        if (e[j] != 0) prod *= hermite_polynomial_prob(static_cast<int>(e[j]), z[j]);
    }
    return prod;
}

double chaos_eval(const ChaosExpansion& x, std::span<const double> z) {
    if (static_cast<std::size_t>(x.basis_bound()) > z.size()) {
        throw std::domain_error("chaos_eval: expansion basis exceeds noise length");
    }
    // Cache He_n(z_j) for every coordinate and degree in use.
    const auto k = static_cast<std::size_t>(x.basis_bound());
    const auto n = static_cast<std::size_t>(x.degree_bound());
    std::vector<double> he(k * (n + 1), 1.0);
    for (std::size_t j = 0; j < k; ++j) {
        double* row = he.data() + j * (n + 1);
        if (n >= 1) row[1] = z[j];
        for (std::size_t d = 2; d <= n; ++d) row[d] = z[j] * row[d - 1] - static_cast<double>(d - 1) * row[d - 2];
    }
    double sum = 0.0;
    for (const auto& [alpha, c] : x.terms()) {
        double prod = c;
        const auto& e = alpha.entries();
        for (std::size_t j = 0; j < e.size(); ++j) prod *= he[j * (n + 1) + e[j]];
        sum += prod;
    }
    return sum;
}

ChaosExpansion wick_product(const ChaosExpansion& x, const ChaosExpansion& y) {
    ChaosExpansion out(std::max(x.basis_bound(), y.basis_bound()), x.degree_bound() + y.degree_bound());
    for (const auto& [a, ca] : x.terms()) {
        for (const auto& [b, cb] : y.terms()) out.add(a + b, ca * cb);
    }
    return out;
}

ChaosExpansion wick_exponential(std::span<const double> c, int n) {
    if (n < 0) throw std::domain_error("wick_exponential: degree bound must be >= 0");
    const auto k = static_cast<int>(c.size());
    if (k == 0) {
        ChaosExpansion out(0, n);
        out.set(MultiIndex{}, 1.0);
        return out;
    }
    const bool all_zero = std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
    ChaosExpansion out(k, n);
    if (all_zero) {
        out.set(MultiIndex{}, 1.0);
        return out;
    }
    // powers[j][a] = c_j^a / a!
    std::vector<std::vector<double>> powers(c.size(), std::vector<double>(static_cast<std::size_t>(n) + 1, 1.0));
    for (std::size_t j = 0; j < c.size(); ++j) {
        for (int a = 1; a <= n; ++a) powers[j][static_cast<std::size_t>(a)] = powers[j][static_cast<std::size_t>(a - 1)] * c[j] / a;
    }
    for_each_multi_index(k, n, [&](const MultiIndex& alpha) {
        double v = 1.0;
        const auto& e = alpha.entries();
        for (std::size_t j = 0; j < e.size(); ++j) v *= powers[j][e[j]];
        if (v != 0.0) out.set(alpha, v);
    });
    return out;
}

double wick_exponential_tail(std::span<const double> c, int n) {
    double s = 0.0;
    for (double v : c) s += v * v;
    // Sum the tail directly to avoid cancellation in e^s - partial sum.
    double term = 1.0;
    for (int m = 1; m <= n; ++m) term *= s / m;
    double tail = 0.0;
    for (int m = n + 1; m < n + 400; ++m) {
        term *= s / m;
        tail += term;
        if (term < 1e-18 * tail) break;
    }
    return tail;
}

ChaosExpansion second_quantization(const ChaosExpansion& x, int k) {
    if (k < 0) throw std::domain_error("second_quantization: negative K");
    ChaosExpansion out(std::min(x.basis_bound(), k), x.degree_bound());
    for (const auto& [alpha, c] : x.terms()) {
        if (alpha.support() <= k) out.set(alpha, c);
    }
    return out;
}

FieldEstimate conditional_expectation_mc(const std::function<double(std::span<const double>)>& x,
                                         std::span<const double> z_cond, int k_big, std::size_t samples,
                                         std::uint64_t seed, std::uint64_t point_id) {
    if (k_big < static_cast<int>(z_cond.size())) {
        throw std::domain_error("conditional_expectation_mc: conditioning vector longer than K_big");
    }
    if (samples == 0) throw std::domain_error("conditional_expectation_mc: need samples");
    RngStream stream(seed, StreamRole::conditioning, point_id);
    std::vector<double> z(static_cast<std::size_t>(k_big));
    std::copy(z_cond.begin(), z_cond.end(), z.begin());
    SumAccumulator acc;
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t j = z_cond.size(); j < z.size(); ++j) z[j] = stream.normal();
        acc.add(x(z));
    }
    return acc.estimate();
}

std::string to_string(const MultiIndex& alpha) {
    if (alpha.is_zero()) return "0";
    std::string out;
    for (std::size_t i = 0; i < alpha.entries().size(); ++i) {
        if (i) out += ',';
        out += std::to_string(alpha.entries()[i]);
    }
    return out;
}

MultiIndex parse_multi_index(std::string_view text) {
    std::vector<unsigned> entries;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string_view field = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        std::size_t b = 0, e = field.size();
        while (b < e && field[b] == ' ') ++b;
        while (e > b && field[e - 1] == ' ') --e;
        unsigned v = 0;
        const auto* first = field.data() + b;
        const auto* last = field.data() + e;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last || b == e) {
            throw std::invalid_argument("parse_multi_index: bad entry in '" + std::string(text) + "'");
        }
        entries.push_back(v);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return MultiIndex(std::move(entries));
}

std::string to_text(const ChaosExpansion& x) {
    std::ostringstream out;
    out << "# chaos K=" << x.basis_bound() << " N=" << x.degree_bound() << '\n';
    char buf[64];
    for (const auto& [alpha, c] : x.terms()) {
        std::snprintf(buf, sizeof buf, "%.17g", c);
        out << to_string(alpha) << " : " << buf << '\n';
    }
    return out.str();
}

ChaosExpansion from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("from_text: empty input");
    int k = -1, n = -1;
    if (std::sscanf(line.c_str(), "# chaos K=%d N=%d", &k, &n) != 2 || k < 0 || n < 0) {
        throw std::invalid_argument("from_text: bad header '" + line + "'");
    }
    ChaosExpansion out(k, n);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto sep = line.find(':');
        if (sep == std::string::npos) throw std::invalid_argument("from_text: missing ':' in '" + line + "'");
        const MultiIndex alpha = parse_multi_index(std::string_view(line).substr(0, sep));
        std::string coeff = line.substr(sep + 1);
        std::size_t used = 0;
        double c = 0.0;
        try {
            c = std::stod(coeff, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("from_text: bad coefficient in '" + line + "'");
        }
        if (coeff.find_first_not_of(' ', used) != std::string::npos) {
            throw std::invalid_argument("from_text: trailing characters in '" + line + "'");
        }
        if (alpha.support() > k || static_cast<int>(alpha.order()) > n) {
            throw std::invalid_argument("from_text: term outside declared bounds: '" + line + "'");
        }
        out.set(alpha, c);
    }
    return out;
}

}  // namespace shefk
