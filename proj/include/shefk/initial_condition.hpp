#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace shefk {

/// Bounded deterministic initial datum u0 with its sup bound and the points
/// where it fails to be smooth (used to split quadrature panels).
class InitialCondition {
public:
    InitialCondition(std::string name, std::function<double(double)> fn, double sup_bound,
                     std::vector<double> breakpoints = {});

    double operator()(double x) const { return fn_(x); }
    double sup_bound() const { return sup_bound_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::string& name() const { return name_; }
    bool is_zero() const { return sup_bound_ == 0.0; }
    /// Set when u0 is constant, so P_t u0 needs no quadrature.
    std::optional<double> constant_value() const { return constant_; }

    static InitialCondition constant(double c);
    static InitialCondition one() { return constant(1.0); }
    static InitialCondition zero() { return constant(0.0); }
    /// 1 on [a, b], 0 elsewhere.
    static InitialCondition indicator(double a, double b);
    /// exp(-x^2 / 2)
    static InitialCondition gauss_bump();
    /// (1 + cos x) / 2
    static InitialCondition cosine_bounded();

    /// Registry lookup: "one", "zero", "indicator[:a,b]", "gauss-bump",
    /// "cosine-bounded". Throws std::invalid_argument for unknown names.
    static InitialCondition from_name(const std::string& spec);

private:
    std::string name_;
    std::function<double(double)> fn_;
    double sup_bound_;
    std::vector<double> breakpoints_;
    std::optional<double> constant_;
};

}  // namespace shefk
