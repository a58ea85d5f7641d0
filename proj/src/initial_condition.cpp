#include "shefk/initial_condition.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace shefk {

InitialCondition::InitialCondition(std::string name, std::function<double(double)> fn, double sup_bound,
                                   std::vector<double> breakpoints)
    : name_(std::move(name)), fn_(std::move(fn)), sup_bound_(sup_bound), breakpoints_(std::move(breakpoints)) {
    if (!(sup_bound_ >= 0.0) || !std::isfinite(sup_bound_)) {
        throw std::invalid_argument("InitialCondition: sup bound must be finite and nonnegative");
    }
}

InitialCondition InitialCondition::constant(double c) {
    std::ostringstream name;
    if (c == 1.0) {
        name << "one";
    } else if (c == 0.0) {
        name << "zero";
    } else {
        name << "constant:" << c;
    }
    InitialCondition out{name.str(), [c](double) { return c; }, std::abs(c)};
    out.constant_ = c;
    return out;
}

InitialCondition InitialCondition::indicator(double a, double b) {
    if (!(b > a)) throw std::invalid_argument("indicator: need a < b");
    std::ostringstream name;
    name << "indicator:" << a << ',' << b;
    return {name.str(), [a, b](double x) { return (x >= a && x <= b) ? 1.0 : 0.0; }, 1.0, {a, b}};
}

InitialCondition InitialCondition::gauss_bump() {
    return {"gauss-bump", [](double x) { return std::exp(-0.5 * x * x); }, 1.0};
}

InitialCondition InitialCondition::cosine_bounded() {
    return {"cosine-bounded", [](double x) { return 0.5 * (1.0 + std::cos(x)); }, 1.0};
}

InitialCondition InitialCondition::from_name(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    if (head == "one" && colon == std::string::npos) return one();
    if (head == "zero" && colon == std::string::npos) return zero();
    if (head == "gauss-bump" && colon == std::string::npos) return gauss_bump();
    if (head == "cosine-bounded" && colon == std::string::npos) return cosine_bounded();
    if (head == "indicator") {
        if (colon == std::string::npos) return indicator(0.0, 1.0);
        std::istringstream in(spec.substr(colon + 1));
        double a = 0.0, b = 0.0;
        char comma = 0;
        if (!(in >> a >> comma >> b) || comma != ',' || !in.eof()) {
            throw std::invalid_argument("indicator: expected indicator:a,b, got '" + spec + "'");
        }
        return indicator(a, b);
    }
    throw std::invalid_argument("unknown initial condition '" + spec + "'");
}

}  // namespace shefk
