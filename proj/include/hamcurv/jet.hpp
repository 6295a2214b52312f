#ifndef HAMCURV_JET_HPP
#define HAMCURV_JET_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hamcurv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecC = Eigen::VectorXcd;

/// Thrown when a scalar field is evaluated outside its domain
/// (log of a non-positive number, division by zero, ...).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Second-order forward-mode jet: value, gradient and Hessian with respect
/// to a fixed set of m independent variables. The Hessian is assembled
/// symmetric term by term, never symmetrized after the fact.
struct Jet {
    double v{};
    Vec g;
    Mat h;

    Jet() = default;
    Jet(double value, Vec grad, Mat hess)
        : v(value), g(std::move(grad)), h(std::move(hess)) {}

    int vars() const { return static_cast<int>(g.size()); }

    static Jet constant(int m, double value) {
        return Jet{value, Vec::Zero(m), Mat::Zero(m, m)};
    }
    static Jet variable(int m, int index, double value) {
        Jet j = constant(m, value);
        j.g[index] = 1.0;
        return j;
    }

    bool finite() const {
        return std::isfinite(v) && g.allFinite() && h.allFinite();
    }
};

namespace detail {
inline void require_finite(const Jet& j, const char* op) {
    if (!j.finite())
        throw DomainError(std::string("non-finite result in '") + op + "'");
}
}  // namespace detail

inline Jet operator+(const Jet& a, const Jet& b) {
    return Jet{a.v + b.v, a.g + b.g, a.h + b.h};
}
inline Jet operator-(const Jet& a, const Jet& b) {
    return Jet{a.v - b.v, a.g - b.g, a.h - b.h};
}
inline Jet operator-(const Jet& a) { return Jet{-a.v, -a.g, -a.h}; }
inline Jet operator+(const Jet& a, double c) { Jet r = a; r.v += c; return r; }
inline Jet operator+(double c, const Jet& a) { return a + c; }
inline Jet operator-(const Jet& a, double c) { return a + (-c); }
inline Jet operator-(double c, const Jet& a) { return (-a) + c; }
inline Jet operator*(const Jet& a, double c) { return Jet{a.v * c, a.g * c, a.h * c}; }
inline Jet operator*(double c, const Jet& a) { return a * c; }

inline Jet operator*(const Jet& a, const Jet& b) {
    Mat cross = a.g * b.g.transpose();
    return Jet{a.v * b.v,
               a.v * b.g + b.v * a.g,
               a.v * b.h + b.v * a.h + cross + cross.transpose()};
}

/// Composition with a scalar function given by (f, f', f'') at a.v.
inline Jet chain(const Jet& a, double f, double df, double ddf, const char* op) {
    Mat outer = a.g * a.g.transpose();
    Jet r{f, df * a.g, df * a.h + ddf * outer};
    detail::require_finite(r, op);
    return r;
}

inline Jet inv(const Jet& a) {
    if (a.v == 0.0) throw DomainError("division by zero");
    double iv = 1.0 / a.v;
    return chain(a, iv, -iv * iv, 2.0 * iv * iv * iv, "1/x");
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * inv(b); }
inline Jet operator/(const Jet& a, double c) {
    if (c == 0.0) throw DomainError("division by zero");
    return a * (1.0 / c);
}
inline Jet operator/(double c, const Jet& a) { return c * inv(a); }

inline Jet sin(const Jet& a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v), "sin"); }
inline Jet cos(const Jet& a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v), "cos"); }
inline Jet tan(const Jet& a) {
    double t = std::tan(a.v);
    return chain(a, t, 1.0 + t * t, 2.0 * t * (1.0 + t * t), "tan");
}
inline Jet exp(const Jet& a) {
    double e = std::exp(a.v);
    return chain(a, e, e, e, "exp");
}
inline Jet log(const Jet& a) {
    if (a.v <= 0.0) throw DomainError("log of non-positive argument");
    return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v), "log");
}
inline Jet sqrt(const Jet& a) {
    if (a.v < 0.0) throw DomainError("sqrt of negative argument");
    double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s, -0.25 / (s * a.v), "sqrt");
}
inline Jet sinh(const Jet& a) { return chain(a, std::sinh(a.v), std::cosh(a.v), std::sinh(a.v), "sinh"); }
inline Jet cosh(const Jet& a) { return chain(a, std::cosh(a.v), std::sinh(a.v), std::cosh(a.v), "cosh"); }
inline Jet tanh(const Jet& a) {
    double t = std::tanh(a.v);
    double s = 1.0 - t * t;
    return chain(a, t, s, -2.0 * t * s, "tanh");
}
inline Jet abs(const Jet& a) {
    double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
    return chain(a, std::abs(a.v), s, 0.0, "abs");
}

/// x^c with a constant exponent.
inline Jet pow(const Jet& a, double c) {
    if (c == 0.0) return Jet::constant(a.vars(), 1.0);
    if (c == 1.0) return a;
    if (c == 2.0) return a * a;
    double f = std::pow(a.v, c);
    double df = c * std::pow(a.v, c - 1.0);
    double ddf = c * (c - 1.0) * std::pow(a.v, c - 2.0);
    return chain(a, f, df, ddf, "pow");
}

}  // namespace hamcurv

#endif
