#ifndef HAMCURV_ODE_HPP
#define HAMCURV_ODE_HPP

// Adaptive Dormand-Prince 5(4) with PI step control and the standard
// fourth-order continuous extension. Integrates forward or backward in
// time; the observer sees every accepted step together with a dense
// evaluator valid on that step.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "hamcurv/jet.hpp"

namespace hamcurv {

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t_last, Vec y_last)
        : std::runtime_error(what), t_last(t_last), y_last(std::move(y_last)) {}
    double t_last;
    Vec y_last;
};

struct OdeControls {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 10'000'000;
};

/// Dense interpolant over one accepted step [t0, t0+h].
struct DenseStep {
    double t0{}, h{};
    Vec r1, r2, r3, r4, r5;

    Vec eval(double t) const {
        double th = (t - t0) / h;
        double th1 = 1.0 - th;
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
};

namespace dopri5 {
inline constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
inline constexpr double a21 = 0.2;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                        a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dopri5

/// Integrate y' = f(t, y) from t0 to t1 (either direction). The observer
/// is called after each accepted step as observer(t_new, y_new, dense).
template <class RHS, class Observer>
OdeStats integrate_ode(RHS&& f, double t0, Vec y0, double t1, const OdeControls& ctrl,
                       Observer&& observer) {
    using namespace dopri5;
    OdeStats stats;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    const auto dim = y0.size();
    if (t1 == t0) return stats;

    double t = t0;
    Vec y = y0;
    Vec k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), ynew(dim), yerr(dim);
    f(t, y, k1);

    // initial step from the magnitude of f
    double scale0 = ctrl.abs_tol + ctrl.rel_tol * y.cwiseAbs().maxCoeff();
    double d0 = y.cwiseAbs().maxCoeff() / scale0;
    double d1n = k1.cwiseAbs().maxCoeff() / scale0;
    double h = dir * std::min({std::abs(t1 - t0),
                               (d0 > 1e-5 && d1n > 1e-5) ? 0.01 * d0 / d1n : 1e-6,
                               ctrl.max_step});
    if (h == 0.0) h = dir * 1e-6;

    double err_old = 1e-4;
    while (dir * (t1 - t) > 0.0) {
        if (stats.accepted + stats.rejected > ctrl.max_steps)
            throw IntegrationError("step limit exceeded", t, y);
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
            throw IntegrationError("step size underflow", t, y);
        if (dir * (t + h - t1) > 0.0) h = t1 - t;
        if (std::abs(h) > ctrl.max_step) h = dir * ctrl.max_step;

        f(t + c2 * h, y + h * (a21 * k1), k2);
        f(t + c3 * h, y + h * (a31 * k1 + a32 * k2), k3);
        f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
        f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
        f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        f(t + h, ynew, k7);  // FSAL
        yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            double sc = ctrl.abs_tol +
                        ctrl.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            double e = yerr[i] / sc;
            err += e * e;
        }
        err = std::sqrt(err / static_cast<double>(dim));

        if (err <= 1.0) {
            // accepted; build dense coefficients before advancing
            DenseStep ds;
            ds.t0 = t;
            ds.h = h;
            ds.r1 = y;
            ds.r2 = ynew - y;
            ds.r3 = h * k1 - ds.r2;
            ds.r4 = ds.r2 - h * k7 - ds.r3;
            ds.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            t += h;
            y = ynew;
            k1 = k7;
            ++stats.accepted;
            observer(t, y, ds);

            // PI controller
            double fac = std::pow(err > 1e-32 ? err : 1e-32, -0.7 / 5.0) *
                         std::pow(err_old > 1e-32 ? err_old : 1e-32, 0.4 / 5.0);
            fac = std::clamp(0.9 * fac, 0.2, 10.0);
            h *= fac;
            err_old = std::max(err, 1e-4);
        } else {
            ++stats.rejected;
            double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
            h *= fac;
        }
    }
    return stats;
}

}  // namespace hamcurv

#endif
