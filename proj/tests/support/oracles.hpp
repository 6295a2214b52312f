#ifndef HAMCURV_TESTS_ORACLES_HPP
#define HAMCURV_TESTS_ORACLES_HPP

// Test-only oracles, independent of the library code paths they check:
// central finite differences of plain values, and the brute-force
// projector-expansion evaluation of the curvature operator.

#include <functional>
#include <random>
#include <vector>

#include "hamcurv/flow.hpp"
#include "hamcurv/models.hpp"

namespace hamcurv::testing {

/// Central finite-difference gradient of a scalar function of a vector.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double step = 1e-5) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        g[i] = (f(xp) - f(xm)) / (2.0 * step);
    }
    return g;
}

/// Central finite-difference Hessian of a scalar function.
inline Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x,
                      double step = 1e-4) {
    const auto n = x.size();
    Mat h(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            Vec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += step; xpp[j] += step;
            xpm[i] += step; xpm[j] -= step;
            xmp[i] -= step; xmp[j] += step;
            xmm[i] -= step; xmm[j] -= step;
            h(i, j) = h(j, i) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * step * step);
        }
    return h;
}

/// Central finite-difference Jacobian of a vector function.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                       double step = 1e-6) {
    Vec f0 = f(x);
    Mat J(f0.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        J.col(i) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return J;
}

// --- projector-expansion oracle --------------------------------------------
//
// Brute-force evaluation of the mixed derivative
//   D(t) = d^2/dt dtau  pi_x(J(t), J(tau)) |_Delta         (at tau = 0)
// where J(t) is the pullback of the vertical plane along the flow and the
// projector image (a phase vector) is reduced to its d/dp components.
//
// Normalization, worked out on one-degree-of-freedom models where the
// plane J(t) is spanned by (1, -a(t)) and everything is explicit
// (D(t) = -a'(t)/a(t)^2):
//   free particle       a = t       D = -t^{-2}            R = 0
//   inverted oscillator a = tanh t  D = -t^{-2} + 1/3      R = -1
//   harmonic oscillator a = tan t   D = -t^{-2} - 1/3      R = +1
// Hence D(t) + t^{-2} I -> -R/3 as t -> 0, and the curvature operator is
// -3 times the extrapolated remainder.

class ProjectorOracle {
public:
    ProjectorOracle(const HamiltonianModel& model, const PhasePoint& x,
                    double step_fraction = 0.05)
        : model_(model), x_(x), frac_(step_fraction) {}

    /// Pulled-back vertical plane J(t) as a 2n x n basis matrix.
    Mat plane(double t) const {
        const int n = x_.n();
        Mat E = Mat::Zero(2 * n, n);
        E.topRows(n) = Mat::Identity(n, n);
        if (t == 0.0) return E;
        FlowControls ctrl{1e-13, 1e-15};
        Mat Phi = flow_derivative(model_, x_, t, ctrl).Phi;
        return Phi.partialPivLu().solve(E);
    }

    /// pi(J(t), J(tau)) restricted to Delta, d/dp components (n x n).
    Mat projector(double t, double tau) const {
        const int n = x_.n();
        Mat Bt = plane(t), Btau = plane(tau);
        Mat M(2 * n, 2 * n);
        M.leftCols(n) = Bt;
        M.rightCols(n) = Btau;
        Mat E = Mat::Zero(2 * n, n);
        E.topRows(n) = Mat::Identity(n, n);
        Mat coeff = M.partialPivLu().solve(E);          // [c1; c2]
        Mat image = Btau * coeff.bottomRows(n);         // pi onto J(tau)
        return image.topRows(n);                        // d/dp components
    }

    /// Mixed derivative at (t, 0) by fourth-order cross stencils. Steps
    /// scale with t so the near-coincident plane singularity at tau = t
    /// stays well separated from the stencil.
    Mat mixed_derivative(double t) const {
        const double at = frac_ * t, bt = frac_ * t;
        auto d_tau = [&](double tt) {
            Mat s = (projector(tt, -2 * bt) - 8.0 * projector(tt, -bt) +
                     8.0 * projector(tt, bt) - projector(tt, 2 * bt)) /
                    (12.0 * bt);
            return s;
        };
        Mat out = (d_tau(t - 2 * at) - 8.0 * d_tau(t - at) + 8.0 * d_tau(t + at) -
                   d_tau(t + 2 * at)) /
                  (12.0 * at);
        return out;
    }

    /// The stencil's response to the universal singular kernel t/(t-tau),
    /// whose exact mixed derivative is -t^{-2}. The kernel is
    /// scale-invariant and so are the t-proportional steps, so the
    /// response is exactly kernel_constant() / t^2 at every t; subtracting
    /// it (rather than the ideal -t^{-2}) removes the stencil's own
    /// truncation error on the singular part.
    double kernel_constant() const {
        auto f = [](double t, double tau) { return t / (t - tau); };
        const double at = frac_, bt = frac_;
        auto d_tau = [&](double tt) {
            return (f(tt, -2 * bt) - 8.0 * f(tt, -bt) + 8.0 * f(tt, bt) - f(tt, 2 * bt)) /
                   (12.0 * bt);
        };
        return (d_tau(1.0 - 2 * at) - 8.0 * d_tau(1.0 - at) + 8.0 * d_tau(1.0 + at) -
                d_tau(1.0 + 2 * at)) /
               (12.0 * at);
    }

    /// -3 (D(t) - kernel_constant() t^{-2} I) extrapolated to t = 0 over
    /// nodes t0 / 2^k.
    Mat curvature_estimate(double t0 = 0.4, int nodes = 4) const {
        const int n = x_.n();
        const double kc = kernel_constant();
        std::vector<double> ts;
        std::vector<Mat> vals;
        for (int k = 0; k < nodes; ++k) {
            double t = t0 / std::pow(2.0, k);
            ts.push_back(t);
            vals.push_back(mixed_derivative(t) - kc * Mat::Identity(n, n) / (t * t));
        }
        // Neville extrapolation to t = 0
        for (int level = 1; level < nodes; ++level)
            for (int i = nodes - 1; i >= level; --i)
                vals[i] = vals[i] + (vals[i] - vals[i - 1]) * (ts[i] / (ts[i - level] - ts[i]));
        return -3.0 * vals[nodes - 1];
    }

private:
    const HamiltonianModel& model_;
    PhasePoint x_;
    double frac_;
};

inline std::mt19937_64 rng(std::uint64_t seed = 20260824ull) { return std::mt19937_64(seed); }

inline Vec random_vec(std::mt19937_64& gen, int n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(gen);
    return v;
}

}  // namespace hamcurv::testing

#endif
