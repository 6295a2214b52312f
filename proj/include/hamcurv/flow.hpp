#ifndef HAMCURV_FLOW_HPP
#define HAMCURV_FLOW_HPP

// Hamiltonian flow, variational (linearized) flow, equilibria, periodic
// orbits via Poincare shooting, Floquet data and Lyapunov exponents.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hamcurv/models.hpp"
#include "hamcurv/ode.hpp"

namespace hamcurv {

class FlowError : public std::runtime_error {
public:
    explicit FlowError(const std::string& what) : std::runtime_error(what) {}
};

struct FlowControls {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double drift_tol = 1e-6;  // energy drift above this flags the trajectory degraded

    OdeControls ode() const { return {rel_tol, abs_tol, max_step}; }
};

struct Trajectory {
    struct Sample {
        double t;
        PhasePoint x;
        double energy;
    };
    std::vector<Sample> samples;
    double energy_drift = 0.0;
    bool degraded = false;
    OdeStats stats;

    const Sample& back() const { return samples.back(); }
};

namespace detail {
inline auto phase_rhs(const HamiltonianModel& model) {
    return [&model](double, const Vec& y, Vec& dy) {
        dy = hamiltonian_vector_field(model, PhasePoint::from_vector(y));
    };
}
}  // namespace detail

/// Integrate the flow over [t0, t1]; samples are the accepted steps.
inline Trajectory integrate(const HamiltonianModel& model, const PhasePoint& x0, double t0,
                            double t1, const FlowControls& ctrl = {}) {
    Trajectory traj;
    double h0 = model.value(x0);
    traj.samples.push_back({t0, x0, h0});
    traj.stats = integrate_ode(
        detail::phase_rhs(model), t0, x0.to_vector(), t1, ctrl.ode(),
        [&](double t, const Vec& y, const DenseStep&) {
            PhasePoint x = PhasePoint::from_vector(y);
            double e = model.value(x);
            traj.energy_drift = std::max(traj.energy_drift, std::abs(e - h0));
            traj.samples.push_back({t, x, e});
        });
    traj.degraded = traj.energy_drift > ctrl.drift_tol;
    return traj;
}

/// States of the flow at prescribed times (strictly between t0 and the
/// largest |time|), via dense output. Times must be sorted toward t_end.
inline std::vector<PhasePoint> sample_flow(const HamiltonianModel& model, const PhasePoint& x0,
                                           const std::vector<double>& times,
                                           const FlowControls& ctrl = {}) {
    std::vector<PhasePoint> out;
    out.reserve(times.size());
    if (times.empty()) return out;
    double t_end = times.back();
    std::size_t next = 0;
    double t_prev = 0.0;
    integrate_ode(detail::phase_rhs(model), 0.0, x0.to_vector(), t_end, {ctrl.rel_tol, ctrl.abs_tol, ctrl.max_step},
                  [&](double t, const Vec& y, const DenseStep& ds) {
                      const double dir = t_end >= 0.0 ? 1.0 : -1.0;
                      while (next < times.size() && dir * (times[next] - t) <= 1e-14 &&
                             dir * (times[next] - t_prev) > -1e-14) {
                          out.push_back(PhasePoint::from_vector(ds.eval(times[next])));
                          ++next;
                      }
                      t_prev = t;
                      (void)y;
                  });
    // t_end itself (dense covers it as well); fill any stragglers with the endpoint
    while (next < times.size()) {
        Trajectory tr = integrate(model, x0, 0.0, times[next], ctrl);
        out.push_back(tr.back().x);
        ++next;
    }
    return out;
}

struct VariationalFrame {
    double t;
    PhasePoint x;
    Mat Phi;  // 2n x 2n derivative of the flow map at the initial point
    Mat S;    // n x n block dq(t)/dp0

    double symplectic_defect() const {
        const int n = static_cast<int>(S.rows());
        Mat J = symplectic_matrix(n);
        return (Phi.transpose() * J * Phi - J).norm();
    }
};

namespace detail {

inline Mat unpack_phi(const Vec& y, int n) {
    return Eigen::Map<const Mat>(y.data() + 2 * n, 2 * n, 2 * n);
}

inline auto variational_rhs(const HamiltonianModel& model, int n) {
    return [&model, n](double, const Vec& y, Vec& dy) {
        PhasePoint x = PhasePoint::from_vector(y.head(2 * n));
        Mat D = field_jacobian(model, x);
        dy.resize(y.size());
        dy.head(2 * n) = hamiltonian_vector_field(model, x);
        Eigen::Map<const Mat> Phi(y.data() + 2 * n, 2 * n, 2 * n);
        Eigen::Map<Mat>(dy.data() + 2 * n, 2 * n, 2 * n) = D * Phi;
    };
}

inline Vec pack_state(const PhasePoint& x, const Mat& Phi) {
    const int n = x.n();
    Vec y(2 * n + 4 * n * n);
    y.head(2 * n) = x.to_vector();
    Eigen::Map<Mat>(y.data() + 2 * n, 2 * n, 2 * n) = Phi;
    return y;
}

inline VariationalFrame make_frame(double t, const Vec& y, int n) {
    VariationalFrame fr;
    fr.t = t;
    fr.x = PhasePoint::from_vector(y.head(2 * n));
    fr.Phi = unpack_phi(y, n);
    fr.S = fr.Phi.block(n, 0, n, n);  // rows q, columns p0
    return fr;
}

}  // namespace detail

/// Jointly integrate the base trajectory and Phi' = Dhvec(x(t)) Phi,
/// Phi(0) = 1. Frames are produced at `sample_times` (sorted toward
/// t_end, which is always included last).
inline std::vector<VariationalFrame> variational_flow(const HamiltonianModel& model,
                                                      const PhasePoint& x0, double t_end,
                                                      const FlowControls& ctrl = {},
                                                      std::vector<double> sample_times = {}) {
    const int n = x0.n();
    std::vector<VariationalFrame> frames;
    if (t_end == 0.0) {
        frames.push_back(detail::make_frame(0.0, detail::pack_state(x0, Mat::Identity(2 * n, 2 * n)), n));
        return frames;
    }
    const double dir = t_end > 0.0 ? 1.0 : -1.0;
    std::size_t next = 0;
    Vec y0 = detail::pack_state(x0, Mat::Identity(2 * n, 2 * n));
    Vec y_final = y0;
    double t_prev = 0.0;
    integrate_ode(detail::variational_rhs(model, n), 0.0, y0, t_end, ctrl.ode(),
                  [&](double t, const Vec& y, const DenseStep& ds) {
                      while (next < sample_times.size() && dir * (sample_times[next] - t) <= 1e-14) {
                          double ts = sample_times[next];
                          if (dir * (ts - t_prev) > -1e-14)
                              frames.push_back(detail::make_frame(ts, ds.eval(ts), n));
                          ++next;
                      }
                      t_prev = t;
                      y_final = y;
                  });
    frames.push_back(detail::make_frame(t_end, y_final, n));
    return frames;
}

/// Final frame only.
inline VariationalFrame flow_derivative(const HamiltonianModel& model, const PhasePoint& x0,
                                        double t_end, const FlowControls& ctrl = {}) {
    return variational_flow(model, x0, t_end, ctrl).back();
}

// --- equilibria ------------------------------------------------------------

struct EquilibriumResult {
    PhasePoint x_eq;
    VecC spectrum;
    bool hyperbolic = false;
    double margin = 0.0;  // min |Re lambda|
    int iterations = 0;
    double residual = 0.0;
};

inline constexpr double kEquilibriumSpectralTol = 1e-6;

/// Newton iteration on hvec(x) = 0.
inline EquilibriumResult find_equilibrium(const HamiltonianModel& model, const PhasePoint& guess,
                                          int max_iter = 50) {
    const int n = guess.n();
    Vec y = guess.to_vector();
    const double scale = std::max(1.0, y.norm());
    EquilibriumResult res;
    for (int it = 0; it <= max_iter; ++it) {
        PhasePoint x = PhasePoint::from_vector(y);
        Vec f = hamiltonian_vector_field(model, x);
        res.residual = f.norm();
        res.iterations = it;
        if (res.residual <= 1e-12 * scale) {
            Mat D = field_jacobian(model, x);
            Eigen::EigenSolver<Mat> es(D);
            res.x_eq = x;
            res.spectrum = es.eigenvalues();
            double rad = res.spectrum.cwiseAbs().maxCoeff();
            res.margin = res.spectrum.real().cwiseAbs().minCoeff();
            res.hyperbolic = res.margin > kEquilibriumSpectralTol * std::max(rad, 1e-300);
            return res;
        }
        if (it == max_iter) break;
        Mat D = field_jacobian(model, x);
        Eigen::FullPivLU<Mat> lu(D);
        lu.setThreshold(1e-10);
        if (lu.rank() < 2 * n) throw FlowError("singular Jacobian in equilibrium search");
        y -= lu.solve(f);
        if (!y.allFinite()) throw FlowError("Newton iteration diverged in equilibrium search");
    }
    throw FlowError("Newton did not converge within the iteration cap");
}

// --- periodic orbits -------------------------------------------------------

/// Affine hyperplane in phase space: { x : <normal, x - point> = 0 }.
struct Section {
    Vec normal;
    Vec point;

    double offset(const Vec& y) const { return normal.dot(y - point); }
};

struct PeriodicOrbit {
    PhasePoint x0;
    double period = 0.0;
    Mat monodromy;
    double residual = 0.0;
    double energy = 0.0;
    Vec shift;  // closure defect absorbed by a translation symmetry, if any
};

namespace detail {

/// First positive crossing time of the section (same orientation as the
/// initial velocity) no earlier than t_min; NaN if none before t_max.
inline double locate_return(const HamiltonianModel& model, const PhasePoint& x0,
                            const Section& section, double t_min, double t_max,
                            const FlowControls& ctrl) {
    double s_dir = section.normal.dot(hamiltonian_vector_field(model, x0));
    if (s_dir == 0.0) s_dir = 1.0;
    double t_hit = std::numeric_limits<double>::quiet_NaN();
    double s_prev = section.offset(x0.to_vector());
    double t_prev = 0.0;
    try {
        integrate_ode(phase_rhs(model), 0.0, x0.to_vector(), t_max, ctrl.ode(),
                      [&](double t, const Vec& y, const DenseStep& ds) {
                          if (!std::isnan(t_hit)) return;
                          double s = section.offset(y);
                          if (t > t_min && s_prev * s <= 0.0 && s_dir * (s - s_prev) > 0.0) {
                              double lo = std::max(t_prev, t_min), hi = t;
                              for (int i = 0; i < 80; ++i) {
                                  double mid = 0.5 * (lo + hi);
                                  if (section.offset(ds.eval(std::max(ds.t0, std::min(mid, ds.t0 + ds.h)))) * s_prev <= 0.0)
                                      hi = mid;
                                  else
                                      lo = mid;
                              }
                              t_hit = 0.5 * (lo + hi);
                          }
                          s_prev = s;
                          t_prev = t;
                      });
    } catch (const IntegrationError&) {
        // treated as no return
    }
    return t_hit;
}

}  // namespace detail

/// Newton shooting on the Poincare return map, section-constrained with
/// the energy held at its initial value. `shift` accommodates orbits that
/// close only up to a translation symmetry of the model (an angular
/// coordinate advancing by 2 pi in a single chart): the condition solved
/// is x(T) = x0 + shift, with the section placed at the return location.
inline PeriodicOrbit find_periodic_orbit(const HamiltonianModel& model, const PhasePoint& guess,
                                         double period_guess, const Section& section,
                                         Vec shift = {}, const FlowControls& ctrl = {},
                                         int max_iter = 50) {
    const int n = guess.n();
    const double c = model.value(guess);
    if (shift.size() == 0) shift = Vec::Zero(2 * n);

    double t_ret = detail::locate_return(model, guess, section, 0.25 * period_guess,
                                         10.0 * period_guess, ctrl);
    if (std::isnan(t_ret))
        throw FlowError("no return to the section within 10x the period guess");

    Vec y = guess.to_vector();
    double T = t_ret;
    const double scale = std::max(1.0, y.norm());
    PeriodicOrbit orbit;
    for (int it = 0; it <= max_iter; ++it) {
        PhasePoint x = PhasePoint::from_vector(y);
        VariationalFrame fr = flow_derivative(model, x, T, ctrl);
        Vec xT = fr.x.to_vector();
        Vec fT = hamiltonian_vector_field(model, fr.x);
        SecondOrder s0 = model.second_order(x);
        Vec grad_h(2 * n);
        grad_h << s0.dp, s0.dq;

        Vec F(2 * n + 2);
        F.head(2 * n) = xT - y - shift;
        F[2 * n] = section.normal.dot(y - (section.point - shift));
        F[2 * n + 1] = s0.value - c;
        double res = F.head(2 * n).norm();

        if (res <= 1e-10 * scale && std::abs(F[2 * n]) <= 1e-10 && std::abs(F[2 * n + 1]) <= 1e-10) {
            orbit.x0 = x;
            orbit.period = T;
            orbit.monodromy = fr.Phi;
            orbit.residual = res;
            orbit.energy = c;
            orbit.shift = shift;
            return orbit;
        }
        if (it == max_iter) break;

        Mat Jac(2 * n + 2, 2 * n + 1);
        Jac.setZero();
        Jac.block(0, 0, 2 * n, 2 * n) = fr.Phi - Mat::Identity(2 * n, 2 * n);
        Jac.block(0, 2 * n, 2 * n, 1) = fT;
        Jac.block(2 * n, 0, 1, 2 * n) = section.normal.transpose();
        Jac.block(2 * n + 1, 0, 1, 2 * n) = grad_h.transpose();

        Vec step = Jac.colPivHouseholderQr().solve(-F);
        // damped update for robustness far from the orbit
        double damp = std::min(1.0, 0.5 * scale / std::max(step.norm(), 1e-300));
        y += damp * step.head(2 * n);
        T += damp * step[2 * n];
        if (!y.allFinite() || !std::isfinite(T) || T <= 0.0)
            throw FlowError("Newton iteration diverged in periodic-orbit search");
    }
    throw FlowError("periodic-orbit Newton did not converge within the iteration cap");
}

// --- Floquet ---------------------------------------------------------------

struct FloquetResult {
    VecC multipliers;  // 2n - 2 entries, trivial pair removed
    bool hyperbolic = false;
    double margin = 0.0;  // min |log |lambda||
};

inline constexpr double kFloquetTrivialTol = 1e-4;
inline constexpr double kFloquetUnitTol = 1e-3;

/// Spectrum of the monodromy with the two trivial unit multipliers
/// (flow direction, energy) deflated.
inline FloquetResult floquet_reduced(const PeriodicOrbit& orbit, const HamiltonianModel& model) {
    (void)model;
    const int m = static_cast<int>(orbit.monodromy.rows());
    Eigen::EigenSolver<Mat> es(orbit.monodromy);
    VecC lam = es.eigenvalues();
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(lam[a] - 1.0) < std::abs(lam[b] - 1.0);
    });
    for (int k = 0; k < 2; ++k)
        if (std::abs(lam[idx[k]] - 1.0) > kFloquetTrivialTol)
            throw FlowError("trivial Floquet multipliers not identifiable (degenerate orbit)");

    FloquetResult res;
    res.multipliers = VecC(m - 2);
    for (int k = 2; k < m; ++k) res.multipliers[k - 2] = lam[idx[k]];
    if (m > 2) {
        res.margin = std::numeric_limits<double>::infinity();
        for (int k = 0; k < m - 2; ++k)
            res.margin = std::min(res.margin, std::abs(std::log(std::abs(res.multipliers[k]))));
        res.hyperbolic = res.margin > kFloquetUnitTol;
    }
    return res;
}

// --- Lyapunov exponents ----------------------------------------------------

struct LyapunovResult {
    Vec exponents;  // sorted descending
    double sum = 0.0;
    bool volume_ok = false;  // |sum| <= 1e-3
    int renormalizations = 0;
};

/// Benettin-style repeated QR reorthonormalization of the variational frame.
inline LyapunovResult lyapunov_exponents(const HamiltonianModel& model, const PhasePoint& x0,
                                         double horizon, double renorm_interval,
                                         const FlowControls& ctrl = {}) {
    const int n = x0.n();
    const int m = 2 * n;
    const int windows = static_cast<int>(std::floor(horizon / renorm_interval));
    if (windows < 100) throw FlowError("horizon too short: fewer than 100 renormalizations");

    Vec y = detail::pack_state(x0, Mat::Identity(m, m));
    Vec acc = Vec::Zero(m);
    auto rhs = detail::variational_rhs(model, n);
    double t = 0.0;
    for (int w = 0; w < windows; ++w) {
        Vec y_end = y;
        integrate_ode(rhs, t, y, t + renorm_interval, ctrl.ode(),
                      [&](double, const Vec& yy, const DenseStep&) { y_end = yy; });
        t += renorm_interval;
        Mat Phi = detail::unpack_phi(y_end, n);
        Eigen::HouseholderQR<Mat> qr(Phi);
        Mat Q = qr.householderQ() * Mat::Identity(m, m);
        Mat R = Q.transpose() * Phi;
        for (int i = 0; i < m; ++i) {
            if (R(i, i) < 0.0) {
                Q.col(i) *= -1.0;
                R.row(i) *= -1.0;
            }
            acc[i] += std::log(std::abs(R(i, i)));
        }
        y = y_end;
        Eigen::Map<Mat>(y.data() + m, m, m) = Q;
    }
    LyapunovResult res;
    res.exponents = acc / t;
    std::sort(res.exponents.data(), res.exponents.data() + m, std::greater<double>());
    res.sum = res.exponents.sum();
    res.volume_ok = std::abs(res.sum) <= 1e-3;
    res.renormalizations = windows;
    return res;
}

}  // namespace hamcurv

#endif
