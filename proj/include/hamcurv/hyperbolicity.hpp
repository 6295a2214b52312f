#ifndef HAMCURV_HYPERBOLICITY_HPP
#define HAMCURV_HYPERBOLICITY_HPP

// Machine-checkable certificates for hyperbolic behavior:
//  - convergence of a bounded semi-trajectory to a hyperbolic equilibrium
//    under negative curvature (checked along samples);
//  - hyperbolicity of a periodic orbit within its energy level under
//    negative reduced curvature (Floquet multipliers off the unit circle);
//  - the configuration-space domain inequality that guarantees the above
//    for mechanical systems on a Riemannian manifold.
//
// A certificate never asserts a conclusion unless every hypothesis flag
// holds; hypothesis failures are reported, not thrown.

#include <optional>
#include <string>
#include <vector>

#include "hamcurv/curvature.hpp"
#include "hamcurv/flow.hpp"

namespace hamcurv {

/// User-declared compact box in phase space. Containment over the horizon
/// stands in for compactness of the closure, which cannot be verified
/// numerically in finite time; certificates state this limitation.
struct PhaseBox {
    Vec lo, hi;

    bool contains(const Vec& y) const {
        return (y.array() >= lo.array()).all() && (y.array() <= hi.array()).all();
    }
    double diameter() const { return (hi - lo).norm(); }
};

struct Theorem1Certificate {
    // trajectory summary
    double horizon = 0.0;
    long samples = 0;
    double energy_drift = 0.0;

    // hypotheses
    bool monotone_at_start = false;
    bool stayed_in_box = false;
    bool curvature_negative_along_trajectory = false;
    double curvature_worst_margin = 0.0;  // max over samples of max eigenvalue of R

    // conclusion
    bool converged = false;
    double convergence_residual = std::numeric_limits<double>::infinity();
    std::optional<PhasePoint> limit_point;
    VecC spectrum;
    bool limit_hyperbolic = false;
    double spectral_margin = 0.0;

    std::vector<std::string> notes;

    bool hypotheses_hold() const {
        return monotone_at_start && stayed_in_box && curvature_negative_along_trajectory;
    }
    bool conclusion_holds() const { return converged && limit_hyperbolic; }
    /// True when hypotheses hold and the predicted conclusion was observed.
    bool certified() const { return hypotheses_hold() && conclusion_holds(); }
    /// Hypotheses hold but the conclusion failed: a reportable finding.
    bool finding() const { return hypotheses_hold() && !conclusion_holds(); }
};

inline CurvatureData curvature_any(const HamiltonianModel& model, const PhasePoint& x) {
    if (model.family() == Family::Custom || model.sign() < 0)
        return curvature_schwartzian(model, x);
    return curvature_closed_form(model, x);
}

/// Follow the forward semi-trajectory, verify negative curvature along it,
/// detect convergence, and polish the limit with a Newton equilibrium solve.
inline Theorem1Certificate check_theorem1(const HamiltonianModel& model, const PhasePoint& x0,
                                          double horizon, const PhaseBox& box,
                                          int sample_stride = 10,
                                          const FlowControls& ctrl = {}) {
    Theorem1Certificate cert;
    cert.horizon = horizon;
    cert.notes.push_back(
        "compactness of the closure is approximated by containment in the declared box over "
        "the finite horizon");

    GForm g0 = g_form(model, x0);
    cert.monotone_at_start = g0.is_monotone();
    if (!cert.monotone_at_start) {
        cert.notes.push_back("hypothesis violated: the field is not monotone at the start point");
        return cert;
    }

    Trajectory traj;
    try {
        traj = integrate(model, x0, 0.0, horizon, ctrl);
    } catch (const IntegrationError& e) {
        cert.notes.push_back(std::string("integration stopped early: ") + e.what());
        return cert;
    }
    cert.samples = static_cast<long>(traj.samples.size());
    cert.energy_drift = traj.energy_drift;

    cert.stayed_in_box = true;
    for (const auto& smp : traj.samples)
        if (!box.contains(smp.x.to_vector())) {
            cert.stayed_in_box = false;
            cert.notes.push_back("trajectory left the declared box; compact closure unverifiable");
            break;
        }

    cert.curvature_negative_along_trajectory = true;
    cert.curvature_worst_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.samples.size();
         i += static_cast<std::size_t>(std::max(1, sample_stride)))
        try {
            CurvatureData c = curvature_any(model, traj.samples[i].x);
            double top = c.eigenvalues.maxCoeff();
            cert.curvature_worst_margin = std::max(cert.curvature_worst_margin, top);
            if (c.sign_class != SignClass::Negative) cert.curvature_negative_along_trajectory = false;
        } catch (const DomainError&) {
            cert.curvature_negative_along_trajectory = false;
            cert.notes.push_back("curvature evaluation failed along the trajectory");
            break;
        }

    // convergence: trailing 10% of the horizon stays within a small ball
    double window_start = 0.9 * horizon;
    double spread = 0.0;
    const Vec y_end = traj.back().x.to_vector();
    for (const auto& smp : traj.samples)
        if (smp.t >= window_start) spread = std::max(spread, (smp.x.to_vector() - y_end).norm());
    double threshold = 1e-6 * std::max(box.diameter(), 1e-300);
    cert.converged = spread <= threshold;
    if (!cert.converged) {
        cert.notes.push_back("no convergence detected within the horizon");
        return cert;
    }

    try {
        EquilibriumResult eq = find_equilibrium(model, traj.back().x);
        cert.limit_point = eq.x_eq;
        cert.spectrum = eq.spectrum;
        cert.limit_hyperbolic = eq.hyperbolic;
        cert.spectral_margin = eq.margin;
        cert.convergence_residual = (y_end - eq.x_eq.to_vector()).norm();
    } catch (const FlowError& e) {
        cert.converged = false;
        cert.notes.push_back(std::string("equilibrium polish failed: ") + e.what());
    }
    return cert;
}

struct Theorem2Certificate {
    double energy = 0.0;
    double period = 0.0;
    double orbit_residual = 0.0;
    long samples = 0;

    // hypotheses along the sampled orbit
    bool on_energy_level = false;     // |h - c| <= 1e-8 at all samples
    bool field_never_vertical = false;  // dh/dp != 0 at all samples
    bool reduced_curvature_negative = false;
    double reduced_worst_margin = 0.0;  // max over samples of max eigenvalue of g^-1 r_hat

    // conclusion (Floquet)
    VecC multipliers;
    bool hyperbolic = false;
    double floquet_margin = 0.0;

    std::vector<std::string> notes;

    bool hypotheses_hold() const {
        return on_energy_level && field_never_vertical && reduced_curvature_negative;
    }
    bool certified() const { return hypotheses_hold() && hyperbolic; }
    bool finding() const { return hypotheses_hold() && !hyperbolic; }
};

/// Sample the periodic orbit, verify the reduced-curvature hypotheses at
/// each sample, and certify hyperbolicity from the Floquet multipliers.
inline Theorem2Certificate check_theorem2_orbit(const HamiltonianModel& model,
                                                const PeriodicOrbit& orbit, int num_samples = 64,
                                                const FlowControls& ctrl = {}) {
    if (orbit.residual > 1e-8)
        throw std::invalid_argument("periodic orbit residual too large for certification");
    Theorem2Certificate cert;
    cert.energy = orbit.energy;
    cert.period = orbit.period;
    cert.orbit_residual = orbit.residual;
    cert.samples = num_samples;

    std::vector<double> times;
    for (int k = 1; k <= num_samples; ++k)
        times.push_back(orbit.period * static_cast<double>(k) / num_samples);
    std::vector<PhasePoint> pts = sample_flow(model, orbit.x0, times, ctrl);
    pts.push_back(orbit.x0);

    cert.on_energy_level = true;
    cert.field_never_vertical = true;
    cert.reduced_curvature_negative = true;
    cert.reduced_worst_margin = -std::numeric_limits<double>::infinity();
    for (const auto& x : pts) {
        if (std::abs(model.value(x) - orbit.energy) > 1e-8) cert.on_energy_level = false;
        SecondOrder s = model.second_order(x);
        if (s.dp.norm() <= 1e-12 * std::max(1.0, x.p.norm())) {
            cert.field_never_vertical = false;
            cert.reduced_curvature_negative = false;
            cert.notes.push_back("hvec is vertical at a sampled point");
            break;
        }
        try {
            ReducedCurvatureData rc = reduced_curvature(
                model, x,
                model.family() == Family::Custom ? ReducedMethod::Bracket
                                                 : ReducedMethod::ClosedForm);
            Mat gpd = rc.g_hat;
            double flip = 1.0;
            if ((Eigen::SelfAdjointEigenSolver<Mat>(gpd).eigenvalues().array() < 0.0).all()) {
                gpd = -gpd;
                flip = -1.0;
            }
            Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(flip * rc.r_hat, gpd);
            cert.reduced_worst_margin =
                std::max(cert.reduced_worst_margin, es.eigenvalues().maxCoeff());
            if (rc.sign_class != SignClass::Negative) cert.reduced_curvature_negative = false;
        } catch (const DomainError& e) {
            cert.reduced_curvature_negative = false;
            cert.notes.push_back(std::string("reduced curvature failed at a sample: ") + e.what());
            break;
        }
    }

    try {
        FloquetResult fl = floquet_reduced(orbit, model);
        cert.multipliers = fl.multipliers;
        cert.hyperbolic = fl.hyperbolic;
        cert.floquet_margin = fl.margin;
    } catch (const FlowError& e) {
        cert.notes.push_back(std::string("Floquet reduction failed: ") + e.what());
    }
    return cert;
}

// --- configuration-space domain --------------------------------------------

struct DomainVerdict {
    Vec q;
    double kappa = 0.0;  // maximal sectional curvature at q
    bool kappa_exact = true;
    double lhs = 0.0, rhs = 0.0;
    bool inside = false;
};

/// Evaluates, at configuration q and energy c,
///   |grad^2 U| + (3 / (2(c-U)) + |kappa|) |grad U|^2  <  2 |kappa| (c - U)
/// with kappa < 0 required. Norms are the g-operator and g-vector norms.
inline DomainVerdict check_domain(const HamiltonianModel& model, const Vec& q, double c) {
    if (model.family() != Family::MechanicalOnManifold && model.family() != Family::Geodesic)
        throw std::invalid_argument("domain check requires a metric-based family");
    const MetricField& metric = model.metric();
    ScalarField U = model.has_potential() ? model.potential() : ScalarField::zero(metric.dim());

    DomainVerdict v;
    v.q = q;
    double Uq = U.value(q);
    if (c <= Uq) throw DomainError("energy c must exceed U(q)");
    MaxSectional ms = max_sectional(metric, q);
    v.kappa = ms.value;
    v.kappa_exact = ms.exact;
    double hn = hessian_U_opnorm(metric, U, q);
    double gn = grad_U_norm(metric, U, q);
    double cu = c - Uq;
    v.lhs = hn + (3.0 / (2.0 * cu) + std::abs(v.kappa)) * gn * gn;
    v.rhs = 2.0 * std::abs(v.kappa) * cu;
    v.inside = v.kappa < 0.0 && v.lhs < v.rhs;
    return v;
}

struct DomainSweep {
    std::vector<DomainVerdict> verdicts;
    std::vector<std::string> errors;
    double inside_fraction = 0.0;
};

inline DomainSweep sweep_domain(const HamiltonianModel& model, const std::vector<Vec>& grid,
                                double c) {
    DomainSweep sweep;
    long inside = 0;
    for (const auto& q : grid) {
        try {
            DomainVerdict v = check_domain(model, q, c);
            if (v.inside) ++inside;
            sweep.verdicts.push_back(std::move(v));
        } catch (const DomainError& e) {
            sweep.errors.push_back(e.what());
        } catch (const std::exception& e) {
            sweep.errors.push_back(e.what());
        }
    }
    if (!grid.empty()) sweep.inside_fraction = static_cast<double>(inside) / grid.size();
    return sweep;
}

struct DomainEnergySweep {
    std::vector<double> energies;
    std::vector<double> inside_fractions;
    bool fraction_monotone_in_c = false;
};

/// Inside-fraction across energies; for bounded U with kappa <= kappa_max < 0
/// on a fixed grid the fraction is non-decreasing in c.
inline DomainEnergySweep sweep_domain_energies(const HamiltonianModel& model,
                                               const std::vector<Vec>& grid,
                                               std::vector<double> energies) {
    DomainEnergySweep out;
    std::sort(energies.begin(), energies.end());
    out.energies = energies;
    for (double c : energies) out.inside_fractions.push_back(sweep_domain(model, grid, c).inside_fraction);
    out.fraction_monotone_in_c = true;
    for (std::size_t i = 1; i < out.inside_fractions.size(); ++i)
        if (out.inside_fractions[i] + 1e-12 < out.inside_fractions[i - 1])
            out.fraction_monotone_in_c = false;
    return out;
}

}  // namespace hamcurv

#endif
