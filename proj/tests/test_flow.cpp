#include <catch2/catch_amalgamated.hpp>

#include "hamcurv/flow.hpp"
#include "support/oracles.hpp"

using namespace hamcurv;
using Catch::Approx;

namespace {

HamiltonianModel harmonic() { return HamiltonianModel::custom_expr(1, "(p1^2 + q1^2)/2"); }
HamiltonianModel free_particle() { return HamiltonianModel::custom_expr(1, "p1^2/2"); }
HamiltonianModel pendulum() {
    return HamiltonianModel::natural(1, ScalarField::from_expr(Expr::parse("cos(q1)", {"q1"})));
}
HamiltonianModel inverted() {
    return HamiltonianModel::natural(1, ScalarField::from_expr(Expr::parse("-q1^2/2", {"q1"})));
}
HamiltonianModel hyperboloid_geodesic() {
    return HamiltonianModel::geodesic(SurfaceOfRevolution::from_expr("sqrt(1 + z^2)").metric());
}

PhasePoint pq(std::initializer_list<double> pv, std::initializer_list<double> qv) {
    Vec p(pv.size()), q(qv.size());
    int i = 0;
    for (double v : pv) p[i++] = v;
    i = 0;
    for (double v : qv) q[i++] = v;
    return PhasePoint(p, q);
}

/// Waist geodesic of the hyperboloid at unit speed (h = 1/2).
PhasePoint waist_point() { return pq({0.0, 1.0}, {0.0, 0.0}); }

PeriodicOrbit waist_orbit(const HamiltonianModel& model) {
    PhasePoint x0 = waist_point();
    Vec shift = Vec::Zero(4);
    shift[3] = 2.0 * M_PI;  // theta advances one turn per period
    Section section{Vec::Unit(4, 3), x0.to_vector() + shift};
    return find_periodic_orbit(model, x0, 2.0 * M_PI, section, shift);
}

}  // namespace

TEST_CASE("harmonic oscillator returns after one period") {
    FlowControls ctrl;
    ctrl.rel_tol = 1e-10;
    Trajectory traj = integrate(harmonic(), pq({1.0}, {0.0}), 0.0, 2.0 * M_PI, ctrl);
    Vec end = traj.back().x.to_vector();
    CHECK(std::abs(end[0] - 1.0) < 1e-8);
    CHECK(std::abs(end[1]) < 1e-8);
    CHECK_FALSE(traj.degraded);
}

TEST_CASE("free particle integrates exactly") {
    Trajectory traj = integrate(free_particle(), pq({2.0}, {0.0}), 0.0, 3.0);
    Vec end = traj.back().x.to_vector();
    CHECK(std::abs(end[0] - 2.0) < 1e-12);
    CHECK(std::abs(end[1] - 6.0) < 1e-12);
}

TEST_CASE("pendulum energy drift stays small over long horizons") {
    FlowControls ctrl;
    ctrl.rel_tol = 1e-10;
    Trajectory traj = integrate(pendulum(), pq({0.4}, {2.0}), 0.0, 50.0, ctrl);
    CHECK(traj.energy_drift <= 1e-8);
    for (std::size_t i = 1; i < traj.samples.size(); ++i)
        CHECK(traj.samples[i].t > traj.samples[i - 1].t);
}

TEST_CASE("variational flow closed forms: S(t)") {
    FlowControls ctrl;
    ctrl.rel_tol = 1e-12;
    ctrl.abs_tol = 1e-14;
    double t = 1.3;

    // free particle: S(t) = t
    auto fr = flow_derivative(free_particle(), pq({0.5}, {0.2}), t, ctrl);
    CHECK(fr.S(0, 0) == Approx(t).epsilon(1e-10));

    // harmonic oscillator: S(t) = sin t
    fr = flow_derivative(harmonic(), pq({0.3}, {0.1}), t, ctrl);
    CHECK(fr.S(0, 0) == Approx(std::sin(t)).epsilon(1e-9));

    // inverted oscillator: S(t) = sinh t
    fr = flow_derivative(inverted(), pq({0.3}, {0.1}), t, ctrl);
    CHECK(fr.S(0, 0) == Approx(std::sinh(t)).epsilon(1e-9));
}

TEST_CASE("variational frames are symplectic along trajectories") {
    std::vector<double> times;
    for (int k = 1; k <= 10; ++k) times.push_back(0.8 * k);
    for (auto& model : {pendulum(), hyperboloid_geodesic()}) {
        PhasePoint x0 = model.dim() == 1 ? pq({0.4}, {2.0}) : pq({0.2, 0.9}, {0.1, 0.0});
        auto frames = variational_flow(model, x0, times.back(), {}, times);
        REQUIRE(frames.size() >= 10);
        for (const auto& fr : frames)
            CHECK(fr.symplectic_defect() <= 1e-7 * fr.Phi.squaredNorm());
    }
}

TEST_CASE("S(0) = 0 and dS/dt(0) equals the fiber Hessian of h") {
    auto model = hyperboloid_geodesic();
    PhasePoint x0 = pq({0.3, 0.8}, {0.2, 0.1});
    auto fr0 = variational_flow(model, x0, 0.0);
    CHECK(fr0.back().S.norm() == 0.0);
    double dt = 1e-6;
    auto fr = flow_derivative(model, x0, dt, {1e-12, 1e-14});
    Mat dS = fr.S / dt;
    Mat dpp = model.second_order(x0).dpp;
    CHECK((dS - dpp).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("time reversal returns the start point") {
    auto model = pendulum();
    PhasePoint x0 = pq({0.4}, {2.0});
    FlowControls ctrl;
    Trajectory fwd = integrate(model, x0, 0.0, 7.0, ctrl);
    Trajectory bwd = integrate(model, fwd.back().x, 7.0, 0.0, ctrl);
    CHECK((bwd.back().x.to_vector() - x0.to_vector()).norm() < 10.0 * ctrl.rel_tol * 1e3);
}

TEST_CASE("equilibrium search: saddle, center, singular") {
    auto res = find_equilibrium(inverted(), pq({0.1}, {0.1}));
    CHECK(res.x_eq.to_vector().norm() < 1e-10);
    REQUIRE(res.spectrum.size() == 2);
    Vec re = res.spectrum.real();
    CHECK(re.minCoeff() == Approx(-1.0).margin(1e-8));
    CHECK(re.maxCoeff() == Approx(1.0).margin(1e-8));
    CHECK(res.hyperbolic);
    CHECK(res.margin == Approx(1.0).margin(1e-8));

    auto osc = find_equilibrium(harmonic(), pq({0.1}, {0.1}));
    CHECK(osc.x_eq.to_vector().norm() < 1e-10);
    CHECK(osc.spectrum.imag().cwiseAbs().maxCoeff() == Approx(1.0).margin(1e-8));
    CHECK(osc.spectrum.real().cwiseAbs().maxCoeff() < 1e-8);
    CHECK_FALSE(osc.hyperbolic);

    CHECK_THROWS_AS(find_equilibrium(free_particle(), pq({0.2}, {0.3})), FlowError);
}

TEST_CASE("periodic orbit: harmonic oscillator closes with identity monodromy") {
    auto model = harmonic();
    PhasePoint guess = pq({0.95}, {0.1});
    Section section{Vec::Unit(2, 1), Vec::Zero(2)};  // q1 = 0
    PeriodicOrbit orbit = find_periodic_orbit(model, guess, 6.0, section);
    CHECK(orbit.period == Approx(2.0 * M_PI).margin(1e-8));
    CHECK(orbit.residual <= 1e-10);
    CHECK((orbit.monodromy - Mat::Identity(2, 2)).norm() < 1e-8);
}

TEST_CASE("periodic orbit: hyperboloid waist geodesic") {
    auto model = hyperboloid_geodesic();
    PeriodicOrbit orbit = waist_orbit(model);
    CHECK(orbit.residual <= 1e-10);
    CHECK(orbit.energy == Approx(0.5).margin(1e-12));
    CHECK(orbit.period == Approx(2.0 * M_PI).margin(1e-8));
}

TEST_CASE("no return to section on a scattering trajectory") {
    auto model = free_particle();
    Section section{Vec::Unit(2, 1), -5.0 * Vec::Unit(2, 1)};  // q1 = -5, moving away
    CHECK_THROWS_AS(find_periodic_orbit(model, pq({1.0}, {0.0}), 3.0, section), FlowError);
}

TEST_CASE("floquet: hyperbolic waist multipliers e^{±2 pi}") {
    auto model = hyperboloid_geodesic();
    PeriodicOrbit orbit = waist_orbit(model);
    FloquetResult fl = floquet_reduced(orbit, model);
    REQUIRE(fl.multipliers.size() == 2);
    std::vector<double> mags{std::abs(fl.multipliers[0]), std::abs(fl.multipliers[1])};
    std::sort(mags.begin(), mags.end());
    CHECK(mags[1] == Approx(std::exp(2.0 * M_PI)).epsilon(1e-4));
    CHECK(mags[0] == Approx(std::exp(-2.0 * M_PI)).epsilon(1e-4));
    CHECK(fl.hyperbolic);
    CHECK(fl.margin == Approx(2.0 * M_PI).margin(1e-3));
}

TEST_CASE("floquet: elliptic circular orbit of the isotropic oscillator") {
    auto model = HamiltonianModel::custom_expr(2, "(p1^2 + p2^2)/2 + (q1^2 + q2^2)/2");
    PhasePoint x0 = pq({0.0, 1.0}, {1.0, 0.0});  // circular orbit
    // section q2 = 0: crossed transversally (q1 = 1 is only touched)
    Section section{Vec::Unit(4, 3), x0.to_vector()};
    PeriodicOrbit orbit = find_periodic_orbit(model, x0, 6.0, section);
    CHECK(orbit.period == Approx(2.0 * M_PI).margin(1e-8));
    FloquetResult fl = floquet_reduced(orbit, model);
    for (int i = 0; i < fl.multipliers.size(); ++i)
        CHECK(std::abs(std::abs(fl.multipliers[i]) - 1.0) < 1e-6);
    CHECK_FALSE(fl.hyperbolic);
}

TEST_CASE("monodromy spectrum does not depend on the starting point") {
    auto model = hyperboloid_geodesic();
    PeriodicOrbit orbit = waist_orbit(model);
    // restart a quarter period later along the same orbit
    std::vector<double> times{0.25 * orbit.period};
    PhasePoint x1 = sample_flow(model, orbit.x0, times)[0];
    Vec shift = Vec::Zero(4);
    shift[3] = 2.0 * M_PI;
    Section section{Vec::Unit(4, 3), x1.to_vector() + shift};
    PeriodicOrbit orbit2 = find_periodic_orbit(model, x1, orbit.period, section, shift);
    auto mags = [](const PeriodicOrbit& o) {
        Eigen::EigenSolver<Mat> es(o.monodromy);
        Vec m = es.eigenvalues().cwiseAbs();
        std::sort(m.data(), m.data() + m.size());
        return m;
    };
    CHECK((mags(orbit) - mags(orbit2)).cwiseAbs().maxCoeff() < 1e-6 * std::exp(2.0 * M_PI));
}

TEST_CASE("lyapunov exponents: integrable flows vanish") {
    auto res = lyapunov_exponents(harmonic(), pq({1.0}, {0.0}), 150.0, 1.0);
    CHECK(res.exponents.cwiseAbs().maxCoeff() <= 5e-3);
    CHECK(res.volume_ok);

    // the free particle's variational flow grows linearly, so the
    // finite-horizon rate decays only like log(T)/T
    auto resf = lyapunov_exponents(free_particle(), pq({1.0}, {0.0}), 150.0, 1.0);
    CHECK(resf.exponents.cwiseAbs().maxCoeff() <= 2.0 * std::log(150.0) / 150.0);
}

TEST_CASE("lyapunov exponents on the hyperboloid waist orbit") {
    auto model = hyperboloid_geodesic();
    FlowControls ctrl;
    ctrl.rel_tol = 1e-12;
    ctrl.abs_tol = 1e-14;
    auto res = lyapunov_exponents(model, waist_point(), 200.0, 0.5, ctrl);
    CHECK(res.exponents[0] == Approx(1.0).epsilon(0.1));
    // symplectic pairing
    const int m = static_cast<int>(res.exponents.size());
    for (int i = 0; i < m / 2; ++i)
        CHECK(std::abs(res.exponents[i] + res.exponents[m - 1 - i]) < 1e-2);
}

TEST_CASE("lyapunov horizon too short is an error") {
    CHECK_THROWS_AS(lyapunov_exponents(harmonic(), pq({1.0}, {0.0}), 5.0, 1.0), FlowError);
}
