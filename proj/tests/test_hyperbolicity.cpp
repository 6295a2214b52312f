#include <catch2/catch_amalgamated.hpp>

#include "hamcurv/hyperbolicity.hpp"
#include "support/oracles.hpp"

using namespace hamcurv;
using Catch::Approx;

namespace {

HamiltonianModel inverted_oscillator() {
    return HamiltonianModel::natural(1, ScalarField::from_expr(Expr::parse("-q1^2/2", {"q1"})));
}
MetricField hyperboloid_metric() { return SurfaceOfRevolution::from_expr("sqrt(1 + z^2)").metric(); }
MetricField sphere_metric() { return MetricField::diagonal({"q1", "q2"}, {"1", "sin(q1)^2"}); }

PhasePoint pq(std::initializer_list<double> pv, std::initializer_list<double> qv) {
    Vec p(pv.size()), q(qv.size());
    int i = 0;
    for (double v : pv) p[i++] = v;
    i = 0;
    for (double v : qv) q[i++] = v;
    return PhasePoint(p, q);
}

PhaseBox box2(double r) {
    PhaseBox b;
    b.lo = Vec::Constant(2, -r);
    b.hi = Vec::Constant(2, r);
    return b;
}

PeriodicOrbit waist_orbit(const HamiltonianModel& model) {
    PhasePoint x0 = pq({0.0, 1.0}, {0.0, 0.0});
    Vec shift = Vec::Zero(4);
    shift[3] = 2.0 * M_PI;
    Section section{Vec::Unit(4, 3), x0.to_vector() + shift};
    return find_periodic_orbit(model, x0, 2.0 * M_PI, section, shift);
}

}  // namespace

TEST_CASE("theorem 1: stable-manifold trajectory of the inverted oscillator") {
    auto model = inverted_oscillator();
    // on the stable manifold p = -q: converges to the saddle at the origin
    auto cert = check_theorem1(model, pq({-0.5}, {0.5}), 40.0, box2(1.0));
    CHECK(cert.monotone_at_start);
    CHECK(cert.stayed_in_box);
    CHECK(cert.curvature_negative_along_trajectory);
    CHECK(cert.curvature_worst_margin == Approx(-1.0).margin(1e-10));
    CHECK(cert.converged);
    REQUIRE(cert.limit_point.has_value());
    CHECK(cert.limit_point->to_vector().norm() < 1e-8);
    CHECK(cert.limit_hyperbolic);
    CHECK(cert.spectral_margin == Approx(1.0).margin(1e-8));
    CHECK(cert.certified());
    CHECK_FALSE(cert.finding());
}

TEST_CASE("theorem 1: the time-reversed statement via the negated Hamiltonian") {
    // a trajectory leaving along the unstable manifold converges backward
    // in time; equivalently forward for -h
    auto neg = inverted_oscillator().negated();
    auto cert = check_theorem1(neg, pq({0.5}, {0.5}), 40.0, box2(1.0));
    CHECK(cert.monotone_at_start);
    CHECK(cert.curvature_negative_along_trajectory);
    CHECK(cert.converged);
    CHECK(cert.certified());
}

TEST_CASE("theorem 1: hypothesis failure is reported, not thrown") {
    // harmonic oscillator: curvature positive, no convergence either
    auto model = HamiltonianModel::natural(
        1, ScalarField::from_expr(Expr::parse("q1^2/2", {"q1"})));
    auto cert = check_theorem1(model, pq({0.5}, {0.0}), 40.0, box2(1.0));
    CHECK(cert.monotone_at_start);
    CHECK(cert.stayed_in_box);
    CHECK_FALSE(cert.curvature_negative_along_trajectory);
    CHECK(cert.curvature_worst_margin == Approx(1.0).margin(1e-10));
    CHECK_FALSE(cert.hypotheses_hold());
    CHECK_FALSE(cert.certified());
    CHECK_FALSE(cert.finding());  // conclusion failure without hypotheses is no finding
}

TEST_CASE("theorem 1: leaving the box voids the compactness surrogate") {
    auto model = inverted_oscillator();
    auto cert = check_theorem1(model, pq({0.5}, {0.5}), 10.0, box2(1.0));  // unstable direction
    CHECK_FALSE(cert.stayed_in_box);
    CHECK_FALSE(cert.certified());
}

TEST_CASE("theorem 2: the hyperboloid waist orbit is certified") {
    auto model = HamiltonianModel::geodesic(hyperboloid_metric());
    PeriodicOrbit orbit = waist_orbit(model);
    auto cert = check_theorem2_orbit(model, orbit);
    CHECK(cert.on_energy_level);
    CHECK(cert.field_never_vertical);
    CHECK(cert.reduced_curvature_negative);
    CHECK(cert.reduced_worst_margin == Approx(-1.0).margin(1e-6));
    CHECK(cert.hyperbolic);
    CHECK(cert.floquet_margin == Approx(2.0 * M_PI).margin(1e-3));
    CHECK(cert.certified());
}

TEST_CASE("theorem 2: the sphere equator fails the curvature hypothesis") {
    auto model = HamiltonianModel::geodesic(sphere_metric());
    PhasePoint x0 = pq({0.0, 1.0}, {M_PI / 2.0, 0.0});  // great circle along the equator
    Section section{Vec::Unit(4, 3), x0.to_vector() + 2.0 * M_PI * Vec::Unit(4, 3)};
    Vec shift = 2.0 * M_PI * Vec::Unit(4, 3);
    PeriodicOrbit orbit = find_periodic_orbit(model, x0, 2.0 * M_PI, section, shift);
    auto cert = check_theorem2_orbit(model, orbit);
    CHECK(cert.on_energy_level);
    CHECK(cert.field_never_vertical);
    CHECK_FALSE(cert.reduced_curvature_negative);
    CHECK(cert.reduced_worst_margin > 0.0);
    CHECK_FALSE(cert.hyperbolic);
    CHECK_FALSE(cert.certified());
    CHECK_FALSE(cert.finding());
}

TEST_CASE("theorem 2 rejects a sloppy orbit") {
    auto model = HamiltonianModel::geodesic(hyperboloid_metric());
    PeriodicOrbit orbit = waist_orbit(model);
    orbit.residual = 1e-3;
    CHECK_THROWS_AS(check_theorem2_orbit(model, orbit), std::invalid_argument);
}

TEST_CASE("domain inequality: free hyperboloid at c = 1") {
    auto model = HamiltonianModel::geodesic(hyperboloid_metric());
    Vec q = Vec::Zero(2);
    auto v = check_domain(model, q, 1.0);
    CHECK(v.kappa == Approx(-1.0).margin(1e-8));
    CHECK(v.kappa_exact);
    CHECK(v.lhs == Approx(0.0).margin(1e-10));  // U = 0: no gradient, no hessian
    CHECK(v.rhs == Approx(2.0).margin(1e-8));
    CHECK(v.inside);
}

TEST_CASE("domain inequality: positive or flat curvature is outside") {
    auto sphere = HamiltonianModel::geodesic(sphere_metric());
    Vec q(2);
    q << M_PI / 2.0, 0.0;
    CHECK_FALSE(check_domain(sphere, q, 1.0).inside);

    auto flat = HamiltonianModel::geodesic(MetricField::identity(2));
    CHECK_FALSE(check_domain(flat, Vec::Zero(2), 1.0).inside);
}

TEST_CASE("domain inequality: energy below the potential is a domain error") {
    auto model = HamiltonianModel::mechanical(
        hyperboloid_metric(), ScalarField::from_expr(Expr::parse("q1^2", {"q1", "q2"})));
    Vec q(2);
    q << 2.0, 0.0;
    CHECK_THROWS_AS(check_domain(model, q, 1.0), DomainError);
}

TEST_CASE("domain verdict is invariant under reparametrizing the profile") {
    // same hyperboloid, metric entered directly instead of via the profile
    auto direct = MetricField::from_entries(
        {"q1", "q2"}, {"1 + q1^2/(1 + q1^2)", "0", "0", "1 + q1^2"});
    auto a = HamiltonianModel::geodesic(hyperboloid_metric());
    auto b = HamiltonianModel::geodesic(direct);
    Vec q(2);
    q << 0.4, 0.0;
    auto va = check_domain(a, q, 2.0);
    auto vb = check_domain(b, q, 2.0);
    CHECK(va.kappa == Approx(vb.kappa).margin(1e-6));
    CHECK(va.lhs == Approx(vb.lhs).margin(1e-8));
    CHECK(va.rhs == Approx(vb.rhs).margin(1e-6));
    CHECK(va.inside == vb.inside);
}

TEST_CASE("domain sweep: inside fraction grows with energy") {
    auto model = HamiltonianModel::mechanical(
        hyperboloid_metric(), ScalarField::from_expr(Expr::parse("q1^2", {"q1", "q2"})));
    std::vector<Vec> grid;
    for (int i = -10; i <= 10; ++i) {
        Vec q(2);
        q << 0.2 * i, 0.0;
        grid.push_back(q);
    }
    auto sweep = sweep_domain_energies(model, grid, {2.0, 5.0, 10.0});
    REQUIRE(sweep.inside_fractions.size() == 3);
    CHECK(sweep.inside_fractions[0] > 0.0);
    CHECK(sweep.fraction_monotone_in_c);
    CHECK(sweep.inside_fractions[2] >= sweep.inside_fractions[0]);
}

TEST_CASE("domain check against direct evaluation at scattered points") {
    auto model = HamiltonianModel::mechanical(
        hyperboloid_metric(), ScalarField::from_expr(Expr::parse("0.1*q1", {"q1", "q2"})));
    auto metric = hyperboloid_metric();
    auto U = model.potential();
    auto gen = testing::rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Vec q = testing::random_vec(gen, 2, -1.5, 1.5);
        double c = 1.0 + trial * 0.2;
        auto v = check_domain(model, q, c);
        // independent re-evaluation of both sides from the raw ingredients
        double cu = c - U.value(q);
        double kappa = riemann_sectional(metric, q, Vec::Unit(2, 0), Vec::Unit(2, 1));
        double gn = grad_U_norm(metric, U, q);
        double hn = hessian_U_opnorm(metric, U, q);
        double lhs = hn + (3.0 / (2.0 * cu) + std::abs(kappa)) * gn * gn;
        double rhs = 2.0 * std::abs(kappa) * cu;
        CHECK(v.lhs == Approx(lhs).margin(1e-8));
        CHECK(v.rhs == Approx(rhs).margin(1e-8));
        CHECK(v.inside == (kappa < 0.0 && lhs < rhs));
    }
}
