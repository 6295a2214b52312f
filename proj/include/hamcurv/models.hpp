#ifndef HAMCURV_MODELS_HPP
#define HAMCURV_MODELS_HPP

// Phase space in a single canonical chart: M = R^2n with coordinates
// x = (p, q), symplectic form sigma = sum dp_i ^ dq_i, and the vertical
// distribution Delta = span{d/dp_i}. Hamiltonian families:
//
//   Natural               h = 1/2 |p|^2 + U(q)
//   Geodesic              h = 1/2 p^T g^{-1}(q) p
//   MechanicalOnManifold  h = 1/2 p^T g^{-1}(q) p + U(q)
//   Custom                h = user expression in (p, q)
//
// All evaluations are pure; models and metrics are immutable after
// construction and safe for concurrent use.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "hamcurv/exprdsl.hpp"
#include "hamcurv/jet.hpp"

namespace hamcurv {

struct PhasePoint {
    Vec p, q;

    PhasePoint() = default;
    PhasePoint(Vec p_, Vec q_) : p(std::move(p_)), q(std::move(q_)) {
        if (p.size() != q.size() || p.size() < 1)
            throw std::invalid_argument("p and q must have equal length n >= 1");
        if (!p.allFinite() || !q.allFinite())
            throw std::invalid_argument("phase point entries must be finite");
    }

    int n() const { return static_cast<int>(p.size()); }

    Vec to_vector() const {
        Vec y(2 * n());
        y << p, q;
        return y;
    }
    static PhasePoint from_vector(const Vec& y) {
        const int n = static_cast<int>(y.size()) / 2;
        return PhasePoint(y.head(n), y.tail(n));
    }
};

// --- symplectic convention -------------------------------------------------

/// Matrix J of sigma in (p,q) coordinates: sigma(a,b) = a^T J b with
/// sigma((dp,dq),(dp',dq')) = <dp,dq'> - <dp',dq>.
inline Mat symplectic_matrix(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = Mat::Identity(n, n);
    J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return J;
}

inline double sigma_form(const Vec& a, const Vec& b) {
    const int n = static_cast<int>(a.size()) / 2;
    return a.head(n).dot(b.tail(n)) - b.head(n).dot(a.tail(n));
}

// --- scalar fields ---------------------------------------------------------

/// A scalar field with second-order jet access, backed by an expression or
/// an arbitrary callable.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int nvars, std::function<Jet(const Vec&)> fn)
        : nvars_(nvars), fn_(std::move(fn)) {}

    static ScalarField from_expr(Expr e) {
        const int m = static_cast<int>(e.variables().size());
        auto shared = std::make_shared<Expr>(std::move(e));
        return ScalarField(m, [shared](const Vec& x) { return shared->eval_jet(x); });
    }
    static ScalarField zero(int nvars) {
        return ScalarField(nvars, [nvars](const Vec&) { return Jet::constant(nvars, 0.0); });
    }
    static ScalarField constant(int nvars, double c) {
        return ScalarField(nvars, [nvars, c](const Vec&) { return Jet::constant(nvars, c); });
    }

    bool valid() const { return static_cast<bool>(fn_); }
    int vars() const { return nvars_; }
    Jet jet(const Vec& x) const { return fn_(x); }
    double value(const Vec& x) const { return fn_(x).v; }

private:
    int nvars_ = 0;
    std::function<Jet(const Vec&)> fn_;
};

// --- Riemannian metric -----------------------------------------------------

namespace detail {
inline double fd_step(double scale) {
    return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + scale);
}
}  // namespace detail

/// Riemannian metric g_ij(q) given by scalar-field entries. No evaluation
/// cache is kept; every query re-evaluates the entry jets.
class MetricField {
public:
    MetricField() = default;

    /// entries: row-major n*n list; symmetry of the value is checked at
    /// evaluation time (entries (i,j) and (j,i) may share a field).
    MetricField(int n, std::vector<ScalarField> entries)
        : n_(n), entries_(std::move(entries)) {
        if (static_cast<int>(entries_.size()) != n_ * n_)
            throw std::invalid_argument("metric needs n*n entry fields");
    }

    static MetricField identity(int n) {
        std::vector<ScalarField> e;
        e.reserve(n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                e.push_back(ScalarField::constant(n, i == j ? 1.0 : 0.0));
        return MetricField(n, std::move(e));
    }

    /// Diagonal metric from expressions in variables `vars`.
    static MetricField diagonal(const std::vector<std::string>& vars,
                                const std::vector<std::string>& diag_exprs) {
        const int n = static_cast<int>(vars.size());
        std::vector<ScalarField> e(n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                e[i * n + j] = (i == j)
                                   ? ScalarField::from_expr(Expr::parse(diag_exprs[i], vars))
                                   : ScalarField::zero(n);
        return MetricField(n, std::move(e));
    }

    static MetricField from_entries(const std::vector<std::string>& vars,
                                    const std::vector<std::string>& entry_exprs) {
        const int n = static_cast<int>(vars.size());
        if (static_cast<int>(entry_exprs.size()) != n * n)
            throw std::invalid_argument("need n*n metric entry expressions");
        std::vector<ScalarField> e(n * n);
        for (int k = 0; k < n * n; ++k)
            e[k] = ScalarField::from_expr(Expr::parse(entry_exprs[k], vars));
        return MetricField(n, std::move(e));
    }

    int dim() const { return n_; }
    bool valid() const { return n_ > 0; }

    /// g(q); throws DomainError unless symmetric positive definite.
    Mat value(const Vec& q) const {
        Mat g(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) g(i, j) = entries_[i * n_ + j].value(q);
        check_spd(g);
        return g;
    }

    struct Fundamentals {
        Mat g;                       // g_ij
        Mat ginv;                    // g^ij
        std::vector<Mat> dg;         // dg[k](i,j)  = d_k g_ij
        std::vector<std::vector<Mat>> ddg;  // ddg[k][l] = d_k d_l g_ij
    };

    Fundamentals fundamentals(const Vec& q) const {
        Fundamentals f;
        f.g = Mat(n_, n_);
        f.dg.assign(n_, Mat::Zero(n_, n_));
        f.ddg.assign(n_, std::vector<Mat>(n_, Mat::Zero(n_, n_)));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                Jet e = entries_[i * n_ + j].jet(q);
                f.g(i, j) = e.v;
                for (int k = 0; k < n_; ++k) {
                    f.dg[k](i, j) = e.g[k];
                    for (int l = 0; l < n_; ++l) f.ddg[k][l](i, j) = e.h(k, l);
                }
            }
        check_spd(f.g);
        f.ginv = f.g.inverse();
        return f;
    }

private:
    void check_spd(const Mat& g) const {
        if ((g - g.transpose()).cwiseAbs().maxCoeff() != 0.0)
            throw DomainError("metric is not symmetric at the queried point");
        Eigen::LLT<Mat> llt(g);
        if (llt.info() != Eigen::Success)
            throw DomainError("metric is not positive definite at the queried point");
    }

    int n_ = 0;
    std::vector<ScalarField> entries_;
};

/// Christoffel symbols Gamma^k_ij from first derivatives of g.
/// Result: gamma[k](i,j), symmetric in (i,j).
inline std::vector<Mat> christoffel(const MetricField& metric, const Vec& q) {
    const int n = metric.dim();
    auto f = metric.fundamentals(q);
    std::vector<Mat> gamma(n, Mat::Zero(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    s += f.ginv(k, l) * (f.dg[i](j, l) + f.dg[j](i, l) - f.dg[l](i, j));
                gamma[k](i, j) = 0.5 * s;
            }
    return gamma;
}

/// Riemann tensor R^l_ijk with (R(e_i,e_j)e_k)^l; the Christoffel
/// derivatives are taken by central finite differences.
struct RiemannTensor {
    int n;
    std::vector<double> data;  // [((l*n + i)*n + j)*n + k]

    double operator()(int l, int i, int j, int k) const {
        return data[((static_cast<std::size_t>(l) * n + i) * n + j) * n + k];
    }
    double& at(int l, int i, int j, int k) {
        return data[((static_cast<std::size_t>(l) * n + i) * n + j) * n + k];
    }

    /// (R(u,v)w)^l
    Vec apply(const Vec& u, const Vec& v, const Vec& w) const {
        Vec out = Vec::Zero(n);
        for (int l = 0; l < n; ++l) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) s += (*this)(l, i, j, k) * u[i] * v[j] * w[k];
            out[l] = s;
        }
        return out;
    }
};

inline RiemannTensor riemann_tensor(const MetricField& metric, const Vec& q) {
    const int n = metric.dim();
    auto gamma = christoffel(metric, q);

    // dgamma[i][k](a,b) = d_i Gamma^k_ab
    const double h = detail::fd_step(q.norm());
    std::vector<std::vector<Mat>> dgamma(n, std::vector<Mat>(n));
    for (int i = 0; i < n; ++i) {
        Vec qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        auto gp = christoffel(metric, qp);
        auto gm = christoffel(metric, qm);
        for (int k = 0; k < n; ++k) dgamma[i][k] = (gp[k] - gm[k]) / (2.0 * h);
    }

    RiemannTensor R{n, std::vector<double>(static_cast<std::size_t>(n) * n * n * n)};
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double s = dgamma[i][l](j, k) - dgamma[j][l](i, k);
                    for (int m = 0; m < n; ++m)
                        s += gamma[l](i, m) * gamma[m](j, k) - gamma[l](j, m) * gamma[m](i, k);
                    R.at(l, i, j, k) = s;
                }
    return R;
}

/// Sectional curvature of the plane spanned by tangent vectors (u, v).
inline double riemann_sectional(const MetricField& metric, const Vec& q, const Vec& u,
                                const Vec& v) {
    Mat g = metric.value(q);
    double guu = u.dot(g * u), gvv = v.dot(g * v), guv = u.dot(g * v);
    double area2 = guu * gvv - guv * guv;
    if (area2 <= 1e-12 * std::max(guu * gvv, 1e-300))
        throw DomainError("degenerate plane for sectional curvature");
    RiemannTensor R = riemann_tensor(metric, q);
    Vec Ruvv = R.apply(u, v, v);
    return u.dot(g * Ruvv) / area2;
}

/// Maximal sectional curvature at q. Exact for n = 2 (Gaussian curvature,
/// plane-independent); for n >= 3 estimated by sampling random planes.
struct MaxSectional {
    double value;
    bool exact;
};

inline MaxSectional max_sectional(const MetricField& metric, const Vec& q,
                                  int samples = 256, std::uint64_t seed = 12345) {
    const int n = metric.dim();
    if (n == 2) {
        Vec u = Vec::Unit(2, 0), v = Vec::Unit(2, 1);
        return {riemann_sectional(metric, q, u, v), true};
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double best = -std::numeric_limits<double>::infinity();
    // coordinate planes first, then random ones
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            best = std::max(best, riemann_sectional(metric, q, Vec::Unit(n, i), Vec::Unit(n, j)));
    for (int s = 0; s < samples; ++s) {
        Vec u(n), v(n);
        for (int i = 0; i < n; ++i) { u[i] = gauss(rng); v[i] = gauss(rng); }
        try {
            best = std::max(best, riemann_sectional(metric, q, u, v));
        } catch (const DomainError&) {
            // nearly collinear draw; skip
        }
    }
    return {best, false};
}

/// Covariant Hessian of a potential: (grad^2 U)_ij = d_i d_j U - Gamma^k_ij d_k U.
inline Mat covariant_hessian_U(const MetricField& metric, const ScalarField& U, const Vec& q) {
    const int n = metric.dim();
    Jet u = U.jet(q);
    auto gamma = christoffel(metric, q);
    Mat H(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = u.h(i, j);
            for (int k = 0; k < n; ++k) s -= gamma[k](i, j) * u.g[k];
            H(i, j) = s;
        }
    return H;
}

/// Metric norm of grad U: sqrt(dU^T g^{-1} dU).
inline double grad_U_norm(const MetricField& metric, const ScalarField& U, const Vec& q) {
    Mat g = metric.value(q);
    Vec dU = U.jet(q).g;
    return std::sqrt(dU.dot(g.llt().solve(dU)));
}

/// g-operator norm of the covariant Hessian: max |eigenvalue| of g^{-1} grad^2 U.
inline double hessian_U_opnorm(const MetricField& metric, const ScalarField& U, const Vec& q) {
    Mat H = covariant_hessian_U(metric, U, q);
    Mat g = metric.value(q);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()), g);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// --- surface of revolution -------------------------------------------------

/// Surface of revolution with profile r(z) > 0 and induced metric
/// diag(1 + r'(z)^2, r(z)^2) in coordinates (z, theta).
class SurfaceOfRevolution {
public:
    explicit SurfaceOfRevolution(ScalarField profile) : profile_(std::move(profile)) {
        if (profile_.vars() != 1)
            throw std::invalid_argument("profile must be a function of the single variable z");
    }

    static SurfaceOfRevolution from_expr(const std::string& r_of_z) {
        return SurfaceOfRevolution(ScalarField::from_expr(Expr::parse(r_of_z, {"z"})));
    }

    const ScalarField& profile() const { return profile_; }

    /// r, r', r'' from the jet; r''' by central differences of r''.
    void profile_derivs(double z, double& r, double& r1, double& r2, double& r3) const {
        Vec zq(1);
        zq << z;
        Jet j = profile_.jet(zq);
        r = j.v;
        r1 = j.g[0];
        r2 = j.h(0, 0);
        const double h = detail::fd_step(std::abs(z));
        Vec zp(1), zm(1);
        zp << z + h;
        zm << z - h;
        r3 = (profile_.jet(zp).h(0, 0) - profile_.jet(zm).h(0, 0)) / (2.0 * h);
        if (r <= 0.0) throw DomainError("profile r(z) must be positive");
    }

    /// Induced metric on (z, theta).
    MetricField metric() const {
        auto self = *this;
        ScalarField g11(2, [self](const Vec& q) {
            double r, r1, r2, r3;
            self.profile_derivs(q[0], r, r1, r2, r3);
            Jet j = Jet::constant(2, 1.0 + r1 * r1);
            j.g[0] = 2.0 * r1 * r2;
            j.h(0, 0) = 2.0 * r2 * r2 + 2.0 * r1 * r3;
            return j;
        });
        ScalarField g22(2, [self](const Vec& q) {
            double r, r1, r2, r3;
            self.profile_derivs(q[0], r, r1, r2, r3);
            Jet j = Jet::constant(2, r * r);
            j.g[0] = 2.0 * r * r1;
            j.h(0, 0) = 2.0 * r1 * r1 + 2.0 * r * r2;
            return j;
        });
        std::vector<ScalarField> e{g11, ScalarField::zero(2), ScalarField::zero(2), g22};
        return MetricField(2, std::move(e));
    }

    /// Gaussian curvature K = -r'' / (r (1 + r'^2)^2).
    double gaussian_curvature(double z) const {
        double r, r1, r2, r3;
        profile_derivs(z, r, r1, r2, r3);
        double t = 1.0 + r1 * r1;
        return -r2 / (r * t * t);
    }

private:
    ScalarField profile_;
};

// --- Hamiltonian models ----------------------------------------------------

enum class Family { Natural, Geodesic, MechanicalOnManifold, Custom };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Natural: return "natural";
        case Family::Geodesic: return "geodesic";
        case Family::MechanicalOnManifold: return "mechanical";
        case Family::Custom: return "custom";
    }
    return "?";
}

/// Full second-order data of h at a phase point, in (p, q) blocks.
/// dpq(i,j) = d^2 h / dp_i dq_j.
struct SecondOrder {
    double value;
    Vec dp, dq;
    Mat dpp, dpq, dqq;
};

class HamiltonianModel {
public:
    static HamiltonianModel natural(int n, ScalarField potential) {
        HamiltonianModel m;
        m.family_ = Family::Natural;
        m.n_ = n;
        m.U_ = std::move(potential);
        m.check();
        return m;
    }
    static HamiltonianModel geodesic(MetricField metric) {
        HamiltonianModel m;
        m.family_ = Family::Geodesic;
        m.n_ = metric.dim();
        m.metric_ = std::move(metric);
        m.check();
        return m;
    }
    static HamiltonianModel mechanical(MetricField metric, ScalarField potential) {
        HamiltonianModel m;
        m.family_ = Family::MechanicalOnManifold;
        m.n_ = metric.dim();
        m.metric_ = std::move(metric);
        m.U_ = std::move(potential);
        m.check();
        return m;
    }
    static HamiltonianModel custom(int n, ScalarField h_of_pq) {
        HamiltonianModel m;
        m.family_ = Family::Custom;
        m.n_ = n;
        m.custom_ = std::move(h_of_pq);
        m.check();
        return m;
    }
    /// Custom model from an expression in p1..pn, q1..qn.
    static HamiltonianModel custom_expr(int n, const std::string& src) {
        std::vector<std::string> vars;
        for (int i = 1; i <= n; ++i) vars.push_back("p" + std::to_string(i));
        for (int i = 1; i <= n; ++i) vars.push_back("q" + std::to_string(i));
        return custom(n, ScalarField::from_expr(Expr::parse(src, vars)));
    }

    /// Model with the Hamiltonian replaced by -h (time reversal).
    HamiltonianModel negated() const {
        HamiltonianModel m = *this;
        m.sign_ = -m.sign_;
        return m;
    }
    double sign() const { return sign_; }

    Family family() const { return family_; }
    int dim() const { return n_; }
    const MetricField& metric() const { return metric_; }
    const ScalarField& potential() const { return U_; }
    bool has_potential() const { return U_.valid(); }

    double value(const PhasePoint& x) const { return second_order(x).value; }

    SecondOrder second_order(const PhasePoint& x) const {
        SecondOrder s = second_order_raw(x);
        if (sign_ < 0) {
            s.value = -s.value;
            s.dp = -s.dp;
            s.dq = -s.dq;
            s.dpp = -s.dpp;
            s.dpq = -s.dpq;
            s.dqq = -s.dqq;
        }
        return s;
    }

private:
    SecondOrder second_order_raw(const PhasePoint& x) const {
        if (x.n() != n_) throw std::invalid_argument("phase point dimension mismatch");
        switch (family_) {
            case Family::Natural: {
                SecondOrder s = kinetic_flat(x);
                add_potential(s, x.q);
                return s;
            }
            case Family::Geodesic:
                return kinetic_metric(x);
            case Family::MechanicalOnManifold: {
                SecondOrder s = kinetic_metric(x);
                add_potential(s, x.q);
                return s;
            }
            case Family::Custom: {
                Vec y = x.to_vector();
                Jet j = custom_.jet(y);
                SecondOrder s;
                s.value = j.v;
                s.dp = j.g.head(n_);
                s.dq = j.g.tail(n_);
                s.dpp = j.h.topLeftCorner(n_, n_);
                s.dpq = j.h.topRightCorner(n_, n_);
                s.dqq = j.h.bottomRightCorner(n_, n_);
                return s;
            }
        }
        throw std::logic_error("unhandled family");
    }

    void check() const {
        if (n_ < 1) throw std::invalid_argument("dimension must be >= 1");
        switch (family_) {
            case Family::Natural:
                if (!U_.valid()) throw std::invalid_argument("natural family requires a potential");
                break;
            case Family::Geodesic:
                if (!metric_.valid()) throw std::invalid_argument("geodesic family requires a metric");
                break;
            case Family::MechanicalOnManifold:
                if (!metric_.valid() || !U_.valid())
                    throw std::invalid_argument("mechanical family requires metric and potential");
                break;
            case Family::Custom:
                if (!custom_.valid()) throw std::invalid_argument("custom family requires h(p,q)");
                break;
        }
    }

    SecondOrder kinetic_flat(const PhasePoint& x) const {
        SecondOrder s;
        s.value = 0.5 * x.p.squaredNorm();
        s.dp = x.p;
        s.dq = Vec::Zero(n_);
        s.dpp = Mat::Identity(n_, n_);
        s.dpq = Mat::Zero(n_, n_);
        s.dqq = Mat::Zero(n_, n_);
        return s;
    }

    SecondOrder kinetic_metric(const PhasePoint& x) const {
        auto f = metric_.fundamentals(x.q);
        const Mat& A = f.ginv;
        // dA_k = -A dg_k A;  ddA_kl = A dg_k A dg_l A + A dg_l A dg_k A - A ddg_kl A
        std::vector<Mat> dA(n_);
        for (int k = 0; k < n_; ++k) dA[k] = -A * f.dg[k] * A;
        SecondOrder s;
        s.value = 0.5 * x.p.dot(A * x.p);
        s.dp = A * x.p;
        s.dpp = A;
        s.dq = Vec(n_);
        s.dpq = Mat(n_, n_);
        s.dqq = Mat(n_, n_);
        for (int k = 0; k < n_; ++k) {
            s.dq[k] = 0.5 * x.p.dot(dA[k] * x.p);
            s.dpq.col(k) = dA[k] * x.p;
        }
        for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l) {
                Mat ddA = A * f.dg[k] * A * f.dg[l] * A + A * f.dg[l] * A * f.dg[k] * A -
                          A * f.ddg[k][l] * A;
                s.dqq(k, l) = 0.5 * x.p.dot(ddA * x.p);
            }
        return s;
    }

    void add_potential(SecondOrder& s, const Vec& q) const {
        Jet u = U_.jet(q);
        s.value += u.v;
        s.dq += u.g;
        s.dqq += u.h;
    }

    Family family_ = Family::Custom;
    double sign_ = 1.0;
    int n_ = 0;
    ScalarField U_;
    MetricField metric_;
    ScalarField custom_;
};

/// Hamiltonian vector field in (p, q) order: (pdot, qdot) = (-dh/dq, dh/dp).
inline Vec hamiltonian_vector_field(const HamiltonianModel& model, const PhasePoint& x) {
    SecondOrder s = model.second_order(x);
    Vec f(2 * x.n());
    f << -s.dq, s.dp;
    return f;
}

/// Linearization of the field: rows (pdot, qdot), columns (p, q).
inline Mat field_jacobian(const HamiltonianModel& model, const PhasePoint& x) {
    SecondOrder s = model.second_order(x);
    const int n = x.n();
    Mat D(2 * n, 2 * n);
    D.topLeftCorner(n, n) = -s.dpq.transpose();
    D.topRightCorner(n, n) = -s.dqq;
    D.bottomLeftCorner(n, n) = s.dpp;
    D.bottomRightCorner(n, n) = s.dpq;
    return D;
}

}  // namespace hamcurv

#endif
