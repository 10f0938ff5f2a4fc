#pragma once

// Homogeneous quadratic cones: the set of initial states whose next |w|
// inter-sample times are exactly w, expressed as a conjunction of
// x^T P x > 0 / x^T P x <= 0 atoms in the initial state.

#include "saist/core.hpp"
#include "saist/linalg.hpp"
#include "saist/petc_model.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <limits>
#include <optional>

namespace saist {

enum class Sense { StrictPositive, NonPositive };

struct QuadConstraint {
    Matrix P;
    Sense sense = Sense::StrictPositive;

    bool holds(const Vector& x) const {
        const double v = x.dot(P * x);
        return sense == Sense::StrictPositive ? v > 0.0 : v <= 0.0;
    }

    /// Signed value, positive when satisfied, scaled by ||P||_F for unit x.
    double margin(const Vector& x) const {
        const double scale = P.norm();
        if (scale == 0.0) return sense == Sense::StrictPositive ? 0.0 : std::numeric_limits<double>::infinity();
        const double v = x.dot(P * x) / (scale * x.squaredNorm());
        return sense == Sense::StrictPositive ? v : -v;
    }
};

struct ConeSystem {
    Word word;
    int n = 0;
    std::vector<QuadConstraint> constraints;

    bool contains(const Vector& x) const {
        if (x.squaredNorm() == 0.0) return false;
        for (const auto& c : constraints)
            if (!c.holds(x)) return false;
        return true;
    }

    /// Smallest normalized constraint margin at x; +inf for an unconstrained cone.
    double margin(const Vector& x) const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& c : constraints) m = std::min(m, c.margin(x));
        return m;
    }
};

/// Number of atoms contributed by one letter k: k when k < kbar, kbar - 1 otherwise.
inline int atom_count(int k, int kbar) { return k < kbar ? k : kbar - 1; }

/// Atoms of Q_k on the current state, pulled back to the initial state by Phi.
inline void append_step_atoms(const DiscretizedSystem& disc, const Matrix& Phi, int k,
                              std::vector<QuadConstraint>& out) {
    for (int m = 1; m < k; ++m) {
        out.push_back({linalg::symmetrize(Phi.transpose() * disc.trigger_form(m) * Phi), Sense::NonPositive});
    }
    if (k < disc.kbar) {
        out.push_back({linalg::symmetrize(Phi.transpose() * disc.trigger_form(k) * Phi), Sense::StrictPositive});
    }
}

/// The sigma-cone of a word, ordered by step then by trigger index.
inline ConeSystem sigma_cone(const DiscretizedSystem& disc, const Word& word) {
    ConeSystem cone;
    cone.word = word;
    cone.n = disc.n();
    Matrix Phi = Matrix::Identity(cone.n, cone.n);
    for (int k : word) {
        if (k < 1 || k > disc.kbar) throw InvalidSystem("word letter out of range 1..kbar");
        // Constraints are ordered: non-positive atoms m < k first, strict atom last.
        append_step_atoms(disc, Phi, k, cone.constraints);
        Phi = disc.transition(k) * Phi;
    }
    return cone;
}

/// Does span(V) minus the origin lie inside the atom? V must have full column rank.
/// StrictPositive: lambda_min(V^T P V) > tol. NonPositive: lambda_max(V^T P V) <= tol.
/// V is orthonormalized first so tol is relative to the scale of P.
inline bool subspace_contained(const Matrix& V, const QuadConstraint& c, double tol) {
    if (V.cols() == 0 || linalg::smallest_singular_value(V) <= 1e-10)
        throw RankDeficientBasis("basis has (numerically) dependent columns");
    const Matrix W = linalg::orthonormalize(V);
    const Matrix S = linalg::symmetrize(W.transpose() * c.P * W);
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (c.sense == Sense::StrictPositive) return ev.minCoeff() > tol;
    return ev.maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------
// Planar decision. For n = 2 each atom restricted to the unit circle is
// alpha + R cos(phi - phi0) in phi = 2 theta, so its solution set is an arc
// and the cone is an intersection of arcs.

namespace planar {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Disjoint, sorted sub-intervals of [0, 2 pi) in the doubled angle phi.
struct ArcSet {
    std::vector<std::pair<double, double>> arcs;

    static ArcSet full() { return {{{0.0, kTwoPi}}}; }
    bool empty() const { return arcs.empty(); }
};

inline void push_wrapped(ArcSet& s, double lo, double hi) {
    // lo < hi, hi - lo < 2 pi; map lo into [0, 2 pi).
    const double shift = std::floor(lo / kTwoPi) * kTwoPi;
    lo -= shift;
    hi -= shift;
    if (hi <= kTwoPi) {
        s.arcs.emplace_back(lo, hi);
    } else {
        s.arcs.emplace_back(0.0, hi - kTwoPi);
        s.arcs.emplace_back(lo, kTwoPi);
    }
}

inline ArcSet atom_arcs(const QuadConstraint& c) {
    const double scale = c.P.norm();
    const bool strict = c.sense == Sense::StrictPositive;
    if (scale == 0.0) return strict ? ArcSet{} : ArcSet::full();
    const double a = c.P(0, 0) / scale, b = c.P(0, 1) / scale, d = c.P(1, 1) / scale;
    const double alpha = 0.5 * (a + d);
    const double beta = 0.5 * (a - d);
    const double R = std::hypot(beta, b);
    const double phi0 = std::atan2(b, beta);
    ArcSet s;
    if (strict) {
        if (alpha - R > 0.0) return ArcSet::full();
        if (alpha + R <= 0.0) return s;
        const double w = std::acos(std::clamp(-alpha / R, -1.0, 1.0));
        push_wrapped(s, phi0 - w, phi0 + w);
    } else {
        if (alpha + R <= 0.0) return ArcSet::full();
        if (alpha - R > 0.0) return s;
        const double w = kTwoPi / 2 - std::acos(std::clamp(-alpha / R, -1.0, 1.0));
        push_wrapped(s, phi0 + kTwoPi / 2 - w, phi0 + kTwoPi / 2 + w);
    }
    std::sort(s.arcs.begin(), s.arcs.end());
    return s;
}

inline ArcSet intersect(const ArcSet& x, const ArcSet& y) {
    ArcSet out;
    std::size_t i = 0, j = 0;
    while (i < x.arcs.size() && j < y.arcs.size()) {
        const double lo = std::max(x.arcs[i].first, y.arcs[j].first);
        const double hi = std::min(x.arcs[i].second, y.arcs[j].second);
        if (lo < hi) out.arcs.emplace_back(lo, hi);
        if (x.arcs[i].second < y.arcs[j].second) ++i; else ++j;
    }
    return out;
}

inline Vector point(double phi) {
    Vector x(2);
    x << std::cos(0.5 * phi), std::sin(0.5 * phi);
    return x;
}

/// Arc midpoints ordered by decreasing arc width (ties by position).
inline std::vector<Vector> candidate_points(const ArcSet& s) {
    std::vector<std::pair<double, double>> order;  // (-width, mid)
    for (const auto& [lo, hi] : s.arcs) order.emplace_back(lo - hi, 0.5 * (lo + hi));
    std::sort(order.begin(), order.end());
    std::vector<Vector> pts;
    for (const auto& o : order) pts.push_back(point(o.second));
    return pts;
}

/// Exact (up to rounding) planar decision: a point of positive-measure
/// intersection, checked against every atom, or nothing.
inline std::optional<Vector> witness(const ConeSystem& cone) {
    if (cone.n != 2) throw InvalidSystem("planar decision needs n = 2");
    ArcSet s = ArcSet::full();
    for (const auto& c : cone.constraints) {
        s = intersect(s, atom_arcs(c));
        if (s.empty()) return std::nullopt;
    }
    for (const auto& x : candidate_points(s))
        if (cone.contains(x)) return x;
    return std::nullopt;
}

}  // namespace planar

// ---------------------------------------------------------------------------
// Spatial decision (n = 3). Great circles through a fixed pole sweep the
// sphere; the planar decision on one circle changes only where the circle
// becomes tangent to an atom's zero set or passes a point where two zero sets
// cross. One circle between each pair of consecutive critical angles
// therefore meets every open cell of the arrangement.

namespace spherical {

namespace detail {

/// Angles of the unit-circle roots of sum_{k=-2..2} c[k+2] e^{ikt}, from the
/// companion matrix in z = e^{it}. Near-unit roots are kept generously: extra
/// angles only add harmless samples.
inline std::vector<double> trig_roots(const std::array<std::complex<double>, 5>& c) {
    int deg = 4;
    while (deg > 0 && std::abs(c[static_cast<std::size_t>(deg)]) < 1e-14) --deg;
    int low = 0;
    while (low < deg && std::abs(c[static_cast<std::size_t>(low)]) < 1e-14) ++low;
    std::vector<double> out;
    if (low > 0) out.push_back(0.0);  // z = 0 is not on the circle; nothing to add, keep t = 0 as a sample
    const int m = deg - low;
    if (m <= 0) return out;
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(m, m);
    for (int i = 1; i < m; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < m; ++i) C(i, m - 1) = -c[static_cast<std::size_t>(low + i)] / c[static_cast<std::size_t>(deg)];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const auto z = es.eigenvalues()(i);
        if (std::fabs(std::abs(z) - 1.0) < 1e-3) out.push_back(std::arg(z));
    }
    return out;
}

/// Points (up to sign) on the zero set of P, as a parametrized curve sampled
/// at the roots of the second form along it; returns the crossing directions.
inline std::vector<Vector> crossings(const Matrix& Pi, const Matrix& Pj) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Pi);
    Vector d = es.eigenvalues();
    Matrix R = es.eigenvectors();
    const double scale = d.cwiseAbs().maxCoeff();
    std::vector<Vector> out;
    if (scale == 0.0) return out;
    const double eps = 1e-12 * scale;
    int pos = 0, neg = 0;
    for (int i = 0; i < 3; ++i) {
        if (d(i) > eps) ++pos;
        else if (d(i) < -eps) ++neg;
    }
    if (pos == 0 || neg == 0) {
        // Semidefinite: the zero set is the kernel (a point or a great circle).
        std::vector<int> ker;
        for (int i = 0; i < 3; ++i)
            if (std::fabs(d(i)) <= eps) ker.push_back(i);
        if (ker.size() == 1) out.push_back(R.col(ker[0]));
        if (ker.size() == 2) {
            // Great circle: roots of Pj along it.
            const Vector a = R.col(ker[0]), b = R.col(ker[1]);
            const double A = a.dot(Pj * a), B = a.dot(Pj * b), Cc = b.dot(Pj * b);
            const double alpha = 0.5 * (A + Cc), beta = 0.5 * (A - Cc), R2 = std::hypot(beta, B);
            if (R2 > 0.0 && std::fabs(alpha) <= R2) {
                const double phi0 = std::atan2(B, beta), w = std::acos(std::clamp(-alpha / R2, -1.0, 1.0));
                for (double t : {0.5 * (phi0 + w), 0.5 * (phi0 - w)}) out.push_back(std::cos(t) * a + std::sin(t) * b);
            }
        }
        return out;
    }
    // Indefinite: make the lone-sign eigenvalue the third coordinate.
    if (pos == 1) d = -d;  // now two positive (or zero) and one negative
    int lone = 0;
    for (int i = 0; i < 3; ++i)
        if (d(i) < -eps) lone = i;
    std::vector<int> rest;
    for (int i = 0; i < 3; ++i)
        if (i != lone) rest.push_back(i);
    const Vector e1 = R.col(rest[0]), e2 = R.col(rest[1]), e3 = R.col(lone);
    const double d1 = d(rest[0]), d2 = d(rest[1]), d3 = d(lone);
    if (d1 <= eps || d2 <= eps) {
        // Rank two, indefinite: two great circles through the kernel.
        const int zero = d1 <= eps ? 0 : 1;
        const Vector k = zero == 0 ? e1 : e2, o = zero == 0 ? e2 : e1;
        const double dd = zero == 0 ? d2 : d1;
        const double slope = std::sqrt(dd / -d3);
        for (double sgn : {1.0, -1.0}) {
            const Vector b = (o + sgn * slope * e3).normalized();
            const double A = k.dot(Pj * k), B = k.dot(Pj * b), Cc = b.dot(Pj * b);
            const double alpha = 0.5 * (A + Cc), beta = 0.5 * (A - Cc), R2 = std::hypot(beta, B);
            if (R2 > 0.0 && std::fabs(alpha) <= R2) {
                const double phi0 = std::atan2(B, beta), w = std::acos(std::clamp(-alpha / R2, -1.0, 1.0));
                for (double t : {0.5 * (phi0 + w), 0.5 * (phi0 - w)}) out.push_back(std::cos(t) * k + std::sin(t) * b);
            }
        }
        return out;
    }
    // y(t) = cos t f1 + sin t f2 + f3 sweeps the zero set (one nappe; the other is -y).
    const Vector f1 = e1 / std::sqrt(d1), f2 = e2 / std::sqrt(d2), f3 = e3 / std::sqrt(-d3);
    const double g11 = f1.dot(Pj * f1), g22 = f2.dot(Pj * f2), g33 = f3.dot(Pj * f3);
    const double g12 = f1.dot(Pj * f2), g13 = f1.dot(Pj * f3), g23 = f2.dot(Pj * f3);
    // g11 c^2 + g22 s^2 + 2 g12 c s + 2 g13 c + 2 g23 s + g33
    const double a0 = 0.5 * (g11 + g22) + g33;
    const double a1 = 2 * g13, b1 = 2 * g23;
    const double a2 = 0.5 * (g11 - g22), b2 = g12;
    using C = std::complex<double>;
    const std::array<C, 5> coef{C(0.5 * a2, 0.5 * b2), C(0.5 * a1, 0.5 * b1), C(a0, 0.0), C(0.5 * a1, -0.5 * b1),
                                C(0.5 * a2, -0.5 * b2)};
    for (double t : trig_roots(coef)) out.push_back(std::cos(t) * f1 + std::sin(t) * f2 + f3);
    return out;
}

/// Sweep angles where the circle through the pole e3 is tangent to the zero set of P.
inline void tangencies(const Matrix& P, std::vector<double>& psi) {
    // Circle in the plane span(u(ψ), e3), u = (cos ψ, sin ψ, 0); tangency when the
    // restricted 2x2 form is singular: P33 (u^T P u) - (u^T P e3)^2 = 0.
    const double a = 0.5 * (P(0, 0) + P(1, 1)), b = 0.5 * (P(0, 0) - P(1, 1)), c = P(0, 1);
    const double p = P(0, 2), q = P(1, 2), r = P(2, 2);
    const double alpha = r * a - 0.5 * (p * p + q * q);
    const double beta = r * b - 0.5 * (p * p - q * q);
    const double gamma = r * c - p * q;
    const double rho = std::hypot(beta, gamma);
    if (rho == 0.0 || std::fabs(alpha) > rho) return;
    const double phi0 = std::atan2(gamma, beta), w = std::acos(std::clamp(-alpha / rho, -1.0, 1.0));
    psi.push_back(0.5 * (phi0 + w));
    psi.push_back(0.5 * (phi0 - w));
}

inline double fold(double psi) {
    const double half = planar::kTwoPi / 2;
    psi = std::fmod(psi, half);
    return psi < 0.0 ? psi + half : psi;
}

}  // namespace detail

/// Exact (up to rounding) decision for n = 3 on cones with nonempty interior:
/// a point satisfying every atom, or nothing. `pole_seed` fixes the random
/// rotation of the sweep pole.
inline std::optional<Vector> witness(const ConeSystem& cone, std::uint64_t pole_seed = 12345) {
    if (cone.n != 3) throw InvalidSystem("spatial decision needs n = 3");
    // Random frame so the pole avoids every zero set almost surely.
    std::mt19937_64 rng(pole_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix G(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) G(i, j) = gauss(rng);
    const Matrix F = linalg::orthonormalize(G);

    std::vector<Matrix> P;
    for (const auto& c : cone.constraints) {
        const double s = c.P.norm();
        if (s == 0.0) {
            if (c.sense == Sense::StrictPositive) return std::nullopt;
            continue;
        }
        P.push_back(linalg::symmetrize(F.transpose() * c.P * F) / s);
    }
    std::vector<double> psi{0.0};
    for (const auto& Pi : P) detail::tangencies(Pi, psi);
    for (std::size_t i = 0; i < P.size(); ++i)
        for (std::size_t j = i + 1; j < P.size(); ++j)
            for (const auto& x : detail::crossings(P[i], P[j])) psi.push_back(std::atan2(x(1), x(0)));
    for (double& v : psi) v = detail::fold(v);
    std::sort(psi.begin(), psi.end());
    psi.erase(std::unique(psi.begin(), psi.end()), psi.end());

    std::vector<double> samples;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double next = i + 1 < psi.size() ? psi[i + 1] : psi.front() + planar::kTwoPi / 2;
        samples.push_back(0.5 * (psi[i] + next));
    }
    Vector e3 = Vector::Zero(3);
    e3(2) = 1.0;
    for (double s : samples) {
        Vector u(3);
        u << std::cos(s), std::sin(s), 0.0;
        Matrix B(3, 2);
        B.col(0) = F * u;
        B.col(1) = F * e3;
        ConeSystem circle;
        circle.n = 2;
        for (const auto& c : cone.constraints)
            circle.constraints.push_back({linalg::symmetrize(B.transpose() * c.P * B), c.sense});
        planar::ArcSet arcs = planar::ArcSet::full();
        for (const auto& c : circle.constraints) {
            arcs = planar::intersect(arcs, planar::atom_arcs(c));
            if (arcs.empty()) break;
        }
        if (arcs.empty()) continue;
        for (const auto& y : planar::candidate_points(arcs)) {
            const Vector x = B * y;
            if (cone.contains(x)) return x.normalized();
        }
    }
    return std::nullopt;
}

}  // namespace spherical

}  // namespace saist
