#pragma once

// Is the periodic behavior σ^ω realized by the concrete system? Checked by
// finding an invariant subspace of the cycle matrix whose propagated images
// stay inside every triggering atom along the cycle.

#include "saist/cone_oracle.hpp"

#include <Eigen/Eigenvalues>

#include <complex>

namespace saist {

using Complex = std::complex<double>;

/// M(k_m) ... M(k_1). Throws SingularCycleMatrix when numerically singular.
inline Matrix cycle_matrix(const DiscretizedSystem& disc, const Word& word) {
    if (word.empty()) throw InvalidSystem("cycle word must be nonempty");
    Matrix M = Matrix::Identity(disc.n(), disc.n());
    for (int k : word) {
        if (k < 1 || k > disc.kbar) throw InvalidSystem("word letter out of range 1..kbar");
        M = disc.transition(k) * M;
    }
    if (!M.allFinite()) throw NonFiniteMatrix("cycle matrix overflowed");
    const double big = linalg::spectral_norm(M);
    if (big == 0.0 || linalg::smallest_singular_value(M) < 1e-12 * big)
        throw SingularCycleMatrix("cycle matrix of " + to_string(word) + " is singular");
    return M;
}

struct EigenStructure {
    std::vector<Complex> eigenvalues;                ///< descending |λ|, then Re, then Im
    std::vector<Eigen::VectorXcd> eigenvectors;
    double condition = 1.0;                          ///< of the eigenvector matrix
    bool is_mixed = true;
    bool is_irrational_rotations = true;
};

struct InvariantSubspace {
    enum class Kind { RealLine, ConjugatePlane };
    Matrix basis;  ///< orthonormal n x d
    Kind kind = Kind::RealLine;
    Complex eigenvalue;
};

inline const char* to_string(InvariantSubspace::Kind k) {
    return k == InvariantSubspace::Kind::RealLine ? "line" : "plane";
}

/// Is arg/pi within gap of p/q for some q <= max_den?
inline bool rational_rotation(double angle, int max_den = 64, double gap = 1e-9) {
    const double t = angle / (planar::kTwoPi / 2);
    for (int q = 1; q <= max_den; ++q) {
        const double p = std::round(t * q);
        if (std::fabs(t - p / q) <= gap) return true;
    }
    return false;
}

inline constexpr double kDefectiveCondition = 1e10;

inline EigenStructure eigen_structure(const Matrix& M) {
    if (!M.allFinite()) throw NonFiniteMatrix("eigen_structure on a non-finite matrix");
    Eigen::EigenSolver<Matrix> es(M, true);
    if (es.info() != Eigen::Success) throw DefectiveMatrix("eigen decomposition did not converge");
    const auto n = M.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    const auto& ev = es.eigenvalues();
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double ma = std::abs(ev(a)), mb = std::abs(ev(b));
        if (ma != mb) return ma > mb;
        if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
        return ev(a).imag() > ev(b).imag();
    });
    EigenStructure s;
    Eigen::MatrixXcd V(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto j = order[static_cast<std::size_t>(i)];
        s.eigenvalues.push_back(ev(j));
        s.eigenvectors.push_back(es.eigenvectors().col(j));
        V.col(i) = es.eigenvectors().col(j);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
    const auto& sv = svd.singularValues();
    s.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();

    constexpr double gap = 1e-9;
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        const Complex a = s.eigenvalues[i];
        if (a.imag() > 0.0 && rational_rotation(std::arg(a))) s.is_irrational_rotations = false;
        for (std::size_t j = i + 1; j < s.eigenvalues.size(); ++j) {
            const Complex b = s.eigenvalues[j];
            const double scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
            const bool conjugate = std::abs(a - std::conj(b)) <= gap * scale && a.imag() != 0.0;
            if (!conjugate && std::fabs(std::abs(a) - std::abs(b)) <= gap * scale) s.is_mixed = false;
        }
    }
    return s;
}

/// Real eigenlines and conjugate-pair planes in descending |λ| order.
/// Throws DefectiveMatrix when the eigenvector matrix is ill-conditioned.
inline std::vector<InvariantSubspace> basic_invariant_subspaces(const Matrix& M) {
    const EigenStructure s = eigen_structure(M);
    if (!(s.condition <= kDefectiveCondition))
        throw DefectiveMatrix("eigenvector condition number " + std::to_string(s.condition));
    std::vector<InvariantSubspace> out;
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        const Complex lam = s.eigenvalues[i];
        const Eigen::VectorXcd& v = s.eigenvectors[i];
        InvariantSubspace sub;
        sub.eigenvalue = lam;
        if (lam.imag() == 0.0) {
            sub.kind = InvariantSubspace::Kind::RealLine;
            sub.basis = v.real().normalized();
        } else if (lam.imag() > 0.0) {
            sub.kind = InvariantSubspace::Kind::ConjugatePlane;
            Matrix B(v.size(), 2);
            B.col(0) = v.real();
            B.col(1) = v.imag();
            sub.basis = linalg::orthonormalize(B);
        } else {
            continue;  // the conjugate partner already contributed the plane
        }
        out.push_back(std::move(sub));
    }
    return out;
}

/// ||(I - V V^T) M V|| for an orthonormal V.
inline double invariance_residual(const Matrix& M, const Matrix& V) {
    const Matrix MV = M * V;
    return linalg::spectral_norm(MV - V * (V.transpose() * MV));
}

struct VerifyOptions {
    double tol = 1e-10;         ///< definiteness margin on normalized atoms
    int max_power = 12;         ///< 1 disables the rational-rotation fallback
    int constructive_periods = 20;
    std::uint64_t seed = 7;
};

struct CycleVerdict {
    bool verified = false;
    Word word;
    int power = 1;              ///< witness is an invariant of M_σ^power
    Matrix witness;             ///< orthonormal basis of the witness subspace
    Complex eigenvalue;
    InvariantSubspace::Kind kind = InvariantSubspace::Kind::RealLine;
    bool constructive_ok = false;
    bool mixed = true;
    bool irrational_rotations = true;
    std::vector<std::string> warnings;
};

/// Does span(V) \ {0}, pushed along the cycle, stay inside every atom?
inline bool subspace_follows(const DiscretizedSystem& disc, const Word& word, Matrix V, double tol) {
    for (int k : word) {
        auto check = [&](int m, Sense sense) {
            const Matrix& N = disc.trigger_form(m);
            const double s = N.norm();
            if (s == 0.0) return sense == Sense::NonPositive;
            return subspace_contained(V, {N / s, sense}, tol);
        };
        for (int m = 1; m < k; ++m)
            if (!check(m, Sense::NonPositive)) return false;
        if (k < disc.kbar && !check(k, Sense::StrictPositive)) return false;
        V = linalg::orthonormalize(disc.transition(k) * V);
    }
    return true;
}

/// A unit vector of span(V), seeded.
inline Vector subspace_point(const Matrix& V, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector c(V.cols());
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = gauss(rng);
    if (c.norm() == 0.0) c(0) = 1.0;
    return (V * c).normalized();
}

/// Replays `periods` repetitions of word from x0 (in the invariant subspace
/// V of the cycle matrix) and compares the observed inter-sample times.
/// Rounding drift off span(V) is projected away once per period; within a
/// period the state evolves by plain simulation.
inline bool replay_matches(const DiscretizedSystem& disc, const Word& word, const Matrix& V, Vector x, int periods) {
    const Matrix W = linalg::orthonormalize(V);
    for (int p = 0; p < periods; ++p) {
        x = W * (W.transpose() * x);
        if (x.norm() == 0.0) return false;
        x.normalize();
        for (int k : word) {
            if (kappa(disc, x) != k) return false;
            x = disc.transition(k) * x;
            x /= x.norm();
        }
    }
    return true;
}

/// Searches the basic invariant subspaces of M_σ (then of M_σ^q for q up to
/// max_power) for one whose images satisfy every atom of the cycle; a hit is
/// accepted only if the constructive replay reproduces σ^periods.
inline CycleVerdict verify_cycle(const DiscretizedSystem& disc, const Word& word, const VerifyOptions& opt = {}) {
    CycleVerdict out;
    out.word = word;
    const Matrix M = cycle_matrix(disc, word);
    Matrix Mq = M;
    for (int q = 1; q <= std::max(1, opt.max_power); ++q) {
        if (q > 1) Mq = M * Mq;
        std::vector<InvariantSubspace> subs;
        try {
            if (q == 1) {
                const EigenStructure es = eigen_structure(M);
                out.mixed = es.is_mixed;
                out.irrational_rotations = es.is_irrational_rotations;
                if (!es.is_mixed) out.warnings.push_back("cycle matrix is not mixed");
                if (!es.is_irrational_rotations) out.warnings.push_back("cycle matrix has a rational rotation");
            }
            subs = basic_invariant_subspaces(Mq);
        } catch (const DefectiveMatrix& e) {
            out.warnings.push_back(e.what());
            continue;
        }
        const Word chain = power(word, q);
        for (const auto& sub : subs) {
            if (!subspace_follows(disc, chain, sub.basis, opt.tol)) continue;
            const Vector x0 = subspace_point(sub.basis, opt.seed);
            if (!replay_matches(disc, chain, sub.basis, x0, opt.constructive_periods)) {
                out.warnings.push_back("definiteness check passed but replay deviated (power " + std::to_string(q) + ")");
                continue;
            }
            out.verified = true;
            out.constructive_ok = true;
            out.power = q;
            out.witness = sub.basis;
            out.eigenvalue = sub.eigenvalue;
            out.kind = sub.kind;
            return out;
        }
        // Higher powers only add subspaces when some rotation is rational.
        if (out.irrational_rotations) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalized distances.

/// 1 - cos of the smallest angle between span(V) and span(W).
inline double subspace_distance(const Matrix& V, const Matrix& W) {
    const Matrix A = linalg::orthonormalize(V), B = linalg::orthonormalize(W);
    Eigen::JacobiSVD<Matrix> svd(A.transpose() * B);
    return std::clamp(1.0 - svd.singularValues()(0), 0.0, 1.0);
}

namespace verify_detail {

/// Smallest |θ| in [0, π/2] with (cos θ x + sin θ u)ᵀ P (...) = 0, or nothing.
inline std::optional<double> zero_angle(const Matrix& P, const Vector& x, const Vector& u) {
    const double a = x.dot(P * x), b = x.dot(P * u), c = u.dot(P * u);
    // f(θ) = α + R cos(2θ - φ0)
    const double alpha = 0.5 * (a + c), beta = 0.5 * (a - c);
    const double R = std::hypot(beta, b);
    if (R == 0.0 || std::fabs(alpha) > R) return std::nullopt;
    const double phi0 = std::atan2(b, beta);
    const double w = std::acos(std::clamp(-alpha / R, -1.0, 1.0));
    double best = planar::kTwoPi;
    for (double two_theta : {phi0 + w, phi0 - w}) {
        // θ is defined mod π; fold into [-π/2, π/2].
        double t = std::remainder(0.5 * two_theta, planar::kTwoPi / 2);
        best = std::min(best, std::fabs(t));
    }
    return best;
}

}  // namespace verify_detail

/// Estimate of d_n(span V, ∂Q_σ), taken as the angular distance from sampled
/// unit vectors of span V to the nearest zero set of any atom; the boundary
/// lies in the union of those zero sets, so this never exceeds the true value
/// for the points sampled. Directions orthogonal to each point are sampled
/// (exhaustive for n = 2). Returns 1 when no atom has a zero set.
inline double normalized_distance(const Matrix& V, const ConeSystem& cone, const SamplingBudget& budget = {}) {
    if (V.cols() == 0 || linalg::smallest_singular_value(V) <= 1e-10)
        throw RankDeficientBasis("basis has (numerically) dependent columns");
    const Matrix B = linalg::orthonormalize(V);
    const int n = cone.n;
    std::mt19937_64 rng(budget.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Vector> xs;
    if (B.cols() == 1) {
        xs.push_back(B.col(0));
    } else {
        const int count = B.cols() == 2 ? 180 : 512;
        for (int i = 0; i < count; ++i) {
            Vector c(B.cols());
            if (B.cols() == 2) {
                const double t = (i + 0.5) / count * (planar::kTwoPi / 2);
                c << std::cos(t), std::sin(t);
            } else {
                for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = gauss(rng);
            }
            xs.push_back((B * c).normalized());
        }
    }
    const int dirs = n == 2 ? 1 : std::max(16, budget.evaluations / static_cast<int>(xs.size() * std::max<std::size_t>(1, cone.constraints.size())));
    double best = 1.0;
    for (const auto& x : xs) {
        for (int d = 0; d < dirs; ++d) {
            Vector u(n);
            if (n == 2) {
                u << -x(1), x(0);
            } else {
                for (int j = 0; j < n; ++j) u(j) = gauss(rng);
                u -= u.dot(x) * x;
                if (u.norm() < 1e-12) continue;
                u.normalize();
            }
            for (const auto& c : cone.constraints) {
                const double s = c.P.norm();
                if (s == 0.0) continue;
                if (auto th = verify_detail::zero_angle(c.P / s, x, u)) best = std::min(best, 1.0 - std::cos(*th));
            }
        }
    }
    return std::clamp(best, 0.0, 1.0);
}

struct RegularityReport {
    bool regular = false;
    std::vector<double> distances;  ///< one per basic invariant subspace
    std::vector<std::string> reasons;
};

/// Regular when the cycle matrix is nonsingular, mixed, of irrational
/// rotations, and every basic invariant subspace keeps distance >= epsilon
/// from the cone boundary. Marginal results are diagnostics, not errors.
inline RegularityReport regularity_check(const DiscretizedSystem& disc, const Word& word, double epsilon,
                                         const SamplingBudget& budget = {}) {
    RegularityReport r;
    Matrix M;
    try {
        M = cycle_matrix(disc, word);
    } catch (const SingularCycleMatrix& e) {
        r.reasons.push_back(e.what());
        return r;
    }
    const EigenStructure es = eigen_structure(M);
    if (!es.is_mixed) r.reasons.push_back("not mixed");
    if (!es.is_irrational_rotations) r.reasons.push_back("rational rotation");
    std::vector<InvariantSubspace> subs;
    try {
        subs = basic_invariant_subspaces(M);
    } catch (const DefectiveMatrix& e) {
        r.reasons.push_back(e.what());
        return r;
    }
    const ConeSystem cone = sigma_cone(disc, word);
    for (const auto& s : subs) {
        const double d = normalized_distance(s.basis, cone, budget);
        r.distances.push_back(d);
        if (d < epsilon) r.reasons.push_back("subspace within " + std::to_string(d) + " of the cone boundary");
    }
    r.regular = r.reasons.empty();
    return r;
}

/// Is the epsilon-inflation (every atom P -> P + εI) of the cone empty?
inline bool epsilon_inflation_empty(const ConeSystem& cone, double epsilon, const SamplingBudget& budget = {},
                                    Policy policy = Policy::Conservative, const SmtSolver* solver = nullptr) {
    if (!(epsilon > 0.0)) throw InvalidSystem("epsilon must be positive");
    ConeSystem inflated = cone;
    for (auto& c : inflated.constraints) c.P += epsilon * Matrix::Identity(cone.n, cone.n);
    return decide_cone(inflated, budget, policy, solver).status == Feasibility::Infeasible;
}

}  // namespace saist
