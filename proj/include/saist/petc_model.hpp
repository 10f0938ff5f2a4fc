#pragma once

// Periodic event-triggered control (PETC) of a linear plant with quadratic
// triggering: system data, discretization to the sampled map x' = M(k) x,
// the inter-sample time map kappa, and brute-force simulation.

#include "saist/core.hpp"
#include "saist/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace saist {

/// Plant/controller/trigger data. A and BK are in 1/time, Qtrig is 2n x 2n.
struct PetcSystem {
    Matrix A;
    Matrix BK;
    Matrix Qtrig;
    double h = 1.0;
    int kbar = 1;

    int n() const { return static_cast<int>(A.rows()); }

    /// Checks dimensions and ranges, and symmetrizes Qtrig. Throws InvalidSystem.
    void validate() {
        const auto dim = A.rows();
        if (dim < 1 || A.cols() != dim) throw InvalidSystem("A must be square and non-empty");
        if (BK.rows() != dim || BK.cols() != dim) throw InvalidSystem("BK must be n x n");
        if (Qtrig.rows() != 2 * dim || Qtrig.cols() != 2 * dim)
            throw InvalidSystem("trigger matrix must be 2n x 2n");
        if (!(h > 0.0) || !std::isfinite(h)) throw InvalidSystem("h must be positive");
        if (kbar < 1) throw InvalidSystem("kbar must be at least 1");
        if (!A.allFinite() || !BK.allFinite() || !Qtrig.allFinite())
            throw InvalidSystem("system data must be finite");
        Qtrig = linalg::symmetrize(Qtrig);
    }
};

/// Sampled-data view: M[k-1] = M(k), N[k-1] = N(k) for k = 1..kbar.
struct DiscretizedSystem {
    std::vector<Matrix> M;
    std::vector<Matrix> N;
    int kbar = 1;
    double h = 1.0;

    int n() const { return M.empty() ? 0 : static_cast<int>(M.front().rows()); }
    const Matrix& transition(int k) const { return M.at(static_cast<std::size_t>(k - 1)); }
    const Matrix& trigger_form(int k) const { return N.at(static_cast<std::size_t>(k - 1)); }

    /// Builds a discretized system directly from its matrices (used by fixtures).
    static DiscretizedSystem from_matrices(std::vector<Matrix> M, const std::vector<Matrix>& N,
                                           double h = 1.0) {
        if (M.empty() || M.size() != N.size())
            throw InvalidSystem("need one trigger form per transition matrix");
        DiscretizedSystem d;
        d.kbar = static_cast<int>(M.size());
        d.h = h;
        d.M = std::move(M);
        for (const auto& Nk : N) d.N.push_back(linalg::symmetrize(Nk));
        return d;
    }
};

struct SampleTrajectory {
    std::vector<Vector> states;
    std::vector<int> ists;
};

/// Triggering matrix of |xi - xi_hat| > sigma |xi| in the [xi; xi_hat] coordinates.
inline Matrix relative_error_trigger(double sigma, int n) {
    if (!(sigma > 0.0 && sigma < 1.0)) throw InvalidSystem("sigma must lie in (0, 1)");
    const Matrix I = Matrix::Identity(n, n);
    Matrix Q(2 * n, 2 * n);
    Q << (1.0 - sigma * sigma) * I, -I, -I, I;
    return Q;
}

/// M(k) = e^{Ahk} + (int_0^{hk} e^{As} ds) BK and N(k) = [M(k); I]^T Q [M(k); I].
///
/// Time is normalized once (A h, BK h) so that a single exponential of the
/// augmented matrix [[A h, BK h], [0, 0]] k yields M(k) as the sum of its
/// top-left and top-right blocks.
inline DiscretizedSystem discretize(PetcSystem sys) {
    sys.validate();
    const int n = sys.n();
    Matrix aug = Matrix::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = sys.A * sys.h;
    aug.topRightCorner(n, n) = sys.BK * sys.h;

    DiscretizedSystem d;
    d.kbar = sys.kbar;
    d.h = sys.h;
    Matrix stacked(2 * n, n);
    for (int k = 1; k <= sys.kbar; ++k) {
        const Matrix E = linalg::expm(aug * static_cast<double>(k));
        Matrix Mk = E.topLeftCorner(n, n) + E.topRightCorner(n, n);
        if (!Mk.allFinite())
            throw NonFiniteMatrix("M(" + std::to_string(k) + ") overflowed; is A unstable with large h*kbar?");
        stacked.topRows(n) = Mk;
        stacked.bottomRows(n) = Matrix::Identity(n, n);
        Matrix Nk = linalg::symmetrize(stacked.transpose() * sys.Qtrig * stacked);
        if (!Nk.allFinite()) throw NonFiniteMatrix("N(" + std::to_string(k) + ") overflowed");
        d.M.push_back(std::move(Mk));
        d.N.push_back(std::move(Nk));
    }
    return d;
}

/// Smallest k < kbar with x^T N(k) x > 0, otherwise kbar. Boundary values do not trigger.
inline int kappa(const DiscretizedSystem& disc, const Vector& x) {
    for (int k = 1; k < disc.kbar; ++k) {
        if (x.dot(disc.trigger_form(k) * x) > 0.0) return k;
    }
    return disc.kbar;
}

/// Iterates x_{i+1} = M(kappa(x_i)) x_i for `steps` samples.
inline SampleTrajectory simulate(const DiscretizedSystem& disc, const Vector& x0, int steps) {
    if (steps < 1) throw InvalidSystem("simulate needs at least one step");
    SampleTrajectory traj;
    traj.states.reserve(static_cast<std::size_t>(steps));
    traj.ists.reserve(static_cast<std::size_t>(steps));
    Vector x = x0;
    for (int i = 0; i < steps; ++i) {
        if (!x.allFinite()) throw NonFiniteState("state diverged at sample " + std::to_string(i));
        const int k = kappa(disc, x);
        traj.states.push_back(x);
        traj.ists.push_back(k);
        x = disc.transition(k) * x;
    }
    return traj;
}

/// IST sequence only, renormalizing the state every sample. kappa is
/// homogeneous, so this is the trace of simulate() without under/overflow.
inline std::vector<int> simulate_ists(const DiscretizedSystem& disc, Vector x, int steps) {
    std::vector<int> ists;
    ists.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        const double nrm = x.norm();
        if (!std::isfinite(nrm)) throw NonFiniteState("state diverged at sample " + std::to_string(i));
        if (nrm > 0.0) x /= nrm;
        const int k = kappa(disc, x);
        ists.push_back(k);
        x = disc.transition(k) * x;
    }
    return ists;
}

/// Prefix averages of the inter-sample times.
inline std::vector<double> running_average(const std::vector<int>& ists) {
    std::vector<double> out;
    out.reserve(ists.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < ists.size(); ++i) {
        sum += ists[i];
        out.push_back(sum / static_cast<double>(i + 1));
    }
    return out;
}

inline std::vector<double> running_average(const SampleTrajectory& traj) {
    return running_average(traj.ists);
}

/// delta-perturbation: A, BK and Qtrig each move by a seeded random direction of
/// unit 2-norm scaled by delta (Qtrig's direction is symmetric).
inline PetcSystem perturb(const PetcSystem& sys, double delta, std::uint64_t seed) {
    if (delta < 0.0) throw InvalidSystem("delta must be non-negative");
    if (delta == 0.0) return sys;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto direction = [&](Eigen::Index rows, Eigen::Index cols, bool symmetric) {
        Matrix D(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) D(i, j) = gauss(rng);
        if (symmetric) D = linalg::symmetrize(D);
        return Matrix(D / linalg::spectral_norm(D));
    };
    PetcSystem out = sys;
    out.A += delta * direction(sys.A.rows(), sys.A.cols(), false);
    out.BK += delta * direction(sys.BK.rows(), sys.BK.cols(), false);
    out.Qtrig += delta * direction(sys.Qtrig.rows(), sys.Qtrig.cols(), true);
    out.Qtrig = linalg::symmetrize(out.Qtrig);
    return out;
}

}  // namespace saist
