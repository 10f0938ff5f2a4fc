#pragma once

#include "saist/core.hpp"

#include <cmath>

namespace saist::linalg {

inline Matrix symmetrize(const Matrix& P) { return 0.5 * (P + P.transpose()); }

inline bool all_finite(const Matrix& M) { return M.allFinite(); }

/// 2-induced norm.
inline double spectral_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

inline double smallest_singular_value(const Matrix& M) {
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

/// Orthonormal basis of the column span of V (assumed full column rank).
inline Matrix orthonormalize(const Matrix& V) {
    Eigen::HouseholderQR<Matrix> qr(V);
    return qr.householderQ() * Matrix::Identity(V.rows(), V.cols());
}

/// Matrix exponential by scaling and squaring with a diagonal [6/6] Pade kernel.
/// The argument is scaled until its 1-norm is at most 1/2, where the kernel's
/// truncation error is far below double precision.
inline Matrix expm(const Matrix& A) {
    const Eigen::Index n = A.rows();
    const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
    const Matrix X = A / std::ldexp(1.0, squarings);

    constexpr int q = 6;
    // c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
    double c = 1.0;
    Matrix num = Matrix::Identity(n, n);
    Matrix den = Matrix::Identity(n, n);
    Matrix Xk = Matrix::Identity(n, n);
    for (int k = 1; k <= q; ++k) {
        c *= static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));
        Xk = Xk * X;
        num += c * Xk;
        den += ((k % 2) ? -c : c) * Xk;
    }
    Matrix R = den.partialPivLu().solve(num);
    for (int i = 0; i < squarings; ++i) R = R * R;
    return R;
}

}  // namespace saist::linalg
