#pragma once

// Vectorization conventions shared by the dynamics/noise modules.
//
// The coherence basis is s_a = |i><j| with the flat row-major pair index
// a = i*n + j. The same index is used for density-matrix components,
// vec(rho)_a = rho_ij, so vec(s_a) is the unit vector e_a.

#include <complex>
#include <Eigen/Dense>

namespace psr {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct PairIndex {
    int n;
    explicit PairIndex(int n_) : n(n_) {}
    int dim() const { return n * n; }
    int flat(int i, int j) const { return i * n + j; }
    int row(int a) const { return a / n; }
    int col(int a) const { return a % n; }
    int swapped(int a) const { return flat(col(a), row(a)); }   // index of s_a^dagger
};

inline VectorXcd vec_rm(const MatrixXcd& A) {
    const int n = static_cast<int>(A.rows());
    VectorXcd v(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v(i * n + j) = A(i, j);
    return v;
}

inline MatrixXcd unvec_rm(const VectorXcd& v, int n) {
    MatrixXcd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = v(i * n + j);
    return A;
}

// Kronecker product compatible with row-major vec: vec(A X B) = (A kron B^T) vec(X)
inline MatrixXcd kron(const MatrixXcd& A, const MatrixXcd& B) {
    MatrixXcd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index k = 0; k < A.cols(); ++k)
            K.block(i * B.rows(), k * B.cols(), B.rows(), B.cols()) = A(i, k) * B;
    return K;
}

// apply the index-swap permutation P (x_a -> x_{a~}) to a vector
inline VectorXcd swap_indices(const VectorXcd& x, const PairIndex& idx) {
    VectorXcd y(x.size());
    for (int a = 0; a < x.size(); ++a) y(idx.swapped(a)) = x(a);
    return y;
}

}  // namespace psr
