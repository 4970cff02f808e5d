#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "attnlab/errors.hpp"

namespace attnlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigendecomposition of a square matrix. Eigenvalues are sorted by
/// non-increasing modulus, ties broken by descending real part, then
/// descending imaginary part. Eigenvectors and the dual basis are present
/// only when the matrix is diagonalizable over the reals within tolerance;
/// dual_basis rows phi*_k satisfy phi*_k(phi_j) = delta_{kj}.
struct Spectrum {
    Eigen::VectorXcd eigenvalues;
    std::optional<Matrix> eigenvectors;  // columns phi_k
    std::optional<Matrix> dual_basis;    // rows phi*_k

    bool has_real_basis() const { return eigenvectors.has_value() && dual_basis.has_value(); }
};

struct SpectralGap {
    std::complex<double> lambda1;
    double gap = 0.0;                       // Re(lambda1) - |lambda2|, meaningful when lambda1 real
    bool lambda1_real = false;              // false => phase-transition hypotheses fail
    std::optional<bool> c11_positive;       // <A phi_1, phi_1> > 0 when computable
};

void require_finite(const Matrix& m, const char* what = "matrix");
void require_square(const Matrix& m, const char* what = "matrix");

Spectrum eig(const Matrix& m);

/// e^{t m} by scaling-and-squaring with a (13,13) Pade approximant.
Matrix mat_exp(const Matrix& m, double t);

/// e^{t m} through a cached real eigendecomposition when available,
/// falling back to the Pade route otherwise.
Matrix mat_exp(const Matrix& m, double t, const Spectrum& spectrum);

/// Largest singular value.
double op_norm(const Matrix& m);

/// Number of singular values above rel_tol * sigma_max. Zero matrix has rank 0.
int numerical_rank(const Matrix& m, double rel_tol = 1e-8);

SpectralGap spectral_gap(const Matrix& m);

/// Orthonormal basis of the orthogonal complement of span(vectors) in R^d.
/// Empty input yields the full canonical basis.
std::vector<Vector> orth_complement_basis(const std::vector<Vector>& vectors, int d);

/// Condition-number threshold above which the dual basis is not materialized.
inline constexpr double kDualBasisConditionLimit = 1e8;
inline constexpr double kRealSpectrumTol = 1e-8;

}  // namespace attnlab
