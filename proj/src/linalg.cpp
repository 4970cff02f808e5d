#include "attnlab/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace attnlab {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw NonFiniteError(std::string(what) + " contains NaN/Inf entries");
    }
}

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw NonSquareError(std::string(what) + " is not square");
    }
}

Spectrum eig(const Matrix& m) {
    require_square(m, "eig input");
    require_finite(m, "eig input");
    const Eigen::Index d = m.rows();

    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailureError("eigenvalue iteration did not converge");
    }

    std::vector<int> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXcd raw = solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ma = std::abs(raw(a)), mb = std::abs(raw(b));
        if (ma != mb) return ma > mb;
        if (raw(a).real() != raw(b).real()) return raw(a).real() > raw(b).real();
        return raw(a).imag() > raw(b).imag();
    });

    Spectrum spec;
    spec.eigenvalues.resize(d);
    Eigen::MatrixXcd vecs(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
        spec.eigenvalues(k) = raw(order[static_cast<size_t>(k)]);
        vecs.col(k) = solver.eigenvectors().col(order[static_cast<size_t>(k)]);
    }

    const double scale = std::max(1.0, std::abs(spec.eigenvalues(0)));
    const bool real_spectrum = (spec.eigenvalues.imag().cwiseAbs().maxCoeff() <= kRealSpectrumTol * scale);
    if (!real_spectrum) return spec;

    Matrix basis = vecs.real();
    for (Eigen::Index k = 0; k < d; ++k) {
        const double nrm = basis.col(k).norm();
        if (nrm < 1e-300) return spec;  // defective within tolerance
        basis.col(k) /= nrm;
    }

    Eigen::JacobiSVD<Matrix> svd(basis);
    const double smin = svd.singularValues()(d - 1);
    if (smin <= 0.0 || svd.singularValues()(0) / smin >= kDualBasisConditionLimit) {
        return spec;  // dual basis not materialized for ill-conditioned eigenbases
    }

    Matrix dual = basis.inverse();
    // Biorthogonality gate from the Spectrum contract.
    if ((dual * basis - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8) {
        return spec;
    }
    spec.eigenvectors = std::move(basis);
    spec.dual_basis = std::move(dual);
    return spec;
}

namespace {

// (13,13) Pade approximant of exp, Higham's coefficients.
Matrix exp_pade13(const Matrix& a) {
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
    const Eigen::Index d = a.rows();
    const Matrix id = Matrix::Identity(d, d);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

Matrix mat_exp(const Matrix& m, double t) {
    require_square(m, "mat_exp input");
    const Eigen::Index d = m.rows();
    Matrix a = t * m;
    if (!a.allFinite()) throw NonFiniteError("mat_exp: t*m not finite");

    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
    int squarings = 0;
    const double theta13 = 5.371920351148152;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        a /= std::ldexp(1.0, squarings);
    }
    Matrix e = exp_pade13(a);
    for (int s = 0; s < squarings; ++s) e = e * e;
    return e;
}

Matrix mat_exp(const Matrix& m, double t, const Spectrum& spectrum) {
    if (spectrum.has_real_basis()) {
        const Eigen::Index d = m.rows();
        Vector expvals(d);
        for (Eigen::Index k = 0; k < d; ++k) expvals(k) = std::exp(t * spectrum.eigenvalues(k).real());
        return (*spectrum.eigenvectors) * expvals.asDiagonal() * (*spectrum.dual_basis);
    }
    return mat_exp(m, t);
}

double op_norm(const Matrix& m) {
    require_finite(m, "op_norm input");
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

int numerical_rank(const Matrix& m, double rel_tol) {
    if (rel_tol <= 0.0 || rel_tol >= 1.0) {
        throw Error("numerical_rank: rel_tol must lie in (0,1)");
    }
    require_finite(m, "numerical_rank input");
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sigma = svd.singularValues();
    if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
    const double cut = rel_tol * sigma(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cut) ++rank;
    }
    return rank;
}

SpectralGap spectral_gap(const Matrix& m) {
    Spectrum spec = eig(m);
    SpectralGap out;
    out.lambda1 = spec.eigenvalues(0);
    const double scale = std::max(1.0, std::abs(out.lambda1));
    out.lambda1_real = std::abs(out.lambda1.imag()) <= kRealSpectrumTol * scale;
    if (out.lambda1_real && spec.eigenvalues.size() > 1) {
        out.gap = out.lambda1.real() - std::abs(spec.eigenvalues(1));
    } else if (out.lambda1_real) {
        out.gap = out.lambda1.real();
    }
    return out;
}

std::vector<Vector> orth_complement_basis(const std::vector<Vector>& vectors, int d) {
    if (d < 1) throw Error("orth_complement_basis: d must be >= 1");
    if (vectors.empty()) {
        std::vector<Vector> full;
        for (int k = 0; k < d; ++k) full.push_back(Vector::Unit(d, k));
        return full;
    }
    Matrix m(d, static_cast<Eigen::Index>(vectors.size()));
    for (size_t j = 0; j < vectors.size(); ++j) {
        if (vectors[j].size() != d) throw DimensionMismatchError("orth_complement_basis: vector dimension mismatch");
        if (!vectors[j].allFinite()) throw NonFiniteError("orth_complement_basis: non-finite input vector");
        m.col(static_cast<Eigen::Index>(j)) = vectors[j];
    }
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
    const auto& sigma = svd.singularValues();
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > 1e-12 * std::max(1.0, smax)) ++rank;
    }
    std::vector<Vector> basis;
    for (Eigen::Index k = rank; k < d; ++k) basis.push_back(svd.matrixU().col(k));
    return basis;
}

}  // namespace attnlab
