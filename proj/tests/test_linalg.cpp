#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <complex>
#include <random>

#include "attnlab/linalg.hpp"

using namespace attnlab;

namespace {

Matrix random_matrix(int rows, int cols, uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-scale, scale);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = unif(rng);
    return m;
}

// Characteristic polynomial coefficients via the Faddeev-LeVerrier recurrence:
// p(x) = x^d + c[1] x^{d-1} + ... + c[d]. Independent of the eig() machinery.
std::vector<double> char_poly(const Matrix& m) {
    const int d = static_cast<int>(m.rows());
    std::vector<double> c(d + 1, 0.0);
    c[0] = 1.0;
    Matrix mk = Matrix::Zero(d, d);
    for (int k = 1; k <= d; ++k) {
        mk = m * mk + c[k - 1] * Matrix::Identity(d, d);
        c[k] = -(m * mk).trace() / k;
    }
    return c;
}

// Durand-Kerner simultaneous root iteration on a monic polynomial.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
    const int d = static_cast<int>(coeffs.size()) - 1;
    auto eval = [&](std::complex<double> x) {
        std::complex<double> acc = 0.0;
        for (double c : coeffs) acc = acc * x + c;
        return acc;
    };
    std::vector<std::complex<double>> roots(d);
    const std::complex<double> seed(0.4, 0.9);  // standard non-real starting spiral
    std::complex<double> p = 1.0;
    for (int k = 0; k < d; ++k) {
        p *= seed;
        roots[k] = p;
    }
    for (int iter = 0; iter < 500; ++iter) {
        double moved = 0.0;
        for (int k = 0; k < d; ++k) {
            std::complex<double> denom = 1.0;
            for (int j = 0; j < d; ++j) {
                if (j != k) denom *= roots[k] - roots[j];
            }
            const std::complex<double> delta = eval(roots[k]) / denom;
            roots[k] -= delta;
            moved = std::max(moved, std::abs(delta));
        }
        if (moved < 1e-13) break;
    }
    return roots;
}

// Greedy multiset match: largest distance between paired elements.
double multiset_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (const auto& x : a) {
        size_t best = 0;
        for (size_t j = 1; j < b.size(); ++j) {
            if (std::abs(b[j] - x) < std::abs(b[best] - x)) best = j;
        }
        worst = std::max(worst, std::abs(b[best] - x));
        b.erase(b.begin() + static_cast<long>(best));
    }
    return worst;
}

std::vector<std::complex<double>> to_vec(const Eigen::VectorXcd& v) {
    std::vector<std::complex<double>> out(static_cast<size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<size_t>(i)] = v(i);
    return out;
}

// 40-term truncated Taylor series for e^{tm}; oracle for the Pade route.
Matrix mat_exp_taylor(const Matrix& m, double t) {
    const int d = static_cast<int>(m.rows());
    Matrix term = Matrix::Identity(d, d);
    Matrix acc = term;
    for (int k = 1; k <= 40; ++k) {
        term = term * m * (t / k);
        acc += term;
    }
    return acc;
}

}  // namespace

TEST_CASE("eig identity and near-identity diagonal") {
    const Spectrum id = eig(Matrix::Identity(2, 2));
    CHECK(id.eigenvalues(0) == std::complex<double>(1.0, 0.0));
    CHECK(id.eigenvalues(1) == std::complex<double>(1.0, 0.0));

    Matrix d2 = Matrix::Identity(2, 2);
    d2(1, 1) = 0.99;
    const Spectrum s = eig(d2);
    CHECK(s.eigenvalues(0).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.eigenvalues(1).real() == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(s.has_real_basis());
}

TEST_CASE("eig matches characteristic-polynomial roots on random 5x5") {
    for (uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
        const Matrix m = random_matrix(5, 5, seed);
        const auto oracle = poly_roots(char_poly(m));
        CHECK(multiset_distance(to_vec(eig(m).eigenvalues), oracle) < 1e-8);
    }
}

TEST_CASE("eig sorting invariant") {
    for (uint64_t seed : {21u, 22u, 23u}) {
        const Matrix m = random_matrix(6, 6, seed);
        const Spectrum s = eig(m);
        for (int k = 1; k < 6; ++k) {
            const auto a = s.eigenvalues(k - 1), b = s.eigenvalues(k);
            const double ma = std::abs(a), mb = std::abs(b);
            if (std::abs(ma - mb) > 1e-12) {
                CHECK(ma > mb);
            } else if (std::abs(a.real() - b.real()) > 1e-12) {
                CHECK(a.real() > b.real());
            } else {
                CHECK(a.imag() >= b.imag() - 1e-12);
            }
        }
    }
}

TEST_CASE("eig similarity invariance") {
    const Matrix m = random_matrix(4, 4, 31);
    // Well-conditioned similarity transform: identity plus a small perturbation.
    const Matrix s = Matrix::Identity(4, 4) + 0.1 * random_matrix(4, 4, 32);
    const Matrix conj = s.inverse() * m * s;
    CHECK(multiset_distance(to_vec(eig(m).eigenvalues), to_vec(eig(conj).eigenvalues)) < 1e-6);
}

TEST_CASE("dual basis biorthogonality") {
    Matrix m(3, 3);
    m << 2.0, 1.0, 0.0,
         0.0, 1.0, 0.5,
         0.0, 0.0, -1.0;
    const Spectrum s = eig(m);
    REQUIRE(s.has_real_basis());
    const Matrix prod = *s.dual_basis * *s.eigenvectors;
    CHECK((prod - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
    // phi_k are genuine eigenvectors of m.
    for (int k = 0; k < 3; ++k) {
        const Vector phi = s.eigenvectors->col(k);
        CHECK((m * phi - s.eigenvalues(k).real() * phi).norm() < 1e-9);
    }
}

TEST_CASE("defective matrix has no dual basis") {
    Matrix jordan(2, 2);
    jordan << 1.0, 1.0,
              0.0, 1.0;
    const Spectrum s = eig(jordan);
    CHECK_FALSE(s.has_real_basis());
}

TEST_CASE("complex spectrum has no real basis") {
    Matrix rot(2, 2);
    rot << 0.0, -1.0,
           1.0, 0.0;
    const Spectrum s = eig(rot);
    CHECK_FALSE(s.has_real_basis());
    CHECK(std::abs(s.eigenvalues(0).imag()) == doctest::Approx(1.0));
}

TEST_CASE("eig rejects non-square input") {
    CHECK_THROWS_AS(eig(random_matrix(2, 3, 1)), NonSquareError);
}

TEST_CASE("mat_exp trivial cases") {
    const Matrix m = random_matrix(3, 3, 41);
    CHECK((mat_exp(m, 0.0) - Matrix::Identity(3, 3)).norm() < 1e-14);

    const Matrix e1 = mat_exp(Matrix::Identity(2, 2), 1.0);
    CHECK((e1 - std::exp(1.0) * Matrix::Identity(2, 2)).norm() < 1e-12);

    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 1.0;
    diag(1, 1) = -1.0;
    const Matrix e2 = mat_exp(diag, 2.0);
    CHECK(e2(0, 0) == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
    CHECK(e2(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(std::abs(e2(0, 1)) < 1e-14);
}

TEST_CASE("mat_exp matches truncated Taylor oracle") {
    for (uint64_t seed : {51u, 52u, 53u}) {
        const Matrix m = random_matrix(3, 3, seed);
        for (double t : {0.3, 1.0, -0.7}) {
            CHECK((mat_exp(m, t) - mat_exp_taylor(m, t)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("mat_exp group law") {
    const Matrix m = random_matrix(4, 4, 61);
    const double nm = op_norm(m);
    for (auto [s, t] : std::vector<std::pair<double, double>>{{0.5, 0.25}, {1.0, -0.4}, {2.0, 3.0}}) {
        const double allowed = 1e-8 * std::exp((std::abs(s) + std::abs(t)) * nm);
        CHECK(op_norm(mat_exp(m, s) * mat_exp(m, t) - mat_exp(m, s + t)) <= allowed);
    }
}

TEST_CASE("mat_exp spectral fast path agrees with Pade") {
    Matrix m(3, 3);
    m << 1.2, 0.3, 0.0,
         0.0, 0.8, 0.1,
         0.0, 0.0, 0.4;
    const Spectrum s = eig(m);
    REQUIRE(s.has_real_basis());
    for (double t : {0.5, 2.0, -1.5}) {
        CHECK((mat_exp(m, t, s) - mat_exp(m, t)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("op_norm basics and random-direction oracle") {
    CHECK(op_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = -5.0;
    CHECK(op_norm(d) == doctest::Approx(5.0));

    const Matrix m = random_matrix(4, 4, 71);
    const double nm = op_norm(m);
    std::mt19937_64 rng(72);
    std::normal_distribution<double> gauss;
    double best = 0.0;
    Vector best_dir = Vector::Unit(4, 0);
    for (int k = 0; k < 10000; ++k) {
        Vector v(4);
        for (int i = 0; i < 4; ++i) v(i) = gauss(rng);
        const double val = (m * v).norm() / v.norm();
        if (val > best) {
            best = val;
            best_dir = v / v.norm();
        }
    }
    CHECK(best <= nm * (1.0 + 1e-12));
    // Polish the best sampled direction by power iteration on m^T m; this
    // stays independent of the SVD used inside op_norm.
    Vector v = best_dir;
    for (int k = 0; k < 100; ++k) {
        v = m.transpose() * (m * v);
        v /= v.norm();
    }
    const double polished = (m * v).norm();
    CHECK(polished <= nm * (1.0 + 1e-12));
    CHECK(polished >= nm * (1.0 - 1e-4));
}

TEST_CASE("op_norm submultiplicativity") {
    for (uint64_t seed : {81u, 82u, 83u}) {
        const Matrix a = random_matrix(3, 4, seed);
        const Matrix b = random_matrix(4, 5, seed + 100);
        CHECK(op_norm(a * b) <= op_norm(a) * op_norm(b) + 1e-10);
    }
}

TEST_CASE("numerical_rank") {
    CHECK(numerical_rank(Matrix::Zero(3, 3)) == 0);

    const Vector v = random_matrix(4, 1, 91).col(0);
    CHECK(numerical_rank(v * v.transpose()) == 1);

    // Sum of k independent rank-one outer products has rank k for k < d.
    for (int k = 1; k <= 3; ++k) {
        Matrix acc = Matrix::Zero(5, 5);
        for (int i = 0; i < k; ++i) {
            const Vector a = random_matrix(5, 1, 200 + static_cast<uint64_t>(10 * k + i)).col(0);
            const Vector b = random_matrix(5, 1, 300 + static_cast<uint64_t>(10 * k + i)).col(0);
            acc += a * b.transpose();
        }
        CHECK(numerical_rank(acc, 1e-8) == k);
    }
}

TEST_CASE("numerical_rank invariant under orthogonal multiplication") {
    const Matrix m = random_matrix(4, 4, 95) * random_matrix(4, 2, 96) * random_matrix(2, 4, 97);
    const Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(4, 4, 98)).householderQ();
    CHECK(numerical_rank(q * m) == numerical_rank(m));
    CHECK(numerical_rank(m * q) == numerical_rank(m));
}

TEST_CASE("spectral_gap") {
    Matrix d2 = Matrix::Identity(2, 2);
    d2(1, 1) = 0.99;
    const SpectralGap g = spectral_gap(d2);
    CHECK(g.lambda1_real);
    CHECK(g.gap == doctest::Approx(0.01).epsilon(1e-9));

    const SpectralGap gi = spectral_gap(Matrix::Identity(2, 2));
    CHECK(gi.gap == doctest::Approx(0.0));

    Matrix rot(2, 2);
    rot << 0.0, -1.0,
           1.0, 0.0;
    CHECK_FALSE(spectral_gap(rot).lambda1_real);
}

TEST_CASE("orth_complement_basis") {
    // {e_1} in R^3 -> plane spanned by {e_2, e_3}.
    const std::vector<Vector> basis = orth_complement_basis({Vector::Unit(3, 0)}, 3);
    REQUIRE(basis.size() == 2);
    for (const Vector& b : basis) {
        CHECK(std::abs(b(0)) < 1e-10);
        CHECK(b.norm() == doctest::Approx(1.0));
    }
    CHECK(std::abs(basis[0].dot(basis[1])) < 1e-10);

    // Empty input -> full basis.
    CHECK(orth_complement_basis({}, 4).size() == 4);

    // Seeded random rank-2 set of 5 vectors in R^3 -> complement dimension 1.
    const Matrix gen = random_matrix(3, 2, 105);
    std::vector<Vector> vecs;
    const Matrix mix = random_matrix(2, 5, 106);
    for (int j = 0; j < 5; ++j) vecs.push_back(gen * mix.col(j));
    const std::vector<Vector> comp = orth_complement_basis(vecs, 3);
    REQUIRE(comp.size() == 1);
    for (const Vector& v : vecs) CHECK(std::abs(comp[0].dot(v)) < 1e-10);
}

TEST_CASE("require_finite rejects NaN") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(require_finite(m), NonFiniteError);
}
