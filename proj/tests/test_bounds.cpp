#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "attnlab/bounds.hpp"
#include "attnlab/perturbation.hpp"
#include "attnlab/transport.hpp"

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

AttentionTriple identity_triple(int d) {
    return AttentionTriple::make(Matrix::Identity(d, d), Matrix::Identity(d, d),
                                 Matrix::Identity(d, d));
}

AttentionTriple figure_pair_tilde() {
    Matrix v = Matrix::Identity(2, 2);
    v(1, 1) -= 0.01;
    return AttentionTriple::make(Matrix::Identity(2, 2), Matrix::Identity(2, 2), v);
}

}  // namespace

TEST_CASE("radius_envelope") {
    const Matrix i2 = Matrix::Identity(2, 2);
    CHECK(radius_envelope(3.0, i2, i2, 0.0) == doctest::Approx(3.0));
    CHECK(radius_envelope(1.0, i2, i2, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

    // Scalar-formula oracle on the figure pair.
    const AttentionTriple tilde = figure_pair_tilde();
    const double r0 = 4.2, t = 2.0;
    const double rate = std::max(op_norm(i2), op_norm(tilde.V));
    CHECK(radius_envelope(r0, i2, tilde.V, t) == doctest::Approx(r0 * std::exp(rate * t)).epsilon(1e-12));

    // Monotone in t and in R0.
    double prev = 0.0;
    for (int k = 0; k <= 20; ++k) {
        const double val = radius_envelope(1.0, i2, tilde.V, 0.1 * k);
        CHECK(val >= prev);
        prev = val;
    }
    CHECK_THROWS_AS(radius_envelope(0.0, i2, i2, 1.0), Error);
    CHECK_THROWS_AS(radius_envelope(1.0, i2, i2, -1.0), Error);
}

TEST_CASE("lipschitz_in_x_bound") {
    CHECK(lipschitz_in_x_bound(identity_triple(2), 1.0) == doctest::Approx(2.0));
    // Doubling R quadruples the bound.
    const AttentionTriple t = AttentionTriple::make(
        random_matrix(3, 3, 1), random_matrix(3, 3, 2), random_matrix(3, 3, 3));
    CHECK(lipschitz_in_x_bound(t, 2.0) == doctest::Approx(4.0 * lipschitz_in_x_bound(t, 1.0)));
    // Composition oracle.
    CHECK(lipschitz_in_x_bound(t, 1.7) ==
          doctest::Approx(2.0 * op_norm(t.Q.transpose() * t.K) * op_norm(t.V) * 1.7 * 1.7));
}

TEST_CASE("kernel_sup_bound dominates sampled attention kernels") {
    CHECK(kernel_sup_bound(identity_triple(3), 1.0) == doctest::Approx(1.0));
    const AttentionTriple zero_v = AttentionTriple::make(
        random_matrix(2, 2, 4), random_matrix(2, 2, 5), Matrix::Zero(2, 2));
    CHECK(kernel_sup_bound(zero_v, 3.0) == 0.0);

    // Monte-Carlo domination: the kernel applied to clouds inside B(0, R).
    const AttentionTriple t = AttentionTriple::make(
        random_matrix(2, 2, 6), random_matrix(2, 2, 7), random_matrix(2, 2, 8));
    const double r = 2.0;
    const double bound = kernel_sup_bound(t, r);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        Matrix pts(2, 4);
        for (int j = 0; j < 4; ++j) {
            Vector p(2);
            do {
                p << unif(rng), unif(rng);
            } while (p.norm() > 1.0);
            pts.col(j) = r * p;
        }
        const Matrix vel = velocity_raw(t, TokenCloud{pts});
        for (int j = 0; j < 4; ++j) CHECK(vel.col(j).norm() <= bound + 1e-12);
    }
}

TEST_CASE("c2_bound") {
    const AttentionTriple zero_a = AttentionTriple::make(
        Matrix::Zero(2, 2), random_matrix(2, 2, 11), random_matrix(2, 2, 12));
    CHECK(c2_bound(zero_a, 2.0) == 0.0);
    CHECK(c2_bound(identity_triple(2), 0.0) == 0.0);

    const AttentionTriple t = AttentionTriple::make(
        random_matrix(2, 2, 13), random_matrix(2, 2, 14), random_matrix(2, 2, 15));
    const double r = 1.3;
    const double a = op_norm(t.A), v = op_norm(t.V);
    CHECK(c2_bound(t, r) ==
          doctest::Approx(2.0 * r * r * v * a * (1.0 + std::exp(2.0 * r * r * a))).epsilon(1e-12));

    // Saturates to +inf instead of overflowing.
    CHECK(std::isinf(c2_bound(identity_triple(2), 50.0)));

    // Monotone in R.
    double prev = 0.0;
    for (int k = 0; k <= 30; ++k) {
        const double val = c2_bound(t, 0.2 * k);
        CHECK(val >= prev);
        prev = val;
    }
}

TEST_CASE("perturbation_constant") {
    const AttentionTriple base = identity_triple(2);
    CHECK(perturbation_constant(base, base, 1.0, 1.0) == 0.0);

    // V-only perturbation: first term only.
    const AttentionTriple tilde = figure_pair_tilde();
    const double r0 = 2.0, t = 1.5;
    const double rt = radius_envelope(r0, base.V, tilde.V, t);
    const double dv = op_norm(base.V - tilde.V);
    CHECK(perturbation_constant(base, tilde, r0, t) == doctest::Approx(2.0 * dv * dv * rt * rt));

    // Seeded pair vs scalar oracle with an A difference as well.
    const AttentionTriple p = AttentionTriple::make(
        random_matrix(2, 2, 21), random_matrix(2, 2, 22), random_matrix(2, 2, 23));
    const double rt2 = radius_envelope(r0, base.V, p.V, t);
    const double dv2 = op_norm(base.V - p.V);
    const double da2 = op_norm(base.A - p.A);
    CHECK(perturbation_constant(base, p, r0, t) ==
          doctest::Approx(2.0 * dv2 * dv2 * rt2 * rt2 + 4.0 * rt2 * rt2 * rt2 * op_norm(base.V) * da2)
              .epsilon(1e-12));
}

TEST_CASE("stability_w2_bound structure") {
    const AttentionTriple base = identity_triple(2);
    CHECK(stability_w2_bound(C1Kind::v_perturbation, base, base, 1.0, 2.0) == 0.0);

    // t = 0: sqrt(2) * C_1(R0).
    const AttentionTriple tilde = figure_pair_tilde();
    const double r0 = 0.4;
    const double c1 = op_norm(base.V - tilde.V) * r0;
    CHECK(stability_w2_bound(C1Kind::v_perturbation, base, tilde, r0, 0.0) ==
          doctest::Approx(std::sqrt(2.0) * c1).epsilon(1e-12));

    // Monotone non-decreasing in t until saturation.
    double prev = 0.0;
    bool saturated = false;
    for (int k = 0; k <= 20; ++k) {
        const double val = stability_w2_bound(C1Kind::v_perturbation, base, tilde, 0.3, 0.1 * k);
        if (std::isinf(val)) {
            saturated = true;
            break;
        }
        CHECK(val >= prev - 1e-15);
        prev = val;
    }
    // Large token scale saturates quickly.
    CHECK(std::isinf(stability_w2_bound(C1Kind::v_perturbation, base, tilde, 5.0, 1.0)));
    (void)saturated;
}

TEST_CASE("stability_w2_bound dominates measured W2 on the figure pair") {
    const AttentionTriple base = identity_triple(2);
    const AttentionTriple tilde = figure_pair_tilde();
    const TokenCloud cloud0 = generate_init(InitSpec{UniformHypercubeInit{0.3}, 7, 20, 2});
    double r0 = 0.0;
    for (int i = 0; i < cloud0.n(); ++i) r0 = std::max(r0, cloud0.token(i).norm());
    IntegrateOptions opts;
    opts.step = 0.05;
    opts.t_end = 0.5;
    const Trajectory a = integrate(base, cloud0, DynamicsMode::raw, opts);
    const Trajectory b = integrate(tilde, cloud0, DynamicsMode::raw, opts);
    for (size_t k = 0; k < a.size(); ++k) {
        const double measured = wasserstein(a.snapshots[k], b.snapshots[k], 2.0);
        const double bound =
            stability_w2_bound(C1Kind::v_perturbation, base, tilde, r0, a.times[k]);
        CHECK(std::isfinite(bound));
        CHECK(bound >= measured - 1e-9);
    }
}

TEST_CASE("meanfield_T_delta_bound") {
    // V = I, A = e_1 e_1^T: restriction of V to the complement is the identity.
    Matrix q = Matrix::Zero(2, 2);
    q(0, 0) = 1.0;
    const AttentionTriple triple = AttentionTriple::make(q, q, Matrix::Identity(2, 2));

    // All tokens at the barycenter: clamped to 0.
    Matrix same(2, 3);
    same.colwise() = Vector::Unit(2, 1);
    CHECK(meanfield_T_delta_bound(TokenCloud{same}, triple, 0.1) == 0.0);

    // Max deviation 1, delta = 1/e: bound exactly 1.
    Matrix pair(2, 2);
    pair << 0.0, 0.0,
            1.0, -1.0;
    CHECK(meanfield_T_delta_bound(TokenCloud{pair}, triple, std::exp(-1.0)) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // Negative restricted spectrum throws.
    const AttentionTriple bad = AttentionTriple::make(q, q, Matrix(-Matrix::Identity(2, 2)));
    CHECK_THROWS_AS(meanfield_T_delta_bound(TokenCloud{pair}, bad, 0.1), NonPositiveEigenvalueError);
}

TEST_CASE("meanfield_lambda1 uses the token subspace restriction") {
    Matrix q = Matrix::Zero(4, 4);
    q(0, 0) = q(1, 1) = 1.0;
    Matrix v = Matrix::Zero(4, 4);
    v.diagonal() << 9.0, 8.0, 2.0, 1.5;
    const AttentionTriple triple = AttentionTriple::make(q, q, v);
    // Restriction to span(e_3, e_4) has leading eigenvalue 2, not 9.
    CHECK(meanfield_lambda1(triple) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("meanfield_T_delta_prob_bound algebra") {
    const double C = 5.0, lambda = 1.0;
    const int d = 3;
    const double eps = 0.1;
    // delta equal to the numerator makes the bound 0.
    const double numer = std::sqrt(2.0 * C * d * std::log(1.0 / eps) * 4.0);
    CHECK(meanfield_T_delta_prob_bound(C, d, 4, numer, eps, lambda) == doctest::Approx(0.0));
    // Scaling n by 4 adds log(2)/lambda.
    const double b1 = meanfield_T_delta_prob_bound(C, d, 4, 0.1, eps, lambda);
    const double b4 = meanfield_T_delta_prob_bound(C, d, 16, 0.1, eps, lambda);
    CHECK(b4 - b1 == doctest::Approx(std::log(2.0) / lambda).epsilon(1e-12));

    CHECK_THROWS_AS(meanfield_T_delta_prob_bound(C, d, 4, 0.1, 0.7, lambda), Error);
    CHECK_THROWS_AS(meanfield_T_delta_prob_bound(C, d, 4, 0.1, eps, -1.0), NonPositiveEigenvalueError);
}

TEST_CASE("meanfield probabilistic bound Monte-Carlo frequency") {
    // 200 seeded initializations; the bound may fail in at most 2*eps*200 plus
    // slack of them.
    Matrix q = Matrix::Zero(3, 3);
    q(0, 0) = 1.0;
    const AttentionTriple triple = AttentionTriple::make(q, q, Matrix::Identity(3, 3));
    const double C = 2.0, delta = 0.05, eps = 0.05;
    const double bound = meanfield_T_delta_prob_bound(C, 2, 8, delta, eps, 1.0);
    int exceed = 0;
    for (uint64_t seed = 0; seed < 200; ++seed) {
        const TokenCloud cloud0 = generate_init(InitSpec{InOrthComplementInit{triple.A, C}, seed, 8, 3});
        // Closed form: T_delta = log(max deviation / delta) with lambda = 1.
        const Vector m0 = cloud0.points.rowwise().mean();
        double dev = 0.0;
        for (int i = 0; i < 8; ++i) dev = std::max(dev, (cloud0.token(i) - m0).norm());
        const double t_delta = dev <= delta ? 0.0 : std::log(dev / delta);
        if (t_delta > bound) ++exceed;
    }
    CHECK(exceed <= 2.0 * eps * 200.0 + 5.0);
}

TEST_CASE("t_star_upper_bound") {
    // Small eps_gap makes the first branch dominate.
    const TStarBound small = t_star_upper_bound(0.1, 1e-3, 1.0, 1.0, 5.0, 100.0, 20.0, 2.0);
    CHECK(small.value == doctest::Approx(small.branch_drift));
    CHECK(small.branch_drift == doctest::Approx(std::log(5.0 / (0.01 * 1.0)) / 1e-3).epsilon(1e-12));
    CHECK(small.asymptotic == "O(log(delta)/eps)");

    // Scaling delta by 1/e with the first branch active adds 2/eps_gap.
    const TStarBound scaled =
        t_star_upper_bound(0.1 / std::exp(1.0), 1e-3, 1.0, 1.0, 5.0, 100.0, 20.0, 2.0);
    CHECK(scaled.branch_drift - small.branch_drift == doctest::Approx(2.0 / 1e-3).epsilon(1e-9));

    // Non-positive inner log arguments are reported, never guessed.
    CHECK_THROWS_AS(t_star_upper_bound(0.1, 1e-3, 1.0, 1.0, 5.0, 1e-9, 20.0, 2.0), InvalidLogError);
    CHECK_THROWS_AS(t_star_upper_bound(0.1, -1.0, 1.0, 1.0, 5.0, 100.0, 20.0, 2.0), Error);
}

TEST_CASE("BoundReport::against semantics") {
    const BoundReport ok = BoundReport::against("b", {{"t", 1.0}}, 2.0, 1.5);
    REQUIRE(ok.dominates);
    CHECK(ok.dominates->holds);
    CHECK_FALSE(ok.dominates->vacuous);
    CHECK(ok.dominates->margin == doctest::Approx(0.5));

    const BoundReport fail = BoundReport::against("b", {}, 1.0, 1.5);
    CHECK_FALSE(fail.dominates->holds);

    const BoundReport vac =
        BoundReport::against("b", {}, std::numeric_limits<double>::infinity(), 10.0);
    CHECK(vac.dominates->holds);
    CHECK(vac.dominates->vacuous);
}
