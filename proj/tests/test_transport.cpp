#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "attnlab/transport.hpp"

using namespace attnlab;

namespace {

TokenCloud random_cloud(int d, int n, uint64_t seed, double scale = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-scale, scale);
    Matrix m(d, n);
    for (int j = 0; j < n; ++j)
        for (int c = 0; c < d; ++c) m(c, j) = unif(rng);
    return TokenCloud{m};
}

}  // namespace

TEST_CASE("assignment_min_cost solves small explicit instances") {
    Matrix cost(3, 3);
    cost << 4.0, 1.0, 3.0,
            2.0, 0.0, 5.0,
            3.0, 2.0, 2.0;
    // Optimal: (0->1), (1->0), (2->2) = 1 + 2 + 2 = 5.
    CHECK(assignment_min_cost(cost) == doctest::Approx(5.0));

    Matrix diag = Matrix::Constant(2, 2, 10.0);
    diag(0, 0) = 1.0;
    diag(1, 1) = 1.0;
    CHECK(assignment_min_cost(diag) == doctest::Approx(2.0));
}

TEST_CASE("wasserstein trivial cases") {
    const TokenCloud a = random_cloud(3, 5, 1);
    CHECK(wasserstein(a, a, 2.0) == 0.0);
    CHECK(wasserstein(a, a, 1.0) == 0.0);

    // n = 1: distance between the two atoms for every p.
    const TokenCloud x = random_cloud(3, 1, 2), y = random_cloud(3, 1, 3);
    const double dist = (x.points.col(0) - y.points.col(0)).norm();
    for (double p : {1.0, 2.0, 3.0}) {
        CHECK(wasserstein(x, y, p) == doctest::Approx(dist).epsilon(1e-12));
    }

    // Swapped pair is a relabeling: distance 0.
    Matrix pa(1, 2), pb(1, 2);
    pa << 0.0, 1.0;
    pb << 1.0, 0.0;
    CHECK(wasserstein_bruteforce(EmpiricalMeasure{TokenCloud{pa}}, EmpiricalMeasure{TokenCloud{pb}},
                                 2.0) == 0.0);
}

TEST_CASE("explicit n=2 d=1 instance") {
    Matrix pa(1, 2), pb(1, 2);
    pa << 0.0, 1.0;
    pb << 10.0, 0.5;
    // Pairings: {0->10, 1->0.5}: (100+0.25)/2; {0->0.5, 1->10}: (0.25+81)/2.
    const double expected = std::sqrt((0.25 + 81.0) / 2.0);
    CHECK(wasserstein(TokenCloud{pa}, TokenCloud{pb}, 2.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("assignment solver matches brute force on seeded instances") {
    std::mt19937_64 seeds(42);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(seeds() % 7);  // 2..8
        const int d = 1 + static_cast<int>(seeds() % 3);
        const EmpiricalMeasure a{random_cloud(d, n, seeds())};
        const EmpiricalMeasure b{random_cloud(d, n, seeds())};
        for (double p : {1.0, 2.0}) {
            CHECK(std::abs(wasserstein(a, b, p) - wasserstein_bruteforce(a, b, p)) <= 1e-12);
        }
    }
}

TEST_CASE("metric axioms on seeded triples") {
    std::mt19937_64 seeds(43);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(seeds() % 7);
        const TokenCloud a = random_cloud(2, n, seeds());
        const TokenCloud b = random_cloud(2, n, seeds());
        const TokenCloud c = random_cloud(2, n, seeds());
        const double ab = wasserstein(a, b, 2.0);
        // Same optimal pairing either way; only the summation order differs.
        CHECK(std::abs(ab - wasserstein(b, a, 2.0)) <= 1e-12);
        CHECK(ab <= wasserstein(a, c, 2.0) + wasserstein(c, b, 2.0) + 1e-12);
        CHECK(ab >= 0.0);
    }
}

TEST_CASE("monotonicity in p") {
    std::mt19937_64 seeds(44);
    for (int trial = 0; trial < 20; ++trial) {
        const TokenCloud a = random_cloud(3, 6, seeds());
        const TokenCloud b = random_cloud(3, 6, seeds());
        const double w1 = wasserstein(a, b, 1.0);
        const double w2 = wasserstein(a, b, 2.0);
        const double w3 = wasserstein(a, b, 3.0);
        CHECK(w1 <= w2 + 1e-12);
        CHECK(w2 <= w3 + 1e-12);
    }
}

TEST_CASE("pushforward contraction under linear maps") {
    std::mt19937_64 seeds(45);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const TokenCloud a = random_cloud(3, 5, seeds());
        const TokenCloud b = random_cloud(3, 5, seeds());
        Matrix f(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) f(i, j) = unif(seeds);
        const TokenCloud fa{Matrix(f * a.points)}, fb{Matrix(f * b.points)};
        CHECK(wasserstein(fa, fb, 2.0) <=
              op_norm(f) * wasserstein(a, b, 2.0) + 1e-10);
    }
}

TEST_CASE("error conditions") {
    const TokenCloud a = random_cloud(2, 3, 50);
    const TokenCloud b = random_cloud(2, 4, 51);
    CHECK_THROWS_AS(wasserstein(a, b, 2.0), SizeMismatchError);

    const TokenCloud c = random_cloud(3, 3, 52);
    CHECK_THROWS_AS(wasserstein(a, c, 2.0), SizeMismatchError);

    CHECK_THROWS_AS(wasserstein(a, random_cloud(2, 3, 53), 0.5), Error);

    const EmpiricalMeasure big{random_cloud(2, 10, 54)};
    CHECK_THROWS_AS(wasserstein_bruteforce(big, big, 2.0), TooLargeError);
}

TEST_CASE("assignment solver scales to a few hundred points") {
    const TokenCloud a = random_cloud(2, 200, 60);
    const TokenCloud b = random_cloud(2, 200, 61);
    const double w = wasserstein(a, b, 2.0);
    CHECK(w > 0.0);
    CHECK(std::isfinite(w));
}
