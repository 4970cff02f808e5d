#pragma once

#include "attnlab/dynamics.hpp"

namespace attnlab {

/// Uniform empirical measure carried by a token cloud (weights 1/n implied).
struct EmpiricalMeasure {
    TokenCloud cloud;
};

/// Exact optimal-assignment cost: given an n x n cost matrix, returns the
/// minimum over permutations sigma of sum_i cost(i, sigma(i)). O(n^3)
/// augmenting-path algorithm with potentials.
double assignment_min_cost(const Matrix& cost);

/// W_p between equal-size uniform empirical measures, solved exactly via
/// optimal assignment on the p-th power cost matrix.
double wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

/// Exhaustive minimum over all n! permutations; oracle for the assignment
/// solver. Only for n <= 9.
double wasserstein_bruteforce(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

double wasserstein(const TokenCloud& a, const TokenCloud& b, double p);

}  // namespace attnlab
