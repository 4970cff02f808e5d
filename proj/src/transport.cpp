#include "attnlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace attnlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix power_cost(const TokenCloud& a, const TokenCloud& b, double p) {
    if (a.n() != b.n()) throw SizeMismatchError("wasserstein: clouds must have equal n");
    if (a.dim() != b.dim()) throw SizeMismatchError("wasserstein: clouds must share dimension");
    if (p < 1.0) throw Error("wasserstein: p must be >= 1");
    const int n = a.n();
    Matrix cost(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            cost(i, j) = std::pow((a.points.col(i) - b.points.col(j)).norm(), p);
        }
    }
    return cost;
}

}  // namespace

double assignment_min_cost(const Matrix& cost) {
    require_square(cost, "assignment cost");
    const int n = static_cast<int>(cost.rows());
    // Jonker-Volgenant style shortest augmenting paths, 1-based sentinels.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0);  // match[j] = row assigned to column j
    for (int i = 1; i <= n; ++i) {
        std::vector<double> minv(n + 1, kInf);
        std::vector<int> way(n + 1, 0);
        std::vector<char> used(n + 1, false);
        int j0 = 0;
        match[0] = i;
        do {
            used[j0] = true;
            const int i0 = match[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) total += cost(match[j] - 1, j - 1);
    return total;
}

double wasserstein(const TokenCloud& a, const TokenCloud& b, double p) {
    const Matrix cost = power_cost(a, b, p);
    const double total = assignment_min_cost(cost);
    return std::pow(total / a.n(), 1.0 / p);
}

double wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
    return wasserstein(a.cloud, b.cloud, p);
}

double wasserstein_bruteforce(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
    const int n = a.cloud.n();
    if (n > 9) throw TooLargeError("wasserstein_bruteforce: n must be <= 9");
    const Matrix cost = power_cost(a.cloud, b.cloud, p);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = kInf;
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += cost(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best / n, 1.0 / p);
}

}  // namespace attnlab
