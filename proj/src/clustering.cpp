#include "attnlab/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace attnlab {

namespace {

double dist_to_centers(const Vector& z, const std::vector<Vector>& centers) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& c : centers) best = std::min(best, (z - c).norm());
    return best;
}

// Union-find on token indices.
struct DisjointSets {
    std::vector<int> parent;
    explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::set<int> s_delta(const TokenCloud& cloud, const std::vector<Vector>& centers, double delta) {
    if (centers.empty()) throw EmptyCentersError("s_delta: centers must be nonempty");
    if (delta <= 0.0) throw Error("s_delta: delta must be > 0");
    std::set<int> inside;
    for (int i = 0; i < cloud.n(); ++i) {
        if (dist_to_centers(cloud.token(i), centers) <= delta) inside.insert(i);
    }
    return inside;
}

Clusters extract_clusters(const TokenCloud& cloud, double merge_radius) {
    if (merge_radius <= 0.0) throw Error("extract_clusters: merge_radius must be > 0");
    const int n = cloud.n();
    DisjointSets sets(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if ((cloud.points.col(i) - cloud.points.col(j)).norm() <= merge_radius) sets.unite(i, j);
        }
    }
    Clusters out;
    out.assignment.assign(n, -1);
    std::vector<int> root_to_cluster(n, -1);
    for (int i = 0; i < n; ++i) {
        const int r = sets.find(i);
        if (root_to_cluster[r] < 0) {
            root_to_cluster[r] = static_cast<int>(out.centers.size());
            out.centers.push_back(Vector::Zero(cloud.dim()));
        }
        out.assignment[i] = root_to_cluster[r];
    }
    std::vector<int> counts(out.centers.size(), 0);
    for (int i = 0; i < n; ++i) {
        out.centers[out.assignment[i]] += cloud.points.col(i);
        ++counts[out.assignment[i]];
    }
    for (size_t c = 0; c < out.centers.size(); ++c) out.centers[c] /= counts[c];
    return out;
}

ClusterTimes detect_times(const Trajectory& traj, const std::vector<Vector>& centers, double delta,
                          std::optional<double> exit_threshold) {
    if (traj.mode != DynamicsMode::rescaled) {
        throw ModeMismatchError("detect_times expects a rescaled trajectory");
    }
    if (centers.empty()) throw EmptyCentersError("detect_times: centers must be nonempty");
    if (delta <= 0.0) throw Error("detect_times: delta must be > 0");
    const double exit = exit_threshold.value_or(delta);

    ClusterTimes out;
    for (size_t k = 0; k < traj.times.size(); ++k) {
        double d = 0.0;
        for (int i = 0; i < traj.snapshots[k].n(); ++i) {
            d = std::max(d, dist_to_centers(traj.snapshots[k].token(i), centers));
        }
        out.max_dist_series.emplace_back(traj.times[k], d);
        if (!out.T_delta && d <= delta) {
            out.T_delta = traj.times[k];
        } else if (out.T_delta && !out.T_star && d >= exit) {
            out.T_star = traj.times[k];
        }
    }
    return out;
}

Phi1PatternFit check_phi1_limit_pattern(const Trajectory& traj, const AttentionTriple& triple, double tol) {
    if (!triple.v_spectrum.has_real_basis()) {
        throw NoDualBasisError("check_phi1_limit_pattern: dual basis of V unavailable");
    }
    if (std::abs(triple.v_spectrum.eigenvalues(0).imag()) > kRealSpectrumTol) {
        throw Error("check_phi1_limit_pattern: lambda_1 is not real");
    }
    const Vector phi1_star = triple.v_spectrum.dual_basis->row(0).transpose();
    const TokenCloud& final_cloud = traj.back();

    Phi1PatternFit fit;
    for (int i = 0; i < final_cloud.n(); ++i) {
        fit.values.push_back(phi1_star.dot(final_cloud.token(i)));
    }

    // 1-D single-linkage grouping at the requested tolerance.
    std::vector<double> sorted = fit.values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, int>> groups;  // (sum, count)
    for (size_t k = 0; k < sorted.size(); ++k) {
        if (k > 0 && sorted[k] - sorted[k - 1] <= tol) {
            groups.back().first += sorted[k];
            groups.back().second += 1;
        } else {
            groups.emplace_back(sorted[k], 1);
        }
    }

    int n_neg = 0, n_zero = 0, n_pos = 0;
    for (const auto& [sum, count] : groups) {
        const double mean = sum / count;
        if (std::abs(mean) <= tol) {
            ++n_zero;
            fit.zero_level = mean;
        } else if (mean < 0.0) {
            ++n_neg;
            fit.neg_level = mean;
        } else {
            ++n_pos;
            fit.pos_level = mean;
        }
    }
    fit.fits = n_neg <= 1 && n_zero <= 1 && n_pos <= 1;
    return fit;
}

GoodClusteringCheck check_good_clustering(const std::vector<Vector>& centers,
                                          const AttentionTriple& triple, double /*delta*/) {
    if (!triple.v_spectrum.has_real_basis()) {
        throw NoDualBasisError("check_good_clustering: dual basis of V unavailable");
    }
    if (centers.empty()) throw EmptyCentersError("check_good_clustering: centers must be nonempty");
    const Vector phi1_star = triple.v_spectrum.dual_basis->row(0).transpose();

    GoodClusteringCheck out;
    out.C_min = std::numeric_limits<double>::infinity();
    out.D = std::numeric_limits<double>::infinity();
    std::vector<double> proj;
    for (const Vector& c : centers) {
        proj.push_back(phi1_star.dot(c));
        out.C_min = std::min(out.C_min, std::abs(proj.back()));
    }
    for (size_t i = 0; i < proj.size(); ++i) {
        for (size_t j = i + 1; j < proj.size(); ++j) {
            out.D = std::min(out.D, std::abs(proj[i] - proj[j]));
        }
    }
    if (proj.size() == 1) out.D = std::numeric_limits<double>::infinity();
    out.passes = out.C_min > 0.0 && out.D > 0.0;
    return out;
}

}  // namespace attnlab
