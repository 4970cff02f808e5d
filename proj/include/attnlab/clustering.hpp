#pragma once

#include <optional>
#include <set>
#include <vector>

#include "attnlab/dynamics.hpp"

namespace attnlab {

struct Clusters {
    std::vector<Vector> centers;
    std::vector<int> assignment;  // token index -> center index
};

struct ClusterTimes {
    std::optional<double> T_delta;
    std::optional<double> T_star;
    std::vector<std::pair<double, double>> max_dist_series;  // (t, d(t))
};

struct ClusterReport {
    std::vector<Vector> centers;
    std::vector<int> assignment;
    double delta = 0.0;
    std::optional<double> T_delta;
    std::optional<double> T_star;
    std::vector<std::pair<double, double>> max_dist_series;
};

/// Indices i with min_c ||z_i - c|| <= delta.
std::set<int> s_delta(const TokenCloud& cloud, const std::vector<Vector>& centers, double delta);

/// Single-linkage merge: tokens share a cluster iff connected by a chain of
/// pairwise distances <= merge_radius. Centers are cluster means; cluster
/// order follows first-token order, so the result is deterministic.
Clusters extract_clusters(const TokenCloud& cloud, double merge_radius);

/// d(t) = max_i dist(z_i(t), centers) on the recording grid;
/// T_delta = first recorded t with d(t) <= delta,
/// T_star  = first recorded t >= T_delta with d(t) >= exit_threshold.
/// The exit threshold defaults to delta itself.
ClusterTimes detect_times(const Trajectory& traj, const std::vector<Vector>& centers, double delta,
                          std::optional<double> exit_threshold = std::nullopt);

struct Phi1PatternFit {
    std::vector<double> values;       // final phi*_1 projections, token order
    bool fits = false;
    std::optional<double> neg_level;  // -a, present when a negative group exists
    std::optional<double> zero_level;
    std::optional<double> pos_level;  // c
};

/// Groups the final phi*_1 projections with tolerance tol and reports whether
/// they fit the {-a, 0, c} pattern with a, c > 0 (zero group optional).
Phi1PatternFit check_phi1_limit_pattern(const Trajectory& traj, const AttentionTriple& triple, double tol);

struct GoodClusteringCheck {
    double C_min = 0.0;  // min_i |phi*_1(c_i)|
    double D = 0.0;      // min_{i != j} |phi*_1(c_i) - phi*_1(c_j)|
    bool passes = false;
};

GoodClusteringCheck check_good_clustering(const std::vector<Vector>& centers,
                                          const AttentionTriple& triple, double delta);

}  // namespace attnlab
