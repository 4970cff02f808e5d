#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "attnlab/linalg.hpp"

namespace attnlab {

/// One snapshot of the particle system: n points in R^d stored as columns.
struct TokenCloud {
    Matrix points;  // d x n

    TokenCloud() = default;
    explicit TokenCloud(Matrix pts);

    int n() const { return static_cast<int>(points.cols()); }
    int dim() const { return static_cast<int>(points.rows()); }
    Vector token(int i) const { return points.col(i); }
};

/// (Q, K, V) with A = K^T Q and the spectral data of V cached.
struct AttentionTriple {
    Matrix Q, K, V;
    Matrix A;          // K^T Q
    Spectrum v_spectrum;

    static AttentionTriple make(Matrix q, Matrix k, Matrix v);
    int dim() const { return static_cast<int>(V.rows()); }

    /// e^{tV} via the cached spectrum when a real eigenbasis exists.
    Matrix exp_tV(double t) const { return mat_exp(V, t, v_spectrum); }
};

enum class DynamicsMode { raw, rescaled };

struct Trajectory {
    DynamicsMode mode = DynamicsMode::rescaled;
    double step = 0.1;
    std::vector<double> times;
    std::vector<TokenCloud> snapshots;

    const TokenCloud& front() const { return snapshots.front(); }
    const TokenCloud& back() const { return snapshots.back(); }
    size_t size() const { return times.size(); }
};

/// Raw mode blew up: carries the blow-up time and the trajectory of the
/// finite snapshots recorded before it.
struct NonFiniteStateError : Error {
    double blow_up_time;
    Trajectory partial;
    NonFiniteStateError(double t, Trajectory traj);
};

/// Row-stochastic attention matrix P_{ij} with logits <Q x_i, K x_j>,
/// stabilized by row-max subtraction.
Matrix attention_weights_raw(const AttentionTriple& triple, const TokenCloud& cloud);

/// dx_i/dt = sum_j P_{ij} V x_j, returned as d x n columns.
Matrix velocity_raw(const AttentionTriple& triple, const TokenCloud& cloud);

/// Attention over rescaled tokens: logits <Q e^{tV} z_i, K e^{tV} z_j>.
Matrix attention_weights_rescaled(const AttentionTriple& triple, const TokenCloud& cloud, double t);

/// dz_i/dt = sum_j P~_{ij}(t) V (z_j - z_i).
Matrix velocity_rescaled(const AttentionTriple& triple, const TokenCloud& cloud, double t);

struct IntegrateOptions {
    double step = 0.1;
    double t_end = 20.0;
    int record_every = 1;
};

/// Classical RK4 over the selected vector field. Snapshots are recorded every
/// record_every steps plus the final state. If t_end is not a multiple of step,
/// one shortened final step is taken. Raw mode throws NonFiniteStateError on
/// blow-up with the last finite snapshot retained in the partial trajectory.
Trajectory integrate(const AttentionTriple& triple, const TokenCloud& cloud0, DynamicsMode mode,
                     const IntegrateOptions& opts);

/// Snapshot-wise application of e^{-tV} to a raw trajectory.
Trajectory rescale_trajectory(const Trajectory& raw_traj, const AttentionTriple& triple);

/// CSV export, columns (t, token_index, coord_0, ..., coord_{d-1}).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace attnlab
