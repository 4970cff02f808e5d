#include "attnlab/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>

namespace attnlab {

TokenCloud::TokenCloud(Matrix pts) : points(std::move(pts)) {
    if (points.rows() < 1 || points.cols() < 1) {
        throw Error("TokenCloud requires n >= 1 and d >= 1");
    }
    require_finite(points, "TokenCloud");
}

AttentionTriple AttentionTriple::make(Matrix q, Matrix k, Matrix v) {
    require_square(q, "Q");
    require_square(k, "K");
    require_square(v, "V");
    if (q.rows() != k.rows() || q.rows() != v.rows()) {
        throw DimensionMismatchError("attention matrices must share dimensions");
    }
    require_finite(q, "Q");
    require_finite(k, "K");
    require_finite(v, "V");
    AttentionTriple triple;
    triple.Q = std::move(q);
    triple.K = std::move(k);
    triple.V = std::move(v);
    triple.A = triple.K.transpose() * triple.Q;
    triple.v_spectrum = eig(triple.V);
    return triple;
}

NonFiniteStateError::NonFiniteStateError(double t, Trajectory traj)
    : Error("dynamics blew up at t = " + std::to_string(t)), blow_up_time(t), partial(std::move(traj)) {}

namespace {

void check_dims(const AttentionTriple& triple, const TokenCloud& cloud) {
    if (cloud.dim() != triple.dim()) {
        throw DimensionMismatchError("cloud dimension does not match attention matrices");
    }
}

// Row-wise softmax of the logit matrix with row-max subtraction.
Matrix softmax_rows(const Matrix& logits) {
    const Eigen::Index n = logits.rows();
    Matrix p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

}  // namespace

Matrix attention_weights_raw(const AttentionTriple& triple, const TokenCloud& cloud) {
    check_dims(triple, cloud);
    const Matrix qx = triple.Q * cloud.points;
    const Matrix kx = triple.K * cloud.points;
    return softmax_rows(qx.transpose() * kx);
}

Matrix velocity_raw(const AttentionTriple& triple, const TokenCloud& cloud) {
    const Matrix p = attention_weights_raw(triple, cloud);
    return (triple.V * cloud.points) * p.transpose();
}

Matrix attention_weights_rescaled(const AttentionTriple& triple, const TokenCloud& cloud, double t) {
    check_dims(triple, cloud);
    // The logits grow like e^{2 lambda_1 t} and overflow doubles long before
    // anything meaningful changes in the weights. Work with a normalized y and
    // carry the logit scale in log space; the softmax only ever sees scaled
    // logit *differences*, so an overflowing scale degenerates cleanly to a
    // hardmax over the row maxima. For t large enough that e^{tV} itself
    // overflows, factor out e^{ct} with c the leading real part first.
    double lead = 0.0;
    for (Eigen::Index k = 0; k < triple.v_spectrum.eigenvalues.size(); ++k) {
        lead = std::max(lead, triple.v_spectrum.eigenvalues(k).real());
    }
    Matrix y;
    double log_extra = 0.0;  // log of the factored-out e^{ct} squared
    if (lead * t > 600.0) {
        y = mat_exp(Matrix(triple.V - lead * Matrix::Identity(triple.dim(), triple.dim())), t) *
            cloud.points;
        log_extra = 2.0 * lead * t;
    } else {
        y = triple.exp_tV(t) * cloud.points;
    }
    double s = y.cwiseAbs().maxCoeff();
    if (!(s > 1.0)) s = 1.0;
    const Matrix yh = y / s;
    const Matrix qy = triple.Q * yh;
    const Matrix ky = triple.K * yh;
    const Matrix logits_h = qy.transpose() * ky;  // true logits / (s^2 e^{log_extra})
    const double log_scale = 2.0 * std::log(s) + log_extra;
    const double scale = (log_scale > 709.0) ? std::numeric_limits<double>::infinity()
                                             : std::exp(log_scale);
    const Eigen::Index n = logits_h.rows();
    Matrix p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = logits_h.row(i).maxCoeff();
        if (std::isinf(scale)) {
            for (Eigen::Index j = 0; j < n; ++j) p(i, j) = logits_h(i, j) == m ? 1.0 : 0.0;
        } else {
            p.row(i) = (scale * (logits_h.row(i).array() - m)).exp();
        }
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

Matrix velocity_rescaled(const AttentionTriple& triple, const TokenCloud& cloud, double t) {
    const Matrix p = attention_weights_rescaled(triple, cloud, t);
    const Matrix vz = triple.V * cloud.points;
    // sum_j P_ij V z_j - V z_i, using row sums = 1.
    return vz * p.transpose() - vz;
}

Trajectory integrate(const AttentionTriple& triple, const TokenCloud& cloud0, DynamicsMode mode,
                     const IntegrateOptions& opts) {
    if (opts.step <= 0.0) throw Error("integrate: step must be > 0");
    if (opts.t_end < 0.0) throw Error("integrate: t_end must be >= 0");
    if (opts.record_every < 1) throw Error("integrate: record_every must be >= 1");
    check_dims(triple, cloud0);

    auto field = [&](const Matrix& x, double t) -> Matrix {
        TokenCloud c;
        c.points = x;  // bypass re-validation inside the hot loop
        return mode == DynamicsMode::raw ? velocity_raw(triple, c) : velocity_rescaled(triple, c, t);
    };

    Trajectory traj;
    traj.mode = mode;
    traj.step = opts.step;
    traj.times.push_back(0.0);
    traj.snapshots.push_back(cloud0);

    Matrix x = cloud0.points;
    double t = 0.0;
    long step_index = 0;
    while (t < opts.t_end - 1e-15 * std::max(1.0, opts.t_end)) {
        const double h = std::min(opts.step, opts.t_end - t);
        const Matrix k1 = field(x, t);
        const Matrix k2 = field(x + 0.5 * h * k1, t + 0.5 * h);
        const Matrix k3 = field(x + 0.5 * h * k2, t + 0.5 * h);
        const Matrix k4 = field(x + h * k3, t + h);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        ++step_index;
        if (!x.allFinite()) {
            throw NonFiniteStateError(t, std::move(traj));
        }
        const bool last = t >= opts.t_end - 1e-15 * std::max(1.0, opts.t_end);
        if (step_index % opts.record_every == 0 || last) {
            traj.times.push_back(t);
            TokenCloud c;
            c.points = x;
            traj.snapshots.push_back(std::move(c));
        }
    }
    return traj;
}

Trajectory rescale_trajectory(const Trajectory& raw_traj, const AttentionTriple& triple) {
    if (raw_traj.mode != DynamicsMode::raw) {
        throw ModeMismatchError("rescale_trajectory expects a raw-mode trajectory");
    }
    Trajectory out;
    out.mode = DynamicsMode::rescaled;
    out.step = raw_traj.step;
    out.times = raw_traj.times;
    out.snapshots.reserve(raw_traj.snapshots.size());
    for (size_t k = 0; k < raw_traj.times.size(); ++k) {
        TokenCloud c;
        c.points = triple.exp_tV(-raw_traj.times[k]) * raw_traj.snapshots[k].points;
        out.snapshots.push_back(std::move(c));
    }
    return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open trajectory file for writing: " + path.string());
    out << std::setprecision(17);
    out << "t,token_index";
    const int d = traj.snapshots.empty() ? 0 : traj.snapshots.front().dim();
    for (int c = 0; c < d; ++c) out << ",coord_" << c;
    out << '\n';
    for (size_t k = 0; k < traj.times.size(); ++k) {
        const TokenCloud& cloud = traj.snapshots[k];
        for (int i = 0; i < cloud.n(); ++i) {
            out << traj.times[k] << ',' << i;
            for (int c = 0; c < d; ++c) out << ',' << cloud.points(c, i);
            out << '\n';
        }
    }
}

}  // namespace attnlab
