#include "attnlab/experiments.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "attnlab/transport.hpp"

namespace attnlab {

namespace {

Matrix identity(int d) { return Matrix::Identity(d, d); }

/// V_tilde = I - eps e_d e_d^T applied on top of an explicit V.
Matrix shrink_last_axis(const Matrix& v, double eps) {
    Matrix out = v;
    out(out.rows() - 1, out.cols() - 1) -= eps;
    return out;
}

size_t nearest_time_index(const Trajectory& traj, double t) {
    size_t best = 0;
    double best_err = std::abs(traj.times[0] - t);
    for (size_t k = 1; k < traj.times.size(); ++k) {
        const double err = std::abs(traj.times[k] - t);
        if (err < best_err) {
            best = k;
            best_err = err;
        }
    }
    return best;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json centers_to_json(const std::vector<Vector>& centers) {
    json arr = json::array();
    for (const Vector& c : centers) arr.push_back(vector_to_json(c));
    return arr;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix JSON must be a nonempty array of rows");
    const size_t cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != cols) throw ConfigError("matrix JSON has ragged rows");
        for (size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
        }
    }
    require_finite(m, "matrix JSON");
    return m;
}

json bound_report_to_json(const BoundReport& r) {
    json j;
    j["name"] = r.name;
    j["inputs"] = r.inputs;
    j["value"] = std::isinf(r.value) ? json("inf") : json(r.value);
    if (r.dominates) {
        json d;
        d["measured"] = r.dominates->measured;
        d["holds"] = r.dominates->holds;
        d["margin"] = std::isinf(r.dominates->margin) ? json("inf") : json(r.dominates->margin);
        d["vacuous"] = r.dominates->vacuous;
        j["dominates"] = std::move(d);
    }
    return j;
}

json cluster_report_to_json(const std::vector<Vector>& centers, const std::vector<int>& assignment,
                            double delta, const ClusterTimes& times) {
    json j;
    j["delta"] = delta;
    j["centers"] = centers_to_json(centers);
    j["assignment"] = assignment;
    if (times.T_delta) j["T_delta"] = *times.T_delta;
    if (times.T_star) j["T_star"] = *times.T_star;
    json series = json::array();
    for (const auto& [t, d] : times.max_dist_series) series.push_back(json::array({t, d}));
    j["max_dist_series"] = std::move(series);
    return j;
}

// -- defaults ----------------------------------------------------------------

PhaseTransitionConfig PhaseTransitionConfig::defaults() {
    PhaseTransitionConfig cfg;
    cfg.init = InitSpec{UniformHypercubeInit{5.0}, cfg.seed, cfg.n, cfg.d};
    return cfg;
}

PhaseDiagramConfig PhaseDiagramConfig::defaults() {
    PhaseDiagramConfig cfg;
    const int count = 24;
    for (int k = 0; k < count; ++k) {
        const double lo = std::log10(1e-4), hi = std::log10(1e-1);
        cfg.epsilons.push_back(std::pow(10.0, lo + (hi - lo) * k / (count - 1)));
    }
    cfg.init = InitSpec{UniformHypercubeInit{5.0}, cfg.seed, cfg.n, cfg.d};
    return cfg;
}

RankOneConfig RankOneConfig::defaults() { return RankOneConfig{}; }

MeanfieldConfig MeanfieldConfig::defaults() { return MeanfieldConfig{}; }

OrthogonalLoraConfig OrthogonalLoraConfig::defaults() { return OrthogonalLoraConfig{}; }

BoundComparisonConfig BoundComparisonConfig::defaults() { return BoundComparisonConfig{}; }

// -- phase transition --------------------------------------------------------

json run_phase_transition_scenario(const PhaseTransitionConfig& cfg,
                                   const std::filesystem::path* out_dir) {
    const int d = cfg.d;
    const Matrix q = cfg.Q.value_or(identity(d));
    const Matrix k = cfg.K.value_or(identity(d));
    const Matrix v = cfg.V.value_or(identity(d));
    const Matrix v_tilde = cfg.V_tilde.value_or(shrink_last_axis(v, cfg.epsilon));
    const AttentionTriple ref = AttentionTriple::make(q, k, v);
    const AttentionTriple pert = AttentionTriple::make(q, k, v_tilde);

    InitSpec init = cfg.init;
    if (cfg.init_defaulted) {
        init.seed = cfg.seed;
        init.n = cfg.n;
        init.d = cfg.d;
    }
    const TokenCloud cloud0 = generate_init(init);

    IntegrateOptions opts;
    opts.step = cfg.step;
    opts.t_end = std::max(cfg.horizon, cfg.reference_horizon);
    const Trajectory ref_traj = integrate(ref, cloud0, DynamicsMode::rescaled, opts);
    opts.t_end = cfg.horizon;
    const Trajectory pert_traj = integrate(pert, cloud0, DynamicsMode::rescaled, opts);

    const double merge_radius = cfg.merge_radius.value_or(cfg.delta / 10.0);
    const Clusters clusters =
        extract_clusters(ref_traj.snapshots[nearest_time_index(ref_traj, cfg.reference_horizon)],
                         merge_radius);

    const ClusterTimes pert_times = detect_times(pert_traj, clusters.centers, cfg.delta, cfg.exit_threshold);
    const ClusterTimes ref_times = detect_times(ref_traj, clusters.centers, cfg.delta, cfg.exit_threshold);

    // W_2 between the two rescaled clouds on the shared part of the grid.
    const size_t shared = std::min(ref_traj.size(), pert_traj.size());
    json w2_series = json::array();
    std::vector<double> w2_values(shared);
    for (size_t s = 0; s < shared; ++s) {
        w2_values[s] = wasserstein(ref_traj.snapshots[s], pert_traj.snapshots[s], 2.0);
        w2_series.push_back(json::array({ref_traj.times[s], w2_values[s]}));
    }

    json report;
    report["schema_version"] = kSchemaVersion;
    report["name"] = "phase_transition";
    report["seed"] = cfg.seed;
    report["epsilon"] = cfg.epsilon;
    report["delta"] = cfg.delta;
    report["clusters_ref"] = cluster_report_to_json(clusters.centers, clusters.assignment, cfg.delta, ref_times);
    report["clusters_pert"] = cluster_report_to_json(clusters.centers, clusters.assignment, cfg.delta, pert_times);
    report["w2_series"] = std::move(w2_series);

    // Theorem checks on the window [T_delta, 10 T_delta].
    json theorem;
    if (pert_times.T_delta) {
        const double t0 = *pert_times.T_delta;
        const double t1 = 10.0 * t0;
        bool s2delta_all = true;
        bool w2_ok = true;
        const double w2_threshold = cfg.delta / (cloud0.n() + 1);
        for (size_t s = 0; s < shared; ++s) {
            const double t = pert_traj.times[s];
            if (t < t0 || t > t1) continue;
            if (s_delta(pert_traj.snapshots[s], clusters.centers, 2.0 * cfg.delta).size() !=
                static_cast<size_t>(cloud0.n())) {
                s2delta_all = false;
            }
            if (w2_values[s] > w2_threshold) w2_ok = false;
        }
        theorem["window"] = json::array({t0, t1});
        theorem["s_2delta_full"] = s2delta_all;
        theorem["w2_within_delta_over_n_plus_1"] = w2_ok;
        theorem["w2_threshold"] = w2_threshold;
    } else {
        theorem["window"] = nullptr;
    }
    report["theorem_checks"] = std::move(theorem);

    const Phi1PatternFit fit = check_phi1_limit_pattern(pert_traj, pert, cfg.phi1_tol);
    json phi1;
    phi1["values"] = fit.values;
    phi1["fits"] = fit.fits;
    if (fit.neg_level) phi1["neg_level"] = *fit.neg_level;
    if (fit.zero_level) phi1["zero_level"] = *fit.zero_level;
    if (fit.pos_level) phi1["pos_level"] = *fit.pos_level;
    report["phi1_pattern"] = std::move(phi1);

    const GoodClusteringCheck good = check_good_clustering(clusters.centers, pert, cfg.delta);
    report["good_clustering"] = {{"C_min", good.C_min},
                                 {"D", std::isinf(good.D) ? json("inf") : json(good.D)},
                                 {"passes", good.passes}};

    if (out_dir) {
        write_trajectory_csv(*out_dir / "trajectory_ref.csv", ref_traj);
        write_trajectory_csv(*out_dir / "trajectory_pert.csv", pert_traj);
    }
    return report;
}

// -- phase diagram -----------------------------------------------------------

PhaseDiagramGrid run_phase_diagram(const PhaseDiagramConfig& cfg) {
    for (size_t k = 1; k < cfg.epsilons.size(); ++k) {
        if (cfg.epsilons[k] <= cfg.epsilons[k - 1]) {
            throw ConfigError("phase diagram epsilons must be strictly increasing");
        }
    }
    const Matrix id = identity(cfg.d);
    const AttentionTriple ref = AttentionTriple::make(id, id, id);

    InitSpec init = cfg.init;
    if (cfg.init_defaulted) {
        init.seed = cfg.seed;
        init.n = cfg.n;
        init.d = cfg.d;
    }
    const TokenCloud cloud0 = generate_init(init);

    IntegrateOptions ref_opts;
    ref_opts.step = cfg.step;
    ref_opts.t_end = cfg.reference_horizon;
    const Trajectory ref_traj = integrate(ref, cloud0, DynamicsMode::rescaled, ref_opts);
    const Clusters clusters = extract_clusters(ref_traj.back(), cfg.merge_radius.value_or(cfg.delta / 10.0));

    PhaseDiagramGrid grid;
    grid.delta = cfg.delta;
    grid.seed = cfg.seed;
    grid.rows.resize(cfg.epsilons.size());

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t row = next.fetch_add(1);
            if (row >= cfg.epsilons.size()) return;
            const double eps = cfg.epsilons[row];
            PhaseDiagramRow out;
            out.epsilon = eps;
            try {
                const AttentionTriple pert = AttentionTriple::make(id, id, shrink_last_axis(id, eps));
                IntegrateOptions opts;
                opts.step = cfg.step;
                opts.t_end = std::min(cfg.horizon_scale / eps, cfg.horizon_cap);
                const Trajectory traj = integrate(pert, cloud0, DynamicsMode::rescaled, opts);
                const ClusterTimes times = detect_times(traj, clusters.centers, cfg.delta);
                out.T_delta = times.T_delta;
                out.T_star = times.T_star;
            } catch (const std::exception& e) {
                out.error = e.what();
            }
            grid.rows[row] = std::move(out);
        }
    };

    int threads = cfg.threads;
    if (const char* env = std::getenv("ATTNLAB_THREADS")) {
        threads = std::max(1, std::atoi(env));
    }
    threads = std::min<int>(std::max(threads, 1), static_cast<int>(cfg.epsilons.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return grid;
}

json phase_diagram_report(const PhaseDiagramConfig& cfg, const PhaseDiagramGrid& grid) {
    json rows = json::array();
    for (const PhaseDiagramRow& r : grid.rows) {
        json row;
        row["epsilon"] = r.epsilon;
        row["T_delta"] = r.T_delta ? json(*r.T_delta) : json(nullptr);
        row["T_star"] = r.T_star ? json(*r.T_star) : json(nullptr);
        if (r.error) row["error"] = *r.error;
        rows.push_back(std::move(row));
    }
    json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = "phase_diagram";
    j["seed"] = grid.seed;
    j["delta"] = grid.delta;
    j["rows"] = std::move(rows);
    (void)cfg;
    return j;
}

void write_phase_diagram_csv(const std::filesystem::path& path, const PhaseDiagramGrid& grid) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(17) << "epsilon,T_delta,T_star\n";
    for (const PhaseDiagramRow& r : grid.rows) {
        out << r.epsilon << ',';
        if (r.T_delta) out << *r.T_delta;
        out << ',';
        if (r.T_star) out << *r.T_star;
        out << '\n';
    }
}

// -- rank one ----------------------------------------------------------------

json run_rank_one_scenario(const RankOneConfig& cfg, const std::filesystem::path* out_dir) {
    const Vector v = cfg.v.value_or(Vector::Unit(cfg.d, 0));
    const AttentionTriple triple = rank_one_attention(v);
    const TokenCloud cloud0 =
        generate_init(InitSpec{UniformHypercubeInit{cfg.half_width}, cfg.seed, cfg.n, cfg.d});

    IntegrateOptions opts;
    opts.step = cfg.step;
    opts.t_end = cfg.horizon;
    const Trajectory traj = integrate(triple, cloud0, DynamicsMode::rescaled, opts);
    const Clusters clusters = extract_clusters(traj.back(), cfg.merge_radius);

    // Leaders extremize <z_i(0), v>.
    int leader_pos = 0, leader_neg = 0;
    for (int i = 1; i < cloud0.n(); ++i) {
        if (v.dot(cloud0.token(i)) > v.dot(cloud0.token(leader_pos))) leader_pos = i;
        if (v.dot(cloud0.token(i)) < v.dot(cloud0.token(leader_neg))) leader_neg = i;
    }

    bool signs_match = true;
    for (int i = 0; i < cloud0.n(); ++i) {
        const double s = v.dot(cloud0.token(i));
        if (s == 0.0) continue;
        const int expected = s > 0.0 ? clusters.assignment[leader_pos] : clusters.assignment[leader_neg];
        if (clusters.assignment[i] != expected) signs_match = false;
    }

    json report;
    report["schema_version"] = kSchemaVersion;
    report["name"] = "rank_one";
    report["seed"] = cfg.seed;
    report["n_clusters"] = clusters.centers.size();
    report["centers"] = centers_to_json(clusters.centers);
    report["assignment"] = clusters.assignment;
    report["leader_pos"] = leader_pos;
    report["leader_neg"] = leader_neg;
    report["signs_match_clusters"] = signs_match;
    if (out_dir) write_trajectory_csv(*out_dir / "trajectory.csv", traj);
    return report;
}

// -- mean field --------------------------------------------------------------

namespace {

Matrix default_meanfield_projector(int d) {
    Matrix q = Matrix::Zero(d, d);
    for (int i = 0; i < d / 2; ++i) q(i, i) = 1.0;
    return q;
}

Matrix default_meanfield_value(int d) {
    // Isotropic on the token subspace (the last d - d/2 coordinates), so the
    // collapse-time bound is tight-rate rather than optimistic.
    Matrix v = Matrix::Zero(d, d);
    for (int i = 0; i < d / 2; ++i) v(i, i) = 3.0 - 0.25 * i;
    for (int i = d / 2; i < d; ++i) v(i, i) = 2.5;
    return v;
}

}  // namespace

json run_meanfield_scenario(const MeanfieldConfig& cfg, const std::filesystem::path* out_dir) {
    const Matrix q = cfg.Q.value_or(default_meanfield_projector(cfg.d));
    const Matrix k = cfg.K.value_or(q);
    const Matrix v = cfg.V.value_or(default_meanfield_value(cfg.d));
    const AttentionTriple triple = AttentionTriple::make(q, k, v);

    const TokenCloud cloud0 = generate_init(
        InitSpec{InOrthComplementInit{triple.A, cfg.radius}, cfg.seed, cfg.n, cfg.d});

    IntegrateOptions opts;
    opts.step = cfg.step;
    opts.t_end = cfg.horizon;
    const Trajectory traj = integrate(triple, cloud0, DynamicsMode::rescaled, opts);

    const Vector m0 = cloud0.points.rowwise().mean();
    double closed_form_err = 0.0;
    double barycenter_drift = 0.0;
    for (size_t s = 0; s < traj.size(); ++s) {
        const Matrix expm = triple.exp_tV(-traj.times[s]);
        for (int i = 0; i < cloud0.n(); ++i) {
            const Vector closed = expm * (cloud0.token(i) - m0) + m0;
            closed_form_err = std::max(closed_form_err, (traj.snapshots[s].token(i) - closed).norm());
        }
        barycenter_drift = std::max(
            barycenter_drift, (Vector(traj.snapshots[s].points.rowwise().mean()) - m0).norm());
    }

    double uniform_attention_err = 0.0;
    for (double t : {0.0, cfg.horizon / 2.0, cfg.horizon}) {
        const Matrix p = attention_weights_rescaled(triple, traj.snapshots[nearest_time_index(traj, t)], t);
        uniform_attention_err = std::max(
            uniform_attention_err, (p.array() - 1.0 / cloud0.n()).abs().maxCoeff());
    }

    json deltas = json::array();
    const std::vector<Vector> centers = {m0};
    for (double delta : cfg.deltas) {
        const ClusterTimes times = detect_times(traj, centers, delta);
        json row;
        row["delta"] = delta;
        row["T_delta_measured"] = times.T_delta ? json(*times.T_delta) : json(nullptr);
        const double bound = meanfield_T_delta_bound(cloud0, triple, delta);
        row["T_delta_bound"] = bound;
        // Grid detection rounds the crossing up to the next recorded time, so
        // the domination check allows one recording step of slack.
        row["bound_holds"] = !times.T_delta || *times.T_delta <= bound + cfg.step;
        const double lambda = meanfield_lambda1(triple);
        row["T_delta_prob_bound"] =
            meanfield_T_delta_prob_bound(cfg.radius, cfg.d - numerical_rank(triple.A), cfg.n, delta, 0.1, lambda);
        deltas.push_back(std::move(row));
    }

    json report;
    report["schema_version"] = kSchemaVersion;
    report["name"] = "meanfield";
    report["seed"] = cfg.seed;
    report["closed_form_max_error"] = closed_form_err;
    report["barycenter_max_drift"] = barycenter_drift;
    report["uniform_attention_max_error"] = uniform_attention_err;
    report["deltas"] = std::move(deltas);
    report["restriction_note"] = kMeanfieldRestrictionNote;
    if (out_dir) write_trajectory_csv(*out_dir / "trajectory.csv", traj);
    return report;
}

// -- orthogonal LoRA ---------------------------------------------------------

json run_orthogonal_lora_scenario(const OrthogonalLoraConfig& cfg,
                                  const std::filesystem::path* out_dir) {
    const int d = cfg.d;
    Matrix q0 = Matrix::Zero(d, d);
    q0(0, 0) = 1.0;
    const Matrix q = cfg.Q.value_or(q0);
    const Matrix k = cfg.K.value_or(q);
    const Matrix v_mat = cfg.V.value_or(identity(d));
    const AttentionTriple base = AttentionTriple::make(q, k, v_mat);

    const Vector v = orthogonal_lora_direction(base, cfg.seed);

    IntegrateOptions opts;
    opts.step = cfg.step;
    opts.t_end = cfg.horizon;

    // Baseline: tokens in Im(A)^perp collapse to one point.
    const TokenCloud base_cloud =
        generate_init(InitSpec{InOrthComplementInit{base.A, cfg.C}, cfg.seed, cfg.n, cfg.d});
    const Trajectory base_traj = integrate(base, base_cloud, DynamicsMode::rescaled, opts);
    const Clusters base_clusters = extract_clusters(base_traj.back(), cfg.merge_radius);

    // LoRA update Q~ = Q + v v^T, K~ = K + v v^T.
    LoRAFactors fq{LoRATarget::Q, v.transpose(), v.transpose()};
    LoRAFactors fk{LoRATarget::K, v.transpose(), v.transpose()};
    const AttentionTriple lora = apply_lora(base, {fq, fk});

    const TokenCloud line_cloud =
        generate_init(InitSpec{SeparatedAlongInit{v, cfg.C, cfg.spread}, cfg.seed, cfg.n, cfg.d});
    const Trajectory line_traj = integrate(lora, line_cloud, DynamicsMode::rescaled, opts);
    const Clusters line_clusters = extract_clusters(line_traj.back(), cfg.merge_radius);

    auto signed_centers = [&](const Clusters& c) -> std::pair<std::optional<Vector>, std::optional<Vector>> {
        std::optional<Vector> pos, neg;
        for (const Vector& center : c.centers) {
            if (v.dot(center) > 0.0) pos = center;
            else if (v.dot(center) < 0.0) neg = center;
        }
        return {pos, neg};
    };
    const auto [line_pos, line_neg] = signed_centers(line_clusters);

    // Off-line perturbation of the same line initialization.
    const double eps = cfg.eps_factor * cfg.C;
    const TokenCloud off_cloud = generate_init(
        InitSpec{PerturbedLineInit{v, cfg.C, cfg.spread, eps}, cfg.seed, cfg.n, cfg.d});
    const Trajectory off_traj = integrate(lora, off_cloud, DynamicsMode::rescaled, opts);
    const Clusters off_clusters = extract_clusters(off_traj.back(), cfg.merge_radius);
    const auto [off_pos, off_neg] = signed_centers(off_clusters);

    double cluster_shift = 0.0;
    bool paired = line_pos && line_neg && off_pos && off_neg;
    if (paired) {
        cluster_shift = std::max((*line_pos - *off_pos).norm(), (*line_neg - *off_neg).norm());
    }

    json report;
    report["schema_version"] = kSchemaVersion;
    report["name"] = "orthogonal_lora";
    report["seed"] = cfg.seed;
    report["v"] = vector_to_json(v);
    report["baseline_n_clusters"] = base_clusters.centers.size();
    report["lora_n_clusters"] = line_clusters.centers.size();
    report["lora_straddles_v"] = line_pos.has_value() && line_neg.has_value() &&
                                 line_clusters.centers.size() == 2;
    report["epsilon"] = eps;
    report["offline_n_clusters"] = off_clusters.centers.size();
    report["cluster_shift"] = cluster_shift;
    report["K_prime"] = paired && eps > 0.0 ? json(cluster_shift / eps) : json(nullptr);
    report["pairing_ok"] = paired;
    if (out_dir) {
        write_trajectory_csv(*out_dir / "trajectory_baseline.csv", base_traj);
        write_trajectory_csv(*out_dir / "trajectory_lora.csv", line_traj);
        write_trajectory_csv(*out_dir / "trajectory_offline.csv", off_traj);
    }
    return report;
}

// -- bound comparison --------------------------------------------------------

std::vector<BoundReport> run_bound_comparison(const BoundComparisonConfig& cfg) {
    const Matrix q = cfg.Q.value_or(identity(cfg.d));
    const Matrix k = cfg.K.value_or(identity(cfg.d));
    const Matrix v = cfg.V.value_or(identity(cfg.d));
    const Matrix v_tilde = cfg.V_tilde.value_or(shrink_last_axis(v, cfg.epsilon));
    const AttentionTriple ref = AttentionTriple::make(q, k, v);
    const AttentionTriple pert = AttentionTriple::make(q, k, v_tilde);

    const TokenCloud cloud0 =
        generate_init(InitSpec{UniformHypercubeInit{cfg.half_width}, cfg.seed, cfg.n, cfg.d});
    double r0 = 0.0;
    for (int i = 0; i < cloud0.n(); ++i) r0 = std::max(r0, cloud0.token(i).norm());

    IntegrateOptions opts;
    opts.step = cfg.step;
    opts.t_end = cfg.t_max;
    const Trajectory ref_traj = integrate(ref, cloud0, DynamicsMode::raw, opts);
    const Trajectory pert_traj = integrate(pert, cloud0, DynamicsMode::raw, opts);

    std::vector<BoundReport> reports;
    for (int g = 0; g < cfg.grid_points; ++g) {
        const double t = cfg.grid_points == 1 ? 0.0 : cfg.t_max * g / (cfg.grid_points - 1);
        const size_t s = nearest_time_index(ref_traj, t);
        const double measured = wasserstein(ref_traj.snapshots[s], pert_traj.snapshots[s], 2.0);
        const double bound =
            stability_w2_bound(cfg.c1_kind, ref, pert, r0, ref_traj.times[s], cfg.quadrature_step);
        std::ostringstream name;
        name << "stability_w2@t=" << ref_traj.times[s];
        reports.push_back(BoundReport::against(
            name.str(), {{"t", ref_traj.times[s]}, {"R0", r0}, {"epsilon", cfg.epsilon}}, bound, measured));

        BoundReport pc;
        std::ostringstream pcname;
        pcname << "perturbation_constant@t=" << ref_traj.times[s];
        pc.name = pcname.str();
        pc.inputs = {{"t", ref_traj.times[s]}, {"R0", r0}};
        pc.value = perturbation_constant(ref, pert, r0, ref_traj.times[s]);
        reports.push_back(std::move(pc));
    }
    return reports;
}

json bound_comparison_report(const BoundComparisonConfig& cfg, const std::vector<BoundReport>& reports) {
    json arr = json::array();
    for (const BoundReport& r : reports) arr.push_back(bound_report_to_json(r));
    json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = "bound_comparison";
    j["seed"] = cfg.seed;
    j["reports"] = std::move(arr);
    return j;
}

// -- config parsing ----------------------------------------------------------

namespace {

InitSpec parse_init(const json& j, uint64_t seed, int n, int d, const Matrix* triple_A) {
    InitSpec spec;
    spec.seed = seed;
    spec.n = n;
    spec.d = d;
    const std::string kind = j.value("kind", "uniform_hypercube");
    if (kind == "uniform_hypercube") {
        spec.kind = UniformHypercubeInit{j.value("half_width", 5.0)};
    } else if (kind == "constant") {
        ConstantInit c;
        c.points = matrix_from_json(j.at("points"));
        spec.kind = std::move(c);
    } else if (kind == "separated_along") {
        SeparatedAlongInit s;
        const Matrix vm = matrix_from_json(j.at("v"));
        s.v = vm.reshaped();
        s.C = j.value("C", 5.0);
        s.spread = j.value("spread", 1.0);
        spec.kind = std::move(s);
    } else if (kind == "in_orth_complement") {
        InOrthComplementInit s;
        if (j.contains("of")) {
            s.of = matrix_from_json(j.at("of"));
        } else if (triple_A) {
            s.of = *triple_A;
        } else {
            throw ConfigError("in_orth_complement init needs an 'of' matrix");
        }
        s.radius = j.value("radius", 5.0);
        spec.kind = std::move(s);
    } else if (kind == "perturbed_line") {
        PerturbedLineInit s;
        const Matrix vm = matrix_from_json(j.at("v"));
        s.v = vm.reshaped();
        s.C = j.value("C", 5.0);
        s.spread = j.value("spread", 1.0);
        s.epsilon = j.value("epsilon", 0.0);
        spec.kind = std::move(s);
    } else {
        throw ConfigError("unknown init kind: " + kind);
    }
    return spec;
}

std::optional<Matrix> opt_matrix(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return matrix_from_json(j.at(key));
}

}  // namespace

PhaseTransitionConfig parse_phase_transition_config(const json& j) {
    PhaseTransitionConfig cfg = PhaseTransitionConfig::defaults();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n = j.value("n", cfg.n);
    cfg.d = j.value("d", cfg.d);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.Q = opt_matrix(j, "Q");
    cfg.K = opt_matrix(j, "K");
    cfg.V = opt_matrix(j, "V");
    cfg.V_tilde = opt_matrix(j, "V_tilde");
    cfg.delta = j.value("delta", cfg.delta);
    if (j.contains("exit_threshold")) cfg.exit_threshold = j["exit_threshold"].get<double>();
    cfg.step = j.value("step", cfg.step);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.reference_horizon = j.value("reference_horizon", cfg.reference_horizon);
    if (j.contains("merge_radius")) cfg.merge_radius = j["merge_radius"].get<double>();
    cfg.phi1_tol = j.value("phi1_tol", cfg.phi1_tol);
    if (j.contains("init")) {
        cfg.init = parse_init(j["init"], cfg.seed, cfg.n, cfg.d, nullptr);
        cfg.init_defaulted = false;
    } else {
        cfg.init = InitSpec{UniformHypercubeInit{5.0}, cfg.seed, cfg.n, cfg.d};
    }
    return cfg;
}

PhaseDiagramConfig parse_phase_diagram_config(const json& j) {
    PhaseDiagramConfig cfg = PhaseDiagramConfig::defaults();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n = j.value("n", cfg.n);
    cfg.d = j.value("d", cfg.d);
    cfg.delta = j.value("delta", cfg.delta);
    if (j.contains("epsilons")) cfg.epsilons = j["epsilons"].get<std::vector<double>>();
    cfg.step = j.value("step", cfg.step);
    cfg.horizon_scale = j.value("horizon_scale", cfg.horizon_scale);
    cfg.horizon_cap = j.value("horizon_cap", cfg.horizon_cap);
    cfg.reference_horizon = j.value("reference_horizon", cfg.reference_horizon);
    if (j.contains("merge_radius")) cfg.merge_radius = j["merge_radius"].get<double>();
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("init")) {
        cfg.init = parse_init(j["init"], cfg.seed, cfg.n, cfg.d, nullptr);
        cfg.init_defaulted = false;
    } else {
        cfg.init = InitSpec{UniformHypercubeInit{5.0}, cfg.seed, cfg.n, cfg.d};
    }
    return cfg;
}

RankOneConfig parse_rank_one_config(const json& j) {
    RankOneConfig cfg = RankOneConfig::defaults();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n = j.value("n", cfg.n);
    cfg.d = j.value("d", cfg.d);
    if (j.contains("v")) cfg.v = Vector(matrix_from_json(j["v"]).reshaped());
    cfg.half_width = j.value("half_width", cfg.half_width);
    cfg.step = j.value("step", cfg.step);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.merge_radius = j.value("merge_radius", cfg.merge_radius);
    return cfg;
}

MeanfieldConfig parse_meanfield_config(const json& j) {
    MeanfieldConfig cfg = MeanfieldConfig::defaults();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n = j.value("n", cfg.n);
    cfg.d = j.value("d", cfg.d);
    cfg.Q = opt_matrix(j, "Q");
    cfg.K = opt_matrix(j, "K");
    cfg.V = opt_matrix(j, "V");
    cfg.radius = j.value("radius", cfg.radius);
    cfg.step = j.value("step", cfg.step);
    cfg.horizon = j.value("horizon", cfg.horizon);
    if (j.contains("deltas")) cfg.deltas = j["deltas"].get<std::vector<double>>();
    return cfg;
}

OrthogonalLoraConfig parse_orthogonal_lora_config(const json& j) {
    OrthogonalLoraConfig cfg = OrthogonalLoraConfig::defaults();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n = j.value("n", cfg.n);
    cfg.d = j.value("d", cfg.d);
    cfg.Q = opt_matrix(j, "Q");
    cfg.K = opt_matrix(j, "K");
    cfg.V = opt_matrix(j, "V");
    cfg.C = j.value("C", cfg.C);
    cfg.spread = j.value("spread", cfg.spread);
    cfg.eps_factor = j.value("eps_factor", cfg.eps_factor);
    cfg.step = j.value("step", cfg.step);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.merge_radius = j.value("merge_radius", cfg.merge_radius);
    return cfg;
}

BoundComparisonConfig parse_bound_comparison_config(const json& j) {
    BoundComparisonConfig cfg = BoundComparisonConfig::defaults();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n = j.value("n", cfg.n);
    cfg.d = j.value("d", cfg.d);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.Q = opt_matrix(j, "Q");
    cfg.K = opt_matrix(j, "K");
    cfg.V = opt_matrix(j, "V");
    cfg.V_tilde = opt_matrix(j, "V_tilde");
    cfg.half_width = j.value("half_width", cfg.half_width);
    cfg.t_max = j.value("t_max", cfg.t_max);
    cfg.grid_points = j.value("grid_points", cfg.grid_points);
    cfg.step = j.value("step", cfg.step);
    if (j.value("c1_kind", "v_perturbation") == std::string("combined")) cfg.c1_kind = C1Kind::combined;
    cfg.quadrature_step = j.value("quadrature_step", cfg.quadrature_step);
    return cfg;
}

json run_scenario_from_config(const json& config, const std::filesystem::path& out_dir) {
    const std::string name = config.value("name", "");
    std::filesystem::create_directories(out_dir);

    json report;
    if (name == "phase_transition") {
        report = run_phase_transition_scenario(parse_phase_transition_config(config), &out_dir);
    } else if (name == "phase_diagram") {
        const PhaseDiagramConfig cfg = parse_phase_diagram_config(config);
        const PhaseDiagramGrid grid = run_phase_diagram(cfg);
        report = phase_diagram_report(cfg, grid);
        write_phase_diagram_csv(out_dir / "phase_diagram.csv", grid);
    } else if (name == "rank_one") {
        report = run_rank_one_scenario(parse_rank_one_config(config), &out_dir);
    } else if (name == "meanfield") {
        report = run_meanfield_scenario(parse_meanfield_config(config), &out_dir);
    } else if (name == "orthogonal_lora") {
        report = run_orthogonal_lora_scenario(parse_orthogonal_lora_config(config), &out_dir);
    } else if (name == "bound_comparison") {
        const BoundComparisonConfig cfg = parse_bound_comparison_config(config);
        report = bound_comparison_report(cfg, run_bound_comparison(cfg));
    } else {
        throw ConfigError("unknown scenario name: '" + name + "'");
    }

    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["config"] = config;
    manifest["seed"] = config.value("seed", 7);
    write_json_file(out_dir / "manifest.json", manifest);
    write_json_file(out_dir / "report.json", report);
    return report;
}

}  // namespace attnlab
