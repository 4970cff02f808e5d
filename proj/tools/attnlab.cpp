#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "attnlab/experiments.hpp"
#include "attnlab/matrix_io.hpp"
#include "attnlab/transport.hpp"

namespace {

using attnlab::json;
using attnlab::Matrix;

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw attnlab::IoError("cannot open config file: " + path);
    json j;
    in >> j;
    return j;
}

attnlab::DynamicsMode parse_mode(const std::string& s) {
    if (s == "raw") return attnlab::DynamicsMode::raw;
    if (s == "rescaled") return attnlab::DynamicsMode::rescaled;
    throw attnlab::ConfigError("mode must be 'raw' or 'rescaled', got '" + s + "'");
}

int run(int argc, char** argv) {
    CLI::App app{"attnlab: self-attention token dynamics laboratory"};
    app.require_subcommand(1);

    // simulate --------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Integrate the token dynamics and write a trajectory CSV");
    std::string sim_q, sim_k, sim_v, sim_init, sim_mode = "rescaled", sim_out;
    uint64_t sim_seed = 7;
    int sim_n = 20, sim_d = 2;
    double sim_step = 0.1, sim_horizon = 20.0, sim_half_width = 5.0;
    sim->add_option("--q", sim_q, "Q matrix CSV (default identity)");
    sim->add_option("--k", sim_k, "K matrix CSV (default identity)");
    sim->add_option("--v", sim_v, "V matrix CSV (default identity)");
    sim->add_option("--init", sim_init, "initial token cloud CSV, d x n (default seeded hypercube)");
    sim->add_option("--mode", sim_mode, "raw|rescaled (default rescaled)");
    sim->add_option("--seed", sim_seed, "RNG seed for the default initialization");
    sim->add_option("--n", sim_n, "token count for the default initialization");
    sim->add_option("--d", sim_d, "dimension (when no matrices are given)");
    sim->add_option("--half-width", sim_half_width, "hypercube half-width for the default init");
    sim->add_option("--step", sim_step, "RK4 step");
    sim->add_option("--horizon", sim_horizon, "integration end time");
    sim->add_option("--out", sim_out, "output CSV path (default stdout)");

    // phase-diagram ----------------------------------------------------------
    auto* pd = app.add_subcommand("phase-diagram", "Sweep epsilon and report T_delta / T*");
    std::string pd_config, pd_out = "out_phase_diagram";
    uint64_t pd_seed = 0;
    double pd_delta = 0.0;
    int pd_threads = 0;
    pd->add_option("--config", pd_config, "JSON config");
    pd->add_option("--seed", pd_seed, "seed override");
    pd->add_option("--delta", pd_delta, "delta override");
    pd->add_option("--threads", pd_threads, "worker threads");
    pd->add_option("--out", pd_out, "output directory");

    // clusters ---------------------------------------------------------------
    auto* cl = app.add_subcommand("clusters", "Extract delta-approximate clusters from a cloud CSV");
    std::string cl_input;
    double cl_radius = 1e-2;
    cl->add_option("--input", cl_input, "token cloud CSV, d x n")->required();
    cl->add_option("--merge-radius", cl_radius, "single-linkage merge radius");

    // wasserstein ------------------------------------------------------------
    auto* ws = app.add_subcommand("wasserstein", "Exact W_p between two equal-size clouds");
    std::string ws_a, ws_b;
    double ws_p = 2.0;
    ws->add_option("--a", ws_a, "first cloud CSV")->required();
    ws->add_option("--b", ws_b, "second cloud CSV")->required();
    ws->add_option("--p", ws_p, "order p >= 1");

    // spectrum ---------------------------------------------------------------
    auto* sp = app.add_subcommand("spectrum", "Eigen/singular analysis of a matrix CSV");
    std::string sp_input;
    double sp_rel_tol = 1e-8;
    sp->add_option("--input", sp_input, "matrix CSV")->required();
    sp->add_option("--rel-tol", sp_rel_tol, "relative tolerance for the numerical rank");

    // bounds -----------------------------------------------------------------
    auto* bd = app.add_subcommand("bounds", "Evaluate the stability bounds against simulation");
    std::string bd_config, bd_out;
    bd->add_option("--config", bd_config, "JSON config (bound_comparison schema)");
    bd->add_option("--out", bd_out, "write report JSON here instead of stdout");

    // scenario ---------------------------------------------------------------
    auto* sc = app.add_subcommand("scenario", "Run a named scenario from a JSON config");
    std::string sc_config, sc_out = "out";
    uint64_t sc_seed = 0;
    sc->add_option("--config", sc_config, "JSON config with a 'name' field")->required();
    sc->add_option("--seed", sc_seed, "seed override");
    sc->add_option("--out", sc_out, "output directory");

    // verify -----------------------------------------------------------------
    auto* vf = app.add_subcommand("verify", "Run the cross-module invariant suites");
    std::string vf_suite;
    bool vf_fault = false;
    vf->add_option("--suite", vf_suite, "restrict to one suite (linalg|dynamics|transport|clustering|bounds)");
    vf->add_flag("--inject-fault", vf_fault, "deliberately fail one check (reporting-path test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    std::cout << std::setprecision(17);

    if (*sim) {
        int d = sim_d;
        auto load_or_identity = [&](const std::string& path) {
            return path.empty() ? Matrix(Matrix::Identity(d, d)) : attnlab::read_matrix_file(path);
        };
        if (!sim_v.empty()) d = static_cast<int>(attnlab::read_matrix_file(sim_v).rows());
        const attnlab::AttentionTriple triple = attnlab::AttentionTriple::make(
            load_or_identity(sim_q), load_or_identity(sim_k), load_or_identity(sim_v));
        attnlab::TokenCloud cloud0;
        if (sim_init.empty()) {
            cloud0 = attnlab::generate_init(
                {attnlab::UniformHypercubeInit{sim_half_width}, sim_seed, sim_n, d});
        } else {
            cloud0 = attnlab::TokenCloud{attnlab::read_matrix_file(sim_init)};
        }
        attnlab::IntegrateOptions opts;
        opts.step = sim_step;
        opts.t_end = sim_horizon;
        const attnlab::Trajectory traj =
            attnlab::integrate(triple, cloud0, parse_mode(sim_mode), opts);
        if (sim_out.empty()) {
            attnlab::write_trajectory_csv("/dev/stdout", traj);
        } else {
            attnlab::write_trajectory_csv(sim_out, traj);
            std::cout << "wrote " << sim_out << " (" << traj.size() << " snapshots)\n";
        }
        return 0;
    }

    if (*pd) {
        json cfg_json = pd_config.empty() ? json::object() : load_config(pd_config);
        cfg_json["name"] = "phase_diagram";
        if (pd->count("--seed")) cfg_json["seed"] = pd_seed;
        if (pd->count("--delta")) cfg_json["delta"] = pd_delta;
        if (pd->count("--threads")) cfg_json["threads"] = pd_threads;
        attnlab::run_scenario_from_config(cfg_json, pd_out);
        std::cout << "wrote " << pd_out << "/report.json\n";
        return 0;
    }

    if (*cl) {
        const attnlab::TokenCloud cloud{attnlab::read_matrix_file(cl_input)};
        const attnlab::Clusters c = attnlab::extract_clusters(cloud, cl_radius);
        json out;
        out["n_clusters"] = c.centers.size();
        out["assignment"] = c.assignment;
        json centers = json::array();
        for (const auto& center : c.centers) {
            json arr = json::array();
            for (Eigen::Index i = 0; i < center.size(); ++i) arr.push_back(center(i));
            centers.push_back(std::move(arr));
        }
        out["centers"] = std::move(centers);
        std::cout << out.dump(2) << '\n';
        return 0;
    }

    if (*ws) {
        const attnlab::TokenCloud a{attnlab::read_matrix_file(ws_a)};
        const attnlab::TokenCloud b{attnlab::read_matrix_file(ws_b)};
        std::cout << attnlab::wasserstein(a, b, ws_p) << '\n';
        return 0;
    }

    if (*sp) {
        const Matrix m = attnlab::read_matrix_file(sp_input);
        const attnlab::Spectrum spec = attnlab::eig(m);
        json out;
        json eigs = json::array();
        for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
            eigs.push_back({{"re", spec.eigenvalues(i).real()}, {"im", spec.eigenvalues(i).imag()}});
        }
        out["eigenvalues"] = std::move(eigs);
        Eigen::JacobiSVD<Matrix> svd(m);
        json svals = json::array();
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
            svals.push_back(svd.singularValues()(i));
        }
        out["singular_values"] = std::move(svals);
        out["numerical_rank"] = attnlab::numerical_rank(m, sp_rel_tol);
        const attnlab::SpectralGap gap = attnlab::spectral_gap(m);
        out["spectral_gap"] = json{{"lambda1_re", gap.lambda1.real()},
                                   {"lambda1_im", gap.lambda1.imag()},
                                   {"gap", gap.gap},
                                   {"lambda1_real", gap.lambda1_real}};
        out["has_real_eigenbasis"] = spec.has_real_basis();
        std::cout << out.dump(2) << '\n';
        return 0;
    }

    if (*bd) {
        json cfg_json = bd_config.empty() ? json::object() : load_config(bd_config);
        const attnlab::BoundComparisonConfig cfg = attnlab::parse_bound_comparison_config(cfg_json);
        const json report = attnlab::bound_comparison_report(cfg, attnlab::run_bound_comparison(cfg));
        if (bd_out.empty()) {
            std::cout << report.dump(2) << '\n';
        } else {
            std::ofstream out(bd_out);
            if (!out) throw attnlab::IoError("cannot write " + bd_out);
            out << report.dump(2) << '\n';
        }
        return 0;
    }

    if (*sc) {
        json cfg_json = load_config(sc_config);
        if (sc->count("--seed")) cfg_json["seed"] = sc_seed;
        attnlab::run_scenario_from_config(cfg_json, sc_out);
        std::cout << "wrote " << sc_out << "/report.json and " << sc_out << "/manifest.json\n";
        return 0;
    }

    if (*vf) {
        const std::vector<attnlab::VerifyResult> results = attnlab::run_verify(vf_suite, vf_fault);
        size_t failed = 0;
        for (const auto& r : results) {
            std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.suite << "." << r.check;
            if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
            std::cout << '\n';
            if (!r.pass) ++failed;
        }
        std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
        return failed == 0 ? 0 : 1;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
