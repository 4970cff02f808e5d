#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "attnlab/bounds.hpp"
#include "attnlab/clustering.hpp"
#include "attnlab/perturbation.hpp"

namespace attnlab {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// -- scenario configs --------------------------------------------------------

struct PhaseTransitionConfig {
    uint64_t seed = 7;
    int n = 20;
    int d = 2;
    double epsilon = 0.01;     // V_tilde = I - eps e_d e_d^T unless matrices are given
    std::optional<Matrix> Q, K, V, V_tilde;
    InitSpec init;             // defaults to uniform hypercube [-5,5]^d
    double delta = 0.1;
    std::optional<double> exit_threshold;  // default delta
    double step = 0.1;
    double horizon = 200.0;  // long enough for the post-bifurcation clusters to settle
    double reference_horizon = 20.0;       // cluster extraction time
    std::optional<double> merge_radius;    // default delta / 10
    double phi1_tol = 0.05;
    bool init_defaulted = true;

    static PhaseTransitionConfig defaults();
};

struct PhaseDiagramConfig {
    uint64_t seed = 7;
    int n = 20;
    int d = 2;
    double delta = 0.1;
    std::vector<double> epsilons;  // default 24 log-spaced in [1e-4, 1e-1]
    double step = 0.1;
    double horizon_scale = 200.0;  // horizon = min(horizon_scale / eps, horizon_cap)
    double horizon_cap = 500.0;
    double reference_horizon = 20.0;
    std::optional<double> merge_radius;
    InitSpec init;
    int threads = 1;
    bool init_defaulted = true;

    static PhaseDiagramConfig defaults();
};

struct PhaseDiagramRow {
    double epsilon = 0.0;
    std::optional<double> T_delta;
    std::optional<double> T_star;
    std::optional<std::string> error;
};

struct PhaseDiagramGrid {
    double delta = 0.1;
    uint64_t seed = 0;
    std::vector<PhaseDiagramRow> rows;
};

struct RankOneConfig {
    uint64_t seed = 3;  // chosen so no token starts near the v-hyperplane
    int n = 20;
    int d = 2;
    std::optional<Vector> v;  // default e_1
    double half_width = 5.0;
    double step = 0.1;
    double horizon = 40.0;
    double merge_radius = 1e-2;

    static RankOneConfig defaults();
};

struct MeanfieldConfig {
    uint64_t seed = 7;
    int n = 16;
    int d = 4;
    std::optional<Matrix> Q, K, V;  // defaults: A = diag projector on first d/2 coords, V diagonal positive
    double radius = 5.0;            // init ball radius inside Im(A)^perp
    double step = 0.01;
    double horizon = 5.0;
    std::vector<double> deltas = {1e-1, 1e-2, 1e-3};

    static MeanfieldConfig defaults();
};

struct OrthogonalLoraConfig {
    uint64_t seed = 7;
    int n = 16;
    int d = 3;
    std::optional<Matrix> Q, K, V;  // defaults: Q = K = e_1 e_1^T, V = I
    double C = 5.0;
    double spread = 1.0;
    double eps_factor = 0.01;  // off-line displacement = eps_factor * C
    double step = 0.1;
    double horizon = 30.0;
    double merge_radius = 1e-2;

    static OrthogonalLoraConfig defaults();
};

struct BoundComparisonConfig {
    uint64_t seed = 7;
    int n = 20;
    int d = 2;
    double epsilon = 0.01;
    std::optional<Matrix> Q, K, V, V_tilde;
    // Small token scale and window keep the double-exponential bound finite
    // across the whole grid instead of saturating after the first point.
    double half_width = 0.3;
    double t_max = 0.5;
    int grid_points = 10;
    double step = 0.05;
    C1Kind c1_kind = C1Kind::v_perturbation;
    double quadrature_step = 1e-3;

    static BoundComparisonConfig defaults();
};

// -- runners -----------------------------------------------------------------
// Each runner returns the machine-readable report. When out_dir is non-null,
// trajectory CSVs and auxiliary files are written there as well.

json run_phase_transition_scenario(const PhaseTransitionConfig& cfg,
                                   const std::filesystem::path* out_dir = nullptr);
PhaseDiagramGrid run_phase_diagram(const PhaseDiagramConfig& cfg);
json phase_diagram_report(const PhaseDiagramConfig& cfg, const PhaseDiagramGrid& grid);
void write_phase_diagram_csv(const std::filesystem::path& path, const PhaseDiagramGrid& grid);
json run_rank_one_scenario(const RankOneConfig& cfg, const std::filesystem::path* out_dir = nullptr);
json run_meanfield_scenario(const MeanfieldConfig& cfg, const std::filesystem::path* out_dir = nullptr);
json run_orthogonal_lora_scenario(const OrthogonalLoraConfig& cfg,
                                  const std::filesystem::path* out_dir = nullptr);
std::vector<BoundReport> run_bound_comparison(const BoundComparisonConfig& cfg);
json bound_comparison_report(const BoundComparisonConfig& cfg, const std::vector<BoundReport>& reports);

// -- config file binding -----------------------------------------------------

/// Dispatches on config["name"], applies defaults, runs the scenario, and
/// writes report.json and manifest.json (config echo + seed) under out_dir.
/// The same manifest re-run produces byte-identical outputs.
json run_scenario_from_config(const json& config, const std::filesystem::path& out_dir);

PhaseTransitionConfig parse_phase_transition_config(const json& j);
PhaseDiagramConfig parse_phase_diagram_config(const json& j);
RankOneConfig parse_rank_one_config(const json& j);
MeanfieldConfig parse_meanfield_config(const json& j);
OrthogonalLoraConfig parse_orthogonal_lora_config(const json& j);
BoundComparisonConfig parse_bound_comparison_config(const json& j);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
json bound_report_to_json(const BoundReport& r);
json cluster_report_to_json(const std::vector<Vector>& centers, const std::vector<int>& assignment,
                            double delta, const ClusterTimes& times);

// -- verification suites -----------------------------------------------------

struct VerifyResult {
    std::string suite;
    std::string check;
    bool pass = false;
    std::string detail;
};

/// Runs the cross-module invariant suites (linalg, dynamics, transport,
/// clustering, bounds). suite_filter selects one suite, empty runs all.
/// inject_fault deliberately fails one transport check, for testing the
/// reporting path.
std::vector<VerifyResult> run_verify(const std::string& suite_filter = "", bool inject_fault = false);

}  // namespace attnlab
