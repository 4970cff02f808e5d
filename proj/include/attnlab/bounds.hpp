#pragma once

#include <map>
#include <optional>
#include <string>

#include "attnlab/dynamics.hpp"

namespace attnlab {

struct Domination {
    double measured = 0.0;
    bool holds = false;
    double margin = 0.0;
    bool vacuous = false;  // bound saturated to +inf
};

struct BoundReport {
    std::string name;
    std::map<std::string, double> inputs;
    double value = 0.0;
    std::optional<Domination> dominates;

    static BoundReport against(std::string name, std::map<std::string, double> inputs, double value,
                               double measured);
};

/// R_t = R0 * e^{max(||V||_op, ||V~||_op) t}.
double radius_envelope(double R0, const Matrix& V, const Matrix& V_tilde, double t);

/// K_t = 2 ||Q^T K||_op ||V||_op R^2.
double lipschitz_in_x_bound(const AttentionTriple& triple, double R);

/// ||X[mu]||_inf <= ||V||_op R.
double kernel_sup_bound(const AttentionTriple& triple, double R);

/// C_2(R) <= 2 R^2 ||V||_op ||A||_op (1 + e^{2 R^2 ||A||_op}); saturates to +inf.
double c2_bound(const AttentionTriple& triple, double R);

enum class C1Kind {
    v_perturbation,  // C_1(R) = ||V - V~||_op R
    combined,        // 2 C_1(R)^2 replaced by the combined perturbation constant
};

/// W_2 bound sqrt(2 C_1(R_t)^2 e^{2 C_t e^{3 K_t}}) with
/// C_t = int_0^t C_2(R_s)^2 ds (composite trapezoid). Saturates to +inf,
/// which readers should report as a vacuous domination.
double stability_w2_bound(C1Kind c1_kind, const AttentionTriple& triple,
                          const AttentionTriple& triple_tilde, double R0, double t,
                          double quadrature_step = 1e-3);

/// K(A - A~, V - V~, t) = 2 ||V - V~||_op^2 R_t^2 + 4 R_t^3 ||V||_op ||A - A~||_op.
double perturbation_constant(const AttentionTriple& triple, const AttentionTriple& triple_tilde,
                             double R0, double t);

/// Deterministic mean-field collapse time bound,
/// log(max_i ||z_i(0) - m(0)|| / delta) / lambda_1(V restricted to Im(A)^perp),
/// clamped below at 0. The restriction is taken on Im(A)^perp, the subspace
/// actually containing the tokens; see kMeanfieldRestrictionNote.
double meanfield_T_delta_bound(const TokenCloud& cloud0, const AttentionTriple& triple, double delta);

/// Leading eigenvalue of V restricted to Im(A)^perp. Throws
/// NonPositiveEigenvalueError when it is not positive real.
double meanfield_lambda1(const AttentionTriple& triple);

inline constexpr const char* kMeanfieldRestrictionNote =
    "lambda_1 is computed on the restriction of V to Im(A)^perp (the token subspace); "
    "displays of the deterministic bound sometimes name the restriction to Im(A) instead";

/// Probabilistic bound log(sqrt(2 C d log(1/eps) n) / delta) / lambda1,
/// valid with probability >= 1 - 2 eps.
double meanfield_T_delta_prob_bound(double C, int d_perp, int n, double delta, double eps,
                                    double lambda1);

struct TStarBound {
    double value = 0.0;
    double branch_drift = 0.0;   // log(z_sup / (delta^2 c11)) / eps_gap
    double branch_cluster = 0.0; // log(log(delta C0 N / d) / (c11 delta)) / (2 lambda1)
    std::string asymptotic = "O(log(delta)/eps)";
};

/// Upper bound on the bifurcation time T*(delta); the unpinned constants
/// (C0, N, d_cluster) are explicit inputs. Throws InvalidLogError when an
/// inner logarithm is non-positive.
TStarBound t_star_upper_bound(double delta, double eps_gap, double lambda1, double c11, double z_sup,
                              double C0, double N, double d_cluster);

}  // namespace attnlab
