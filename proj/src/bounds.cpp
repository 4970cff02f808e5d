#include "attnlab/bounds.hpp"

#include <cmath>
#include <limits>

namespace attnlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExpArgLimit = 700.0;  // exp overflow threshold for doubles

double safe_exp(double x) { return x > kExpArgLimit ? kInf : std::exp(x); }
}  // namespace

BoundReport BoundReport::against(std::string name, std::map<std::string, double> inputs, double value,
                                 double measured) {
    BoundReport r;
    r.name = std::move(name);
    r.inputs = std::move(inputs);
    r.value = value;
    Domination dom;
    dom.measured = measured;
    dom.vacuous = std::isinf(value);
    dom.holds = value >= measured - 1e-9;
    dom.margin = value - measured;
    r.dominates = dom;
    return r;
}

double radius_envelope(double R0, const Matrix& V, const Matrix& V_tilde, double t) {
    if (R0 <= 0.0) throw Error("radius_envelope: R0 must be > 0");
    if (t < 0.0) throw Error("radius_envelope: t must be >= 0");
    const double rate = std::max(op_norm(V), op_norm(V_tilde));
    return R0 * safe_exp(rate * t);
}

double lipschitz_in_x_bound(const AttentionTriple& triple, double R) {
    if (R <= 0.0) throw Error("lipschitz_in_x_bound: R must be > 0");
    return 2.0 * op_norm(triple.Q.transpose() * triple.K) * op_norm(triple.V) * R * R;
}

double kernel_sup_bound(const AttentionTriple& triple, double R) {
    if (R < 0.0) throw Error("kernel_sup_bound: R must be >= 0");
    return op_norm(triple.V) * R;
}

double c2_bound(const AttentionTriple& triple, double R) {
    if (R < 0.0) throw Error("c2_bound: R must be >= 0");
    const double a = op_norm(triple.A);
    const double v = op_norm(triple.V);
    if (a == 0.0 || v == 0.0 || R == 0.0) return 0.0;
    const double expo = safe_exp(2.0 * R * R * a);
    if (std::isinf(expo)) return kInf;
    return 2.0 * R * R * v * a * (1.0 + expo);
}

double perturbation_constant(const AttentionTriple& triple, const AttentionTriple& triple_tilde,
                             double R0, double t) {
    const double rt = radius_envelope(R0, triple.V, triple_tilde.V, t);
    if (std::isinf(rt)) return kInf;
    const double dv = op_norm(triple.V - triple_tilde.V);
    const double da = op_norm(triple.A - triple_tilde.A);
    return 2.0 * dv * dv * rt * rt + 4.0 * rt * rt * rt * op_norm(triple.V) * da;
}

double stability_w2_bound(C1Kind c1_kind, const AttentionTriple& triple,
                          const AttentionTriple& triple_tilde, double R0, double t,
                          double quadrature_step) {
    if (t < 0.0) throw Error("stability_w2_bound: t must be >= 0");
    if (quadrature_step <= 0.0) throw Error("stability_w2_bound: quadrature_step must be > 0");

    const double rt = radius_envelope(R0, triple.V, triple_tilde.V, t);
    if (std::isinf(rt)) return kInf;

    double front;  // the 2 C_1(R_t)^2 prefactor
    if (c1_kind == C1Kind::v_perturbation) {
        const double c1 = op_norm(triple.V - triple_tilde.V) * rt;
        front = 2.0 * c1 * c1;
    } else {
        front = perturbation_constant(triple, triple_tilde, R0, t);
    }
    if (front == 0.0) return 0.0;
    if (std::isinf(front)) return kInf;
    if (t == 0.0) return std::sqrt(front);

    // C_t = int_0^t C_2(R_s)^2 ds by composite trapezoid.
    const int steps = std::max(1, static_cast<int>(std::ceil(t / quadrature_step)));
    const double h = t / steps;
    double ct = 0.0;
    double prev = std::pow(c2_bound(triple, radius_envelope(R0, triple.V, triple_tilde.V, 0.0)), 2);
    for (int k = 1; k <= steps; ++k) {
        const double s = k * h;
        const double c2 = c2_bound(triple, radius_envelope(R0, triple.V, triple_tilde.V, s));
        const double cur = c2 * c2;
        if (std::isinf(cur)) return kInf;
        ct += 0.5 * h * (prev + cur);
        prev = cur;
    }

    const double kt = lipschitz_in_x_bound(triple, rt);
    const double inner = safe_exp(3.0 * kt);
    if (std::isinf(inner)) return kInf;
    const double expo = 2.0 * ct * inner;
    if (expo > kExpArgLimit) return kInf;
    return std::sqrt(front * std::exp(expo));
}

double meanfield_lambda1(const AttentionTriple& triple) {
    const int d = triple.dim();
    std::vector<Vector> cols;
    for (int j = 0; j < d; ++j) cols.push_back(triple.A.col(j));
    const std::vector<Vector> basis = orth_complement_basis(cols, d);
    if (basis.empty()) {
        throw Error("meanfield_lambda1: Im(A)^perp is trivial");
    }
    Matrix b(d, static_cast<Eigen::Index>(basis.size()));
    for (size_t k = 0; k < basis.size(); ++k) b.col(static_cast<Eigen::Index>(k)) = basis[k];
    const Matrix restricted = b.transpose() * triple.V * b;
    const Spectrum rspec = eig(restricted);
    const double lambda = rspec.eigenvalues(0).real();
    if (lambda <= 0.0 || std::abs(rspec.eigenvalues(0).imag()) > kRealSpectrumTol * std::max(1.0, lambda)) {
        throw NonPositiveEigenvalueError(
            "meanfield_lambda1: leading eigenvalue of the restriction is not positive real");
    }
    return lambda;
}

double meanfield_T_delta_bound(const TokenCloud& cloud0, const AttentionTriple& triple, double delta) {
    if (delta <= 0.0) throw Error("meanfield_T_delta_bound: delta must be > 0");
    const double lambda = meanfield_lambda1(triple);

    const Vector mean = cloud0.points.rowwise().mean();
    double max_dev = 0.0;
    for (int j = 0; j < cloud0.n(); ++j) {
        max_dev = std::max(max_dev, (cloud0.points.col(j) - mean).norm());
    }
    if (max_dev == 0.0) return 0.0;
    return std::max(0.0, std::log(max_dev / delta) / lambda);
}

double meanfield_T_delta_prob_bound(double C, int d_perp, int n, double delta, double eps,
                                    double lambda1) {
    if (C <= 0.0) throw Error("meanfield_T_delta_prob_bound: C must be > 0");
    if (eps <= 0.0 || eps >= 0.5) throw Error("meanfield_T_delta_prob_bound: eps must lie in (0, 1/2)");
    if (delta <= 0.0) throw Error("meanfield_T_delta_prob_bound: delta must be > 0");
    if (lambda1 <= 0.0) throw NonPositiveEigenvalueError("meanfield_T_delta_prob_bound: lambda1 <= 0");
    const double num = std::sqrt(2.0 * C * d_perp * std::log(1.0 / eps) * n);
    return std::log(num / delta) / lambda1;
}

TStarBound t_star_upper_bound(double delta, double eps_gap, double lambda1, double c11, double z_sup,
                              double C0, double N, double d_cluster) {
    if (eps_gap <= 0.0) throw Error("t_star_upper_bound: eps_gap must be > 0");
    if (c11 <= 0.0) throw Error("t_star_upper_bound: c11 must be > 0");
    if (lambda1 <= 0.0) throw NonPositiveEigenvalueError("t_star_upper_bound: lambda1 <= 0");

    const double drift_arg = z_sup / (delta * delta * c11);
    if (drift_arg <= 0.0) throw InvalidLogError("t_star_upper_bound: log argument z_sup/(delta^2 c11) <= 0");

    const double inner_arg = delta * C0 * N / d_cluster;
    if (inner_arg <= 0.0) throw InvalidLogError("t_star_upper_bound: inner log argument delta*C0*N/d <= 0");
    const double inner = std::log(inner_arg);
    const double outer_arg = inner / (c11 * delta);
    if (outer_arg <= 0.0) throw InvalidLogError("t_star_upper_bound: outer log argument <= 0");

    TStarBound out;
    out.branch_drift = std::log(drift_arg) / eps_gap;
    out.branch_cluster = std::log(outer_arg) / (2.0 * lambda1);
    out.value = std::max(out.branch_drift, out.branch_cluster);
    return out;
}

}  // namespace attnlab
