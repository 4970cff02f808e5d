#include "attnlab/perturbation.hpp"

#include <cmath>
#include <random>

namespace attnlab {

AttentionTriple apply_lora(const AttentionTriple& triple, const std::vector<LoRAFactors>& factors) {
    Matrix q = triple.Q, k = triple.K, v = triple.V;
    const int d = triple.dim();
    for (const LoRAFactors& f : factors) {
        if (f.A_factor.cols() != d || f.B_factor.cols() != d || f.A_factor.rows() != f.B_factor.rows()) {
            throw DimensionMismatchError("apply_lora: factor dimensions do not match the triple");
        }
        const Matrix delta = f.delta();
        switch (f.target) {
            case LoRATarget::Q: q += delta; break;
            case LoRATarget::K: k += delta; break;
            case LoRATarget::V: v += delta; break;
        }
    }
    return AttentionTriple::make(std::move(q), std::move(k), std::move(v));
}

AttentionTriple rank_one_attention(const Vector& v) {
    if (v.norm() == 0.0) throw ZeroVectorError("rank_one_attention: v must be nonzero");
    const int d = static_cast<int>(v.size());
    const Matrix vvT = v * v.transpose();
    return AttentionTriple::make(vvT, vvT, Matrix::Identity(d, d));
}

Vector orthogonal_lora_direction(const AttentionTriple& triple, uint64_t seed) {
    const int d = triple.dim();
    // Orthogonal to both Im(A) and Im(A^T) so that Av = A^T v = 0; the two
    // coincide for the symmetric A of the propositions.
    std::vector<Vector> spanning;
    for (int j = 0; j < d; ++j) {
        spanning.push_back(triple.A.col(j));
        spanning.push_back(triple.A.row(j).transpose());
    }
    const std::vector<Vector> basis = orth_complement_basis(spanning, d);
    if (basis.empty()) throw FullRankError("orthogonal_lora_direction: Im(A) is all of R^d");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector v = Vector::Zero(d);
    while (v.norm() < 1e-12) {
        v.setZero();
        for (const Vector& b : basis) v += unif(rng) * b;
    }
    return v / v.norm();
}

LoRAFactors random_lora_factors(LoRATarget target, int rank, int d, double delta_norm, uint64_t seed) {
    if (rank < 1 || rank > d) throw Error("random_lora_factors: rank must lie in [1, d]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    LoRAFactors f;
    f.target = target;
    f.A_factor.resize(rank, d);
    f.B_factor.resize(rank, d);
    for (int i = 0; i < rank; ++i) {
        for (int j = 0; j < d; ++j) {
            f.A_factor(i, j) = unif(rng);
            f.B_factor(i, j) = unif(rng);
        }
    }
    const double nrm = op_norm(f.delta());
    if (nrm > 0.0 && delta_norm > 0.0) {
        f.B_factor *= delta_norm / nrm;
    } else if (delta_norm == 0.0) {
        f.B_factor.setZero();
    }
    return f;
}

namespace {

struct InitGenerator {
    const InitSpec& spec;
    std::mt19937_64 rng;

    explicit InitGenerator(const InitSpec& s) : spec(s), rng(s.seed) {}

    TokenCloud operator()(const UniformHypercubeInit& k) {
        std::uniform_real_distribution<double> unif(-k.half_width, k.half_width);
        Matrix pts(spec.d, spec.n);
        for (int j = 0; j < spec.n; ++j) {
            for (int c = 0; c < spec.d; ++c) pts(c, j) = unif(rng);
        }
        TokenCloud cloud{std::move(pts)};
        if (cloud.points.cwiseAbs().maxCoeff() > k.half_width) {
            throw PredicateUnsatisfiableError("uniform_hypercube: coordinate outside the cube");
        }
        return cloud;
    }

    TokenCloud operator()(const ConstantInit& k) { return TokenCloud{k.points}; }

    TokenCloud operator()(const SeparatedAlongInit& k) {
        if (k.spread > k.C / 2.0) {
            throw PredicateUnsatisfiableError("separated_along: spread exceeds C/2");
        }
        const Vector dir = k.v / k.v.norm();
        std::uniform_real_distribution<double> unif(0.0, k.spread);
        std::bernoulli_distribution coin(0.5);
        Matrix pts(spec.d, spec.n);
        for (int j = 0; j < spec.n; ++j) {
            const double sign = coin(rng) ? 1.0 : -1.0;
            pts.col(j) = sign * (k.C + unif(rng)) * dir;
        }
        TokenCloud cloud{std::move(pts)};
        check_separated(cloud, dir, k.C, k.spread);
        return cloud;
    }

    TokenCloud operator()(const InOrthComplementInit& k) {
        std::vector<Vector> cols;
        for (Eigen::Index j = 0; j < k.of.cols(); ++j) cols.push_back(k.of.col(j));
        const std::vector<Vector> basis = orth_complement_basis(cols, spec.d);
        if (basis.empty()) {
            throw PredicateUnsatisfiableError("in_orth_complement: Im(of) is all of R^d");
        }
        // Uniform in the complement ball of the given radius, by rejection.
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        Matrix pts(spec.d, spec.n);
        const int m = static_cast<int>(basis.size());
        for (int j = 0; j < spec.n; ++j) {
            Vector coord(m);
            do {
                for (int c = 0; c < m; ++c) coord(c) = unif(rng);
            } while (coord.norm() > 1.0);
            Vector p = Vector::Zero(spec.d);
            for (int c = 0; c < m; ++c) p += k.radius * coord(c) * basis[c];
            pts.col(j) = p;
        }
        TokenCloud cloud{std::move(pts)};
        for (int j = 0; j < spec.n; ++j) {
            for (const Vector& col : cols) {
                if (col.norm() > 0.0 && std::abs(col.dot(cloud.points.col(j)) / col.norm()) > 1e-9) {
                    throw PredicateUnsatisfiableError("in_orth_complement: token not orthogonal to Im(of)");
                }
            }
        }
        return cloud;
    }

    TokenCloud operator()(const PerturbedLineInit& k) {
        const Vector dir = k.v / k.v.norm();
        // On-line part reuses the separated generator so paired runs share the
        // same line coordinates for the same seed.
        SeparatedAlongInit base{k.v, k.C, k.spread};
        TokenCloud cloud = (*this)(base);
        if (k.epsilon > 0.0) {
            const std::vector<Vector> comp = orth_complement_basis({dir}, spec.d);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            for (int j = 0; j < spec.n; ++j) {
                Vector off = Vector::Zero(spec.d);
                for (const Vector& b : comp) off += unif(rng) * b;
                if (off.norm() > 0.0) off *= k.epsilon / off.norm();
                cloud.points.col(j) += off;
            }
        }
        for (int j = 0; j < spec.n; ++j) {
            const Vector p = cloud.points.col(j);
            if ((p - dir * dir.dot(p)).norm() > k.epsilon * (1.0 + 1e-12)) {
                throw PredicateUnsatisfiableError("perturbed_line: token too far from the line");
            }
        }
        return cloud;
    }

    static void check_separated(const TokenCloud& cloud, const Vector& dir, double C, double spread) {
        double pos_min = std::numeric_limits<double>::infinity(), pos_max = -pos_min;
        double neg_min = pos_min, neg_max = -pos_min;
        for (int j = 0; j < cloud.n(); ++j) {
            const double s = dir.dot(cloud.points.col(j));
            if (std::abs(s) < C * (1.0 - 1e-12)) {
                throw PredicateUnsatisfiableError("separated_along: |<z, v>| < C");
            }
            if (s >= 0.0) {
                pos_min = std::min(pos_min, s);
                pos_max = std::max(pos_max, s);
            } else {
                neg_min = std::min(neg_min, std::abs(s));
                neg_max = std::max(neg_max, std::abs(s));
            }
        }
        const double tol = C / 2.0 + 1e-12;
        if (pos_max > pos_min && pos_max - pos_min > tol) {
            throw PredicateUnsatisfiableError("separated_along: positive class spread exceeds C/2");
        }
        if (neg_max > neg_min && neg_max - neg_min > tol) {
            throw PredicateUnsatisfiableError("separated_along: negative class spread exceeds C/2");
        }
        (void)spread;
    }
};

}  // namespace

TokenCloud generate_init(const InitSpec& spec) {
    if (spec.n < 1 || spec.d < 1) throw Error("generate_init: n and d must be >= 1");
    InitGenerator gen(spec);
    return std::visit(gen, spec.kind);
}

}  // namespace attnlab
