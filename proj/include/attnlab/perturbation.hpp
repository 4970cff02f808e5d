#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "attnlab/dynamics.hpp"

namespace attnlab {

enum class LoRATarget { Q, K, V };

/// Rank-bounded update delta = A_factor^T B_factor with A, B in R^{k x d}.
struct LoRAFactors {
    LoRATarget target = LoRATarget::V;
    Matrix A_factor;  // k x d
    Matrix B_factor;  // k x d

    Matrix delta() const { return A_factor.transpose() * B_factor; }
    int rank_bound() const { return static_cast<int>(A_factor.rows()); }
};

/// Applies the factor products to the targeted matrices and rebuilds the
/// cached A = K^T Q and the spectrum of V.
AttentionTriple apply_lora(const AttentionTriple& triple, const std::vector<LoRAFactors>& factors);

/// Q = K = v v^T, V = I_d.
AttentionTriple rank_one_attention(const Vector& v);

/// Deterministic-per-seed unit vector in Im(A)^perp. Requires A rank-deficient.
Vector orthogonal_lora_direction(const AttentionTriple& triple, uint64_t seed);

/// Seeded random LoRA factors on one target, scaled so that
/// ||A_factor^T B_factor||_op equals delta_norm.
LoRAFactors random_lora_factors(LoRATarget target, int rank, int d, double delta_norm, uint64_t seed);

// -- token initializations ---------------------------------------------------

struct UniformHypercubeInit {
    double half_width = 5.0;
};
struct ConstantInit {
    Matrix points;  // d x n, overrides (n, d) of the spec
};
struct SeparatedAlongInit {
    Vector v;
    double C = 5.0;
    double spread = 1.0;  // per-sign-class spread, must be <= C/2
};
struct InOrthComplementInit {
    Matrix of;  // tokens land in Im(of)^perp
    double radius = 5.0;
};
struct PerturbedLineInit {
    Vector v;
    double C = 5.0;
    double spread = 1.0;
    double epsilon = 0.0;  // off-line displacement bound
};

struct InitSpec {
    std::variant<UniformHypercubeInit, ConstantInit, SeparatedAlongInit, InOrthComplementInit,
                 PerturbedLineInit>
        kind;
    uint64_t seed = 0;
    int n = 1;
    int d = 1;
};

/// Deterministic per seed; the kind's defining predicate is re-checked after
/// generation and PredicateUnsatisfiableError is thrown on violation.
TokenCloud generate_init(const InitSpec& spec);

}  // namespace attnlab
