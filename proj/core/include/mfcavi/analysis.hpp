#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfcavi/block_structure.hpp"
#include "mfcavi/linalg.hpp"
#include "mfcavi/potential.hpp"

namespace mfcavi {

struct EigenDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // column i pairs with values[i]; orthonormal
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Converges when
/// the off-diagonal Frobenius norm drops below 1e-12 * ||M||_F, at most 100
/// sweeps. Throws on non-symmetric input or non-convergence.
EigenDecomposition sym_eigen(const Matrix& m);

/// Symmetric PSD square root S with S*S = M. Eigenvalues in
/// [-1e-12*||M||, 0) are clamped to zero; anything lower throws.
Matrix psd_sqrt(const Matrix& m);

/// Per-block smoothness constants: lambda_max of the diagonal block Q_kk,
/// plus the user-declared monomial contribution when monomials are present
/// (throws if they are present without a declaration).
std::vector<double> block_smoothness(const Potential& pot, const BlockStructure& blocks);

struct LambdaStar {
    double value = 0.0;    // clamped to [0, 1]
    bool certified = true; // exact for pure quadratics; certified lower bound otherwise
};

/// lambda_min(D_L^{-1/2} Q D_L^{-1/2}) clamped to [0,1]. Exact for pure
/// quadratics. With monomials it is a certified lower bound only when every
/// monomial's Hessian contribution is PSD on a symmetric working domain
/// (univariate even degree with nonnegative coefficient); otherwise the
/// result carries certified = false.
LambdaStar lambda_star_lower(const Potential& pot, const BlockStructure& blocks,
                             const std::vector<double>& smoothness);

/// lambda_min(D_Q^{-1/2} Q D_Q^{-1/2}) where D_Q is the block diagonal of Q.
/// Defined when every diagonal block is PD. This is the constant of the
/// worst-case initialization probe; it coincides with lambda* when all
/// blocks are one-dimensional.
std::optional<double> lambda_dq_metric(const Potential& pot, const BlockStructure& blocks);

/// (1 - lambda*/K)^n * gap0. Requires lambda* in (0, 1].
double rate_bound_strong(long long n, int block_count, double lambda_star, double gap0);

/// 2 K R^2 / (n + 2K).
double rate_bound_convex(long long n, int block_count, double radius);

/// ceil((K/lambda*) * log(gap0 / (eps*delta))). Requires lambda* > 0 and
/// gap0 > eps*delta > 0.
long long iterations_to_epsilon(int block_count, double lambda_star, double gap0, double eps,
                                double delta);

struct SpotCheck {
    bool convex_ok = false;
    double worst_eigenvalue = 0.0;  // min over samples of lambda_min(D_L^-1/2 H D_L^-1/2)
};

/// Samples Hessians at uniform points of [lo,hi]^d and tracks the smallest
/// eigenvalue in the L-metric; fails below -1e-8. Numeric guard only, not a
/// convexity certificate.
SpotCheck convexity_spot_check(const Potential& pot, const BlockStructure& blocks,
                               int sample_count, double lo, double hi,
                               std::uint64_t seed = UINT64_C(0x5eed5eed));

struct ConvexityReport {
    std::vector<double> smoothness;          // L_k
    double lambda_star = 0.0;
    bool lambda_star_certified = false;
    std::optional<double> lambda_classical;  // min eigenvalue of Q (pure quadratics)
    std::optional<double> smoothness_classical;  // max eigenvalue of Q (pure quadratics)
    std::optional<double> lambda_dq;         // D_Q-metric constant when defined
    bool exact = false;                      // all constants exact (pure quadratic)
};

ConvexityReport analyze_potential(const Potential& pot, const BlockStructure& blocks);

}  // namespace mfcavi
