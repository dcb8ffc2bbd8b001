#pragma once

#include <vector>

#include "mfcavi/analysis.hpp"
#include "mfcavi/block_structure.hpp"
#include "mfcavi/potential.hpp"

namespace mfcavi {

/// Product of Gaussian factors, one per block: the state of the exact
/// coordinate-ascent engine for purely quadratic potentials. Once a block
/// has been updated its covariance is pinned to Q_kk^{-1}; before that,
/// any PD covariance is allowed so that bounds can be probed from generic
/// initializations.
class GaussianProduct {
public:
    GaussianProduct(BlockStructure blocks, Vector means, std::vector<Matrix> covariances);

    const BlockStructure& blocks() const { return blocks_; }
    int block_count() const { return blocks_.block_count(); }
    int dimension() const { return blocks_.dimension(); }

    const Vector& mean() const { return mean_; }
    Vector block_mean(int k) const;
    const Matrix& covariance(int k) const { return covariances_.at(static_cast<std::size_t>(k)); }
    bool updated(int k) const { return updated_.at(static_cast<std::size_t>(k)) != 0; }
    bool all_updated() const;

    void set_block_mean(int k, const Vector& mk);
    void set_covariance(int k, Matrix cov, bool mark_updated);

private:
    BlockStructure blocks_;
    Vector mean_;
    std::vector<Matrix> covariances_;
    std::vector<char> updated_;
};

/// The mean-field optimizer for a PD quadratic potential: means solve
/// Q mu = -b, covariances are the inverted diagonal blocks.
GaussianProduct mf_optimum(const Potential& pot, const BlockStructure& blocks);

/// Single-block coordinate update, in place:
/// m_k <- -Q_kk^{-1} (b_k + sum_{j!=k} Q_kj m_j), S_k <- Q_kk^{-1}.
void apply_cavi_update(GaussianProduct& state, int k, const Potential& pot);
GaussianProduct cavi_updated(const GaussianProduct& state, int k, const Potential& pot);

/// KL(q||pi) - KL(q*||pi) in closed form (log Z cancels):
/// 1/2 (m-mu)^T Q (m-mu) + 1/2 sum_k [tr(Q_kk S_k) - d_k - log det(Q_kk S_k)].
double kl_gap(const GaussianProduct& state, const Potential& pot);
double kl_gap(const GaussianProduct& state, const Potential& pot, const Vector& optimum_mean);

/// Weighted product Wasserstein distance:
/// sqrt( sum_k L_k * [ ||m_k - m'_k||^2 + Bures^2(S_k, S'_k) ] ).
double w2l(const GaussianProduct& a, const GaussianProduct& b, const std::vector<double>& weights);

/// sum_k E[||x_k||^2] = ||m||^2 + sum_k tr(S_k).
double second_moment_total(const GaussianProduct& state);

/// The point-mass initialization: K cyclic conditional updates starting
/// from the Dirac mass at x, yielding a fully PD product.
GaussianProduct one_sweep_from_point(const Potential& pot, const BlockStructure& blocks,
                                     const Vector& x);

}  // namespace mfcavi
