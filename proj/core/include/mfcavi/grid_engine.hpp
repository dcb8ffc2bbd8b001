#pragma once

#include <vector>

#include "mfcavi/block_structure.hpp"
#include "mfcavi/potential.hpp"

namespace mfcavi {

/// Uniform 1D grid shared by all factors of a product.
struct Grid1D {
    double lo = -12.0;
    double hi = 12.0;
    int points = 2048;

    Grid1D() = default;
    Grid1D(double lo_, double hi_, int points_);

    double spacing() const { return (hi - lo) / (points - 1); }
    double node(int i) const { return lo + spacing() * i; }
};

/// Normalized density on a grid, stored as log values plus the log of the
/// trapezoid normalizer. Densities built by histogram deposition may carry
/// -inf log values at empty nodes; every consumer treats those as zero mass.
class GridDensity {
public:
    /// Normalize exp(log_values): shift by the max before exponentiating,
    /// integrate with the trapezoid rule, and check the domain-adequacy
    /// guard (relative mass at the two boundary nodes < 1e-6).
    static GridDensity normalize(const Grid1D& grid, std::vector<double> log_values);

    /// Build from nonnegative linear values (zeros allowed); skips the
    /// boundary guard, which deposition output cannot meaningfully satisfy
    /// pointwise but satisfies in mass.
    static GridDensity from_linear(const Grid1D& grid, const std::vector<double>& values);

    const Grid1D& grid() const { return grid_; }
    double log_normalizer() const { return log_normalizer_; }
    const std::vector<double>& log_values() const { return log_q_; }
    double density(int i) const;

    /// E[x^p] for p = 0..max_order by trapezoid quadrature.
    std::vector<double> moments(int max_order) const;

    /// Integral of q log q (the negative differential entropy), with the
    /// convention 0 log 0 = 0.
    double entropy() const;

    /// Trapezoid CDF at the nodes; starts at 0, ends at 1.
    std::vector<double> cdf() const;

private:
    GridDensity(Grid1D grid, std::vector<double> log_q, double log_normalizer)
        : grid_(grid), log_q_(std::move(log_q)), log_normalizer_(log_normalizer) {}

    Grid1D grid_;
    std::vector<double> log_q_;
    double log_normalizer_;
};

/// 1D quadratic-cost Wasserstein distance by quantile inversion at 4096
/// midpoint levels.
double w2_1d(const GridDensity& a, const GridDensity& b);

/// Displacement interpolation ((1-t) Id + t T)_# a pushed back onto the grid
/// by linear histogram deposition.
GridDensity displacement_interpolate_1d(const GridDensity& a, const GridDensity& b, double t);

/// Product of 1D grid factors with a per-factor moment cache kept fresh by
/// construction. The coordinate-ascent engine for polynomial potentials
/// with all blocks one-dimensional.
class GridProduct {
public:
    GridProduct(Grid1D grid, std::vector<GridDensity> factors, int max_moment_order);

    int factor_count() const { return static_cast<int>(factors_.size()); }
    const Grid1D& grid() const { return grid_; }
    const GridDensity& factor(int k) const { return factors_.at(static_cast<std::size_t>(k)); }
    double moment(int k, int p) const;
    const MomentTable& moment_table() const { return moments_; }
    int max_moment_order() const { return max_order_; }
    bool updated(int k) const { return updated_.at(static_cast<std::size_t>(k)) != 0; }
    bool all_updated() const;

    /// Factor k becomes exp(-conditional polynomial), normalized; only its
    /// moments are refreshed.
    void apply_cavi_update(int k, const Potential& pot, const BlockStructure& blocks);

    /// Free energy Psi(q) = sum_k H(q_k) + E_q[U], the KL objective up to
    /// the additive constant log Z. E_q[U] expands exactly through the
    /// per-factor moments.
    double free_energy(const Potential& pot) const;

    double second_moment_total() const;

    void replace_factor(int k, GridDensity density, bool mark_updated);

private:
    Grid1D grid_;
    std::vector<GridDensity> factors_;
    MomentTable moments_;
    int max_order_;
    std::vector<char> updated_;

    void refresh_moments(int k);
};

/// sqrt( sum_k L_k * w2_1d(a_k, b_k)^2 ).
double w2l_grid(const GridProduct& a, const GridProduct& b, const std::vector<double>& weights);

/// Product of Gaussian factors evaluated on the grid.
GridProduct gaussian_grid_product(const Grid1D& grid, const Vector& means,
                                  const Vector& variances, int max_moment_order);

/// Point-mass initialization: K cyclic conditional updates starting from
/// the Dirac mass at x (foreign moments of untouched factors are x_j^p).
GridProduct one_sweep_from_point_grid(const Potential& pot, const BlockStructure& blocks,
                                      const Grid1D& grid, const Vector& x);

struct ReferenceSolution {
    GridProduct state;
    double free_energy = 0.0;
    int sweeps = 0;
    double final_movement = 0.0;
};

/// Cyclic sweeps from `init` until one full sweep moves the state by less
/// than `tol` in the L-weighted Wasserstein metric. Numerical stand-in for
/// the mean-field optimizer; throws if max_sweeps is exhausted.
ReferenceSolution solve_reference(const Potential& pot, const BlockStructure& blocks,
                                  const GridProduct& init, const std::vector<double>& weights,
                                  double tol = 1e-9, int max_sweeps = 4000);

}  // namespace mfcavi
