#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mfcavi/block_structure.hpp"
#include "mfcavi/linalg.hpp"

namespace mfcavi {

/// One term coeff * prod_j x_j^{e_j}. Exponents are >= 1 and variable
/// indices strictly increasing; the Potential constructor canonicalizes.
struct Monomial {
    double coeff = 0.0;
    std::vector<std::pair<int, int>> powers;  // (coordinate, exponent)

    int total_degree() const {
        int d = 0;
        for (const auto& [idx, e] : powers) d += e;
        return d;
    }
};

/// Per-coordinate moment tables E[x_j^p], p = 0..order(j).
class MomentTable {
public:
    MomentTable() = default;
    explicit MomentTable(std::vector<std::vector<double>> moments) : moments_(std::move(moments)) {}

    /// Moments of the Dirac mass at x: E[x_j^p] = x_j^p.
    static MomentTable point_mass(const Vector& x, int max_order);

    int coordinate_count() const { return static_cast<int>(moments_.size()); }

    /// Throws if the table does not reach order p for coordinate j.
    double moment(int j, int p) const;

    void set(int j, std::vector<double> values);

private:
    std::vector<std::vector<double>> moments_;
};

/// Negative log density U(x) = 1/2 x^T Q x + b^T x + sum of monomials.
/// Degree <= 2 monomials supplied at construction are folded into (Q, b)
/// so the quadratic part stays canonical; constants are dropped (they
/// cancel against the normalizer everywhere this type is used).
class Potential {
public:
    Potential(Matrix q, Vector b, std::vector<Monomial> monomials = {},
              std::optional<std::vector<double>> declared_extra_smoothness = std::nullopt);

    int dimension() const { return static_cast<int>(b_.size()); }
    const Matrix& quadratic() const { return q_; }
    const Vector& linear() const { return b_; }
    const std::vector<Monomial>& monomials() const { return monomials_; }
    bool pure_quadratic() const { return monomials_.empty(); }
    const std::optional<std::vector<double>>& declared_extra_smoothness() const {
        return declared_extra_smoothness_;
    }

    double value(const Vector& x) const;
    Vector gradient(const Vector& x) const;
    Matrix hessian(const Vector& x) const;

    /// Largest exponent of coordinate j over all monomials (0 if absent).
    int max_exponent(int coord) const;
    /// Largest total monomial degree (0 when purely quadratic).
    int max_monomial_degree() const;

    /// Coefficients (index = power of x_k, constant dropped) of the exact
    /// 1D polynomial x_k -> integral of U against the product of the other
    /// factors, obtained by replacing every foreign coordinate power with
    /// its moment. Requires all blocks scalar.
    std::vector<double> conditional_polynomial(int k, const MomentTable& moments,
                                               const BlockStructure& blocks) const;

private:
    Matrix q_;
    Vector b_;
    std::vector<Monomial> monomials_;
    std::optional<std::vector<double>> declared_extra_smoothness_;

    void check_dimension(const Vector& x) const;
};

}  // namespace mfcavi
