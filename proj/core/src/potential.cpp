#include "mfcavi/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace mfcavi {

namespace {

double int_pow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

// Merge repeated indices, drop zero exponents, sort by index.
Monomial canonicalize(const Monomial& m, int dim) {
    std::map<int, int> merged;
    for (const auto& [idx, e] : m.powers) {
        if (idx < 0 || idx >= dim)
            throw std::invalid_argument("Monomial: coordinate index " + std::to_string(idx) +
                                        " out of range");
        if (e < 1)
            throw std::invalid_argument("Monomial: exponent must be positive (coordinate " +
                                        std::to_string(idx) + ")");
        merged[idx] += e;
    }
    Monomial out;
    out.coeff = m.coeff;
    out.powers.assign(merged.begin(), merged.end());
    return out;
}

}  // namespace

MomentTable MomentTable::point_mass(const Vector& x, int max_order) {
    std::vector<std::vector<double>> m(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        m[j].resize(static_cast<std::size_t>(max_order) + 1);
        m[j][0] = 1.0;
        for (int p = 1; p <= max_order; ++p) m[j][p] = m[j][p - 1] * x[j];
    }
    return MomentTable(std::move(m));
}

double MomentTable::moment(int j, int p) const {
    if (j < 0 || j >= coordinate_count())
        throw std::out_of_range("MomentTable: coordinate " + std::to_string(j) + " out of range");
    const auto& row = moments_[static_cast<std::size_t>(j)];
    if (p < 0 || p >= static_cast<int>(row.size()))
        throw std::out_of_range("MomentTable: moment order " + std::to_string(p) +
                                " missing for coordinate " + std::to_string(j));
    return row[static_cast<std::size_t>(p)];
}

void MomentTable::set(int j, std::vector<double> values) {
    if (j >= static_cast<int>(moments_.size())) moments_.resize(static_cast<std::size_t>(j) + 1);
    moments_[static_cast<std::size_t>(j)] = std::move(values);
}

Potential::Potential(Matrix q, Vector b, std::vector<Monomial> monomials,
                     std::optional<std::vector<double>> declared_extra_smoothness)
    : q_(std::move(q)), b_(std::move(b)),
      declared_extra_smoothness_(std::move(declared_extra_smoothness)) {
    const int d = static_cast<int>(b_.size());
    if (q_.rows() != d || q_.cols() != d)
        throw std::invalid_argument("Potential: Q must be d x d with d = len(b)");
    q_.symmetrize();

    for (const Monomial& raw : monomials) {
        Monomial m = canonicalize(raw, d);
        if (m.coeff == 0.0) continue;
        const int deg = m.total_degree();
        if (deg == 0) continue;  // constants are dropped
        if (deg == 1) {
            b_[static_cast<std::size_t>(m.powers[0].first)] += m.coeff;
        } else if (deg == 2) {
            if (m.powers.size() == 1) {
                // coeff * x_i^2 contributes 2*coeff to Q_ii under the 1/2 x^T Q x convention
                q_(m.powers[0].first, m.powers[0].first) += 2.0 * m.coeff;
            } else {
                q_(m.powers[0].first, m.powers[1].first) += m.coeff;
                q_(m.powers[1].first, m.powers[0].first) += m.coeff;
            }
        } else {
            monomials_.push_back(std::move(m));
        }
    }

    if (declared_extra_smoothness_) {
        for (double l : *declared_extra_smoothness_)
            if (!(l >= 0.0))
                throw std::invalid_argument("Potential: declared extra smoothness must be >= 0");
    }
}

void Potential::check_dimension(const Vector& x) const {
    if (static_cast<int>(x.size()) != dimension())
        throw std::invalid_argument("Potential: point dimension " + std::to_string(x.size()) +
                                    " does not match d = " + std::to_string(dimension()));
}

double Potential::value(const Vector& x) const {
    check_dimension(x);
    KahanSum s;
    for (int i = 0; i < dimension(); ++i) {
        KahanSum row;
        for (int j = 0; j < dimension(); ++j) row.add(q_(i, j) * x[static_cast<std::size_t>(j)]);
        s.add(0.5 * x[static_cast<std::size_t>(i)] * row.value());
        s.add(b_[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)]);
    }
    for (const Monomial& m : monomials_) {
        double term = m.coeff;
        for (const auto& [idx, e] : m.powers) term *= int_pow(x[static_cast<std::size_t>(idx)], e);
        s.add(term);
    }
    return s.value();
}

Vector Potential::gradient(const Vector& x) const {
    check_dimension(x);
    Vector g = matvec(q_, x);
    for (int i = 0; i < dimension(); ++i) g[static_cast<std::size_t>(i)] += b_[static_cast<std::size_t>(i)];
    for (const Monomial& m : monomials_) {
        for (std::size_t t = 0; t < m.powers.size(); ++t) {
            const auto [idx, e] = m.powers[t];
            double term = m.coeff * e * int_pow(x[static_cast<std::size_t>(idx)], e - 1);
            for (std::size_t u = 0; u < m.powers.size(); ++u) {
                if (u == t) continue;
                term *= int_pow(x[static_cast<std::size_t>(m.powers[u].first)], m.powers[u].second);
            }
            g[static_cast<std::size_t>(idx)] += term;
        }
    }
    return g;
}

Matrix Potential::hessian(const Vector& x) const {
    check_dimension(x);
    Matrix h = q_;
    for (const Monomial& m : monomials_) {
        for (std::size_t t = 0; t < m.powers.size(); ++t) {
            const auto [i, ei] = m.powers[t];
            // diagonal term
            if (ei >= 2) {
                double term = m.coeff * ei * (ei - 1) * int_pow(x[static_cast<std::size_t>(i)], ei - 2);
                for (std::size_t u = 0; u < m.powers.size(); ++u) {
                    if (u == t) continue;
                    term *= int_pow(x[static_cast<std::size_t>(m.powers[u].first)], m.powers[u].second);
                }
                h(i, i) += term;
            }
            // mixed terms
            for (std::size_t u = t + 1; u < m.powers.size(); ++u) {
                const auto [j, ej] = m.powers[u];
                double term = m.coeff * ei * ej * int_pow(x[static_cast<std::size_t>(i)], ei - 1) *
                              int_pow(x[static_cast<std::size_t>(j)], ej - 1);
                for (std::size_t v = 0; v < m.powers.size(); ++v) {
                    if (v == t || v == u) continue;
                    term *= int_pow(x[static_cast<std::size_t>(m.powers[v].first)], m.powers[v].second);
                }
                h(i, j) += term;
                h(j, i) += term;
            }
        }
    }
    return h;
}

int Potential::max_exponent(int coord) const {
    int e = 0;
    for (const Monomial& m : monomials_)
        for (const auto& [idx, p] : m.powers)
            if (idx == coord) e = std::max(e, p);
    return e;
}

int Potential::max_monomial_degree() const {
    int d = 0;
    for (const Monomial& m : monomials_) d = std::max(d, m.total_degree());
    return d;
}

std::vector<double> Potential::conditional_polynomial(int k, const MomentTable& moments,
                                                      const BlockStructure& blocks) const {
    if (!blocks.all_scalar())
        throw std::invalid_argument("conditional_polynomial: all blocks must have size 1");
    if (blocks.dimension() != dimension())
        throw std::invalid_argument("conditional_polynomial: block structure does not match d");
    if (k < 0 || k >= dimension())
        throw std::out_of_range("conditional_polynomial: block index out of range");

    int degree = std::max(2, max_exponent(k));
    std::vector<double> coeffs(static_cast<std::size_t>(degree) + 1, 0.0);

    // Quadratic part: 1/2 Q_kk x^2 + (b_k + sum_{j != k} Q_kj E[x_j]) x.
    coeffs[2] += 0.5 * q_(k, k);
    KahanSum lin;
    lin.add(b_[static_cast<std::size_t>(k)]);
    for (int j = 0; j < dimension(); ++j) {
        if (j == k || q_(k, j) == 0.0) continue;
        lin.add(q_(k, j) * moments.moment(j, 1));
    }
    coeffs[1] += lin.value();

    // Monomials: foreign coordinates are replaced by their moments; a term
    // without x_k is a constant and is dropped.
    for (const Monomial& m : monomials_) {
        int own_power = 0;
        double factor = m.coeff;
        for (const auto& [idx, e] : m.powers) {
            if (idx == k)
                own_power = e;
            else
                factor *= moments.moment(idx, e);
        }
        if (own_power == 0) continue;
        coeffs[static_cast<std::size_t>(own_power)] += factor;
    }

    coeffs[0] = 0.0;
    return coeffs;
}

}  // namespace mfcavi
