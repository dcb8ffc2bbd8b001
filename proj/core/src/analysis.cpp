#include "mfcavi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mfcavi/rng.hpp"

namespace mfcavi {

namespace {

double offdiag_frobenius(const Matrix& a) {
    KahanSum s;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (i != j) s.add(a(i, j) * a(i, j));
    return std::sqrt(s.value());
}

Matrix extract_block(const Matrix& q, const BlockStructure& blocks, int k) {
    const int off = blocks.offset(k);
    const int dk = blocks.size(k);
    Matrix b(dk, dk);
    for (int i = 0; i < dk; ++i)
        for (int j = 0; j < dk; ++j) b(i, j) = q(off + i, off + j);
    return b;
}

// D^{-1/2} M D^{-1/2} for a block-diagonal PD scaling given by per-block
// PSD square roots of the inverse blocks.
Matrix scale_by_block_diag(const Matrix& m, const std::vector<Matrix>& inv_sqrt_blocks,
                           const BlockStructure& blocks) {
    const int d = m.rows();
    Matrix scaled(d, d);
    // left multiply
    for (int k = 0; k < blocks.block_count(); ++k) {
        const int off = blocks.offset(k);
        const int dk = blocks.size(k);
        const Matrix& s = inv_sqrt_blocks[static_cast<std::size_t>(k)];
        for (int i = 0; i < dk; ++i)
            for (int j = 0; j < d; ++j) {
                double v = 0.0;
                for (int t = 0; t < dk; ++t) v += s(i, t) * m(off + t, j);
                scaled(off + i, j) = v;
            }
    }
    Matrix out(d, d);
    // right multiply
    for (int k = 0; k < blocks.block_count(); ++k) {
        const int off = blocks.offset(k);
        const int dk = blocks.size(k);
        const Matrix& s = inv_sqrt_blocks[static_cast<std::size_t>(k)];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < dk; ++j) {
                double v = 0.0;
                for (int t = 0; t < dk; ++t) v += scaled(i, off + t) * s(t, j);
                out(i, off + j) = v;
            }
    }
    out.symmetrize();
    return out;
}

// Inverse square roots of per-block scalar weights, as dk x dk blocks.
std::vector<Matrix> weight_inv_sqrt_blocks(const BlockStructure& blocks,
                                           const std::vector<double>& weights) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(blocks.block_count()));
    for (int k = 0; k < blocks.block_count(); ++k) {
        const double w = weights[static_cast<std::size_t>(k)];
        if (!(w > 0.0))
            throw std::invalid_argument("lambda_star_lower: L_" + std::to_string(k) +
                                        " must be positive");
        Matrix s(blocks.size(k), blocks.size(k));
        for (int i = 0; i < blocks.size(k); ++i) s(i, i) = 1.0 / std::sqrt(w);
        out.push_back(std::move(s));
    }
    return out;
}

// A monomial's Hessian contribution is PSD on a symmetric working domain
// exactly when it is univariate with even degree and nonnegative
// coefficient; mixed monomials are indefinite somewhere.
bool monomial_hessian_psd(const Monomial& m) {
    if (m.powers.size() != 1) return false;
    const int e = m.powers[0].second;
    return e % 2 == 0 && m.coeff >= 0.0;
}

}  // namespace

EigenDecomposition sym_eigen(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("sym_eigen: matrix not square");
    const int n = m.rows();
    const double scale = m.frobenius_norm();
    if (m.max_asymmetry() > 1e-9 * std::max(1.0, scale))
        throw std::invalid_argument("sym_eigen: matrix not symmetric");

    Matrix a = m;
    a.symmetrize();
    Matrix v = Matrix::identity(n);
    const double target = 1e-12 * std::max(scale, 1e-300);
    const int max_sweeps = 100;

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (offdiag_frobenius(a) <= target) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // rotate rows/columns p and q of A
                for (int i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    if (sweep == max_sweeps && offdiag_frobenius(a) > target)
        throw std::runtime_error("sym_eigen: Jacobi iteration did not converge in 100 sweeps");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&a](int i, int j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors = Matrix(n, n);
    for (int c = 0; c < n; ++c) {
        out.values[static_cast<std::size_t>(c)] = a(order[static_cast<std::size_t>(c)],
                                                    order[static_cast<std::size_t>(c)]);
        for (int r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[static_cast<std::size_t>(c)]);
    }
    return out;
}

Matrix psd_sqrt(const Matrix& m) {
    const EigenDecomposition eig = sym_eigen(m);
    const int n = m.rows();
    const double scale = std::max(m.max_abs(), 1e-300);
    Matrix s(n, n);
    for (int t = 0; t < n; ++t) {
        double mu = eig.values[static_cast<std::size_t>(t)];
        if (mu < 0.0) {
            if (mu < -1e-12 * scale)
                throw std::runtime_error("psd_sqrt: eigenvalue " + std::to_string(mu) +
                                         " significantly negative");
            mu = 0.0;
        }
        const double r = std::sqrt(mu);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s(i, j) += r * eig.vectors(i, t) * eig.vectors(j, t);
    }
    s.symmetrize();
    return s;
}

std::vector<double> block_smoothness(const Potential& pot, const BlockStructure& blocks) {
    if (blocks.dimension() != pot.dimension())
        throw std::invalid_argument("block_smoothness: block structure does not match potential");
    const bool has_monomials = !pot.pure_quadratic();
    if (has_monomials && !pot.declared_extra_smoothness())
        throw std::invalid_argument(
            "block_smoothness: potential has monomials but no declared extra smoothness");
    if (pot.declared_extra_smoothness() &&
        static_cast<int>(pot.declared_extra_smoothness()->size()) != blocks.block_count())
        throw std::invalid_argument("block_smoothness: declared extra smoothness has wrong length");

    std::vector<double> smoothness(static_cast<std::size_t>(blocks.block_count()), 0.0);
    for (int k = 0; k < blocks.block_count(); ++k) {
        const Matrix qkk = extract_block(pot.quadratic(), blocks, k);
        double lk = 0.0;
        if (qkk.max_abs() > 0.0) {
            if (blocks.size(k) == 1)
                lk = qkk(0, 0);
            else
                lk = sym_eigen(qkk).values.back();
        }
        if (has_monomials) lk += (*pot.declared_extra_smoothness())[static_cast<std::size_t>(k)];
        if (!(lk > 0.0))
            throw std::invalid_argument("block_smoothness: L_" + std::to_string(k) +
                                        " is not positive; declare extra smoothness");
        smoothness[static_cast<std::size_t>(k)] = lk;
    }
    return smoothness;
}

LambdaStar lambda_star_lower(const Potential& pot, const BlockStructure& blocks,
                             const std::vector<double>& smoothness) {
    if (static_cast<int>(smoothness.size()) != blocks.block_count())
        throw std::invalid_argument("lambda_star_lower: smoothness list has wrong length");
    const Matrix scaled =
        scale_by_block_diag(pot.quadratic(), weight_inv_sqrt_blocks(blocks, smoothness), blocks);
    const double lo = sym_eigen(scaled).values.front();

    LambdaStar out;
    out.value = std::clamp(lo, 0.0, 1.0);
    out.certified = true;
    for (const Monomial& m : pot.monomials())
        if (!monomial_hessian_psd(m)) out.certified = false;
    return out;
}

std::optional<double> lambda_dq_metric(const Potential& pot, const BlockStructure& blocks) {
    std::vector<Matrix> inv_sqrt;
    inv_sqrt.reserve(static_cast<std::size_t>(blocks.block_count()));
    for (int k = 0; k < blocks.block_count(); ++k) {
        const Matrix qkk = extract_block(pot.quadratic(), blocks, k);
        const EigenDecomposition eig =
            blocks.size(k) == 1 ? EigenDecomposition{{qkk(0, 0)}, Matrix::identity(1)}
                                : sym_eigen(qkk);
        if (eig.values.front() <= 0.0) return std::nullopt;
        const int dk = blocks.size(k);
        Matrix s(dk, dk);
        for (int t = 0; t < dk; ++t) {
            const double r = 1.0 / std::sqrt(eig.values[static_cast<std::size_t>(t)]);
            for (int i = 0; i < dk; ++i)
                for (int j = 0; j < dk; ++j) s(i, j) += r * eig.vectors(i, t) * eig.vectors(j, t);
        }
        inv_sqrt.push_back(std::move(s));
    }
    const Matrix scaled = scale_by_block_diag(pot.quadratic(), inv_sqrt, blocks);
    return sym_eigen(scaled).values.front();
}

double rate_bound_strong(long long n, int block_count, double lambda_star, double gap0) {
    if (!(lambda_star > 0.0) || lambda_star > 1.0)
        throw std::invalid_argument("rate_bound_strong: lambda* must be in (0,1]");
    if (gap0 < 0.0) throw std::invalid_argument("rate_bound_strong: gap0 must be >= 0");
    if (n < 0) throw std::invalid_argument("rate_bound_strong: n must be >= 0");
    return std::pow(1.0 - lambda_star / block_count, static_cast<double>(n)) * gap0;
}

double rate_bound_convex(long long n, int block_count, double radius) {
    if (radius < 0.0) throw std::invalid_argument("rate_bound_convex: R must be >= 0");
    if (n < 0) throw std::invalid_argument("rate_bound_convex: n must be >= 0");
    return 2.0 * block_count * radius * radius /
           (static_cast<double>(n) + 2.0 * block_count);
}

long long iterations_to_epsilon(int block_count, double lambda_star, double gap0, double eps,
                                double delta) {
    if (!(lambda_star > 0.0))
        throw std::invalid_argument("iterations_to_epsilon: lambda* must be > 0");
    if (!(eps * delta > 0.0))
        throw std::invalid_argument("iterations_to_epsilon: eps*delta must be > 0");
    if (!(gap0 >= eps * delta))
        throw std::invalid_argument("iterations_to_epsilon: gap0 must exceed eps*delta");
    const double n = (block_count / lambda_star) * std::log(gap0 / (eps * delta));
    return static_cast<long long>(std::ceil(n - 1e-12));
}

SpotCheck convexity_spot_check(const Potential& pot, const BlockStructure& blocks,
                               int sample_count, double lo, double hi, std::uint64_t seed) {
    if (!(lo < hi)) throw std::invalid_argument("convexity_spot_check: need lo < hi");
    if (sample_count < 1) throw std::invalid_argument("convexity_spot_check: need samples >= 1");
    const std::vector<double> weights =
        blocks.has_weights() ? blocks.weights() : block_smoothness(pot, blocks);
    const auto inv_sqrt = weight_inv_sqrt_blocks(blocks, weights);

    SplitMix64 rng(seed);
    double worst = std::numeric_limits<double>::infinity();
    Vector x(static_cast<std::size_t>(pot.dimension()));
    for (int s = 0; s < sample_count; ++s) {
        for (double& xi : x) xi = rng.next_in(lo, hi);
        const Matrix scaled = scale_by_block_diag(pot.hessian(x), inv_sqrt, blocks);
        worst = std::min(worst, sym_eigen(scaled).values.front());
    }
    // the constant Hessian of a pure quadratic needs one sample only, but
    // sampling it repeatedly is harmless at desk scale
    return SpotCheck{worst >= -1e-8, worst};
}

ConvexityReport analyze_potential(const Potential& pot, const BlockStructure& blocks) {
    ConvexityReport report;
    report.smoothness = blocks.has_weights() ? blocks.weights() : block_smoothness(pot, blocks);
    const LambdaStar ls = lambda_star_lower(pot, blocks, report.smoothness);
    report.lambda_star = ls.value;
    report.lambda_star_certified = ls.certified;
    report.exact = pot.pure_quadratic();
    if (pot.pure_quadratic()) {
        const EigenDecomposition eig = sym_eigen(pot.quadratic());
        report.lambda_classical = eig.values.front();
        report.smoothness_classical = eig.values.back();
    }
    report.lambda_dq = lambda_dq_metric(pot, blocks);
    return report;
}

}  // namespace mfcavi
