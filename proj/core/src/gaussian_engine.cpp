#include "mfcavi/gaussian_engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mfcavi {

namespace {

void require_pure_quadratic(const Potential& pot, const char* who) {
    if (!pot.pure_quadratic())
        throw std::invalid_argument(std::string(who) +
                                    ": gaussian engine requires purely quadratic potential");
}

Matrix block_of(const Matrix& q, const BlockStructure& blocks, int k) {
    const int off = blocks.offset(k);
    const int dk = blocks.size(k);
    Matrix out(dk, dk);
    for (int i = 0; i < dk; ++i)
        for (int j = 0; j < dk; ++j) out(i, j) = q(off + i, off + j);
    return out;
}

Matrix invert_pd(const Matrix& a) {
    const Cholesky chol(a);
    const int n = a.rows();
    Matrix inv(n, n);
    Vector e(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        e[static_cast<std::size_t>(j)] = 1.0;
        const Vector col = chol.solve(e);
        for (int i = 0; i < n; ++i) inv(i, j) = col[static_cast<std::size_t>(i)];
        e[static_cast<std::size_t>(j)] = 0.0;
    }
    inv.symmetrize();
    return inv;
}

// b_k + sum_{j != k} Q_kj m_j over flat coordinates.
Vector coupling_vector(const GaussianProduct& state, int k, const Potential& pot) {
    const BlockStructure& blocks = state.blocks();
    const int off = blocks.offset(k);
    const int dk = blocks.size(k);
    const Matrix& q = pot.quadratic();
    Vector rhs(static_cast<std::size_t>(dk));
    for (int i = 0; i < dk; ++i) {
        KahanSum s;
        s.add(pot.linear()[static_cast<std::size_t>(off + i)]);
        for (int j = 0; j < state.dimension(); ++j) {
            if (j >= off && j < off + dk) continue;
            s.add(q(off + i, j) * state.mean()[static_cast<std::size_t>(j)]);
        }
        rhs[static_cast<std::size_t>(i)] = s.value();
    }
    return rhs;
}

}  // namespace

GaussianProduct::GaussianProduct(BlockStructure blocks, Vector means,
                                 std::vector<Matrix> covariances)
    : blocks_(std::move(blocks)), mean_(std::move(means)), covariances_(std::move(covariances)),
      updated_(static_cast<std::size_t>(blocks_.block_count()), 0) {
    if (static_cast<int>(mean_.size()) != blocks_.dimension())
        throw std::invalid_argument("GaussianProduct: mean dimension mismatch");
    if (static_cast<int>(covariances_.size()) != blocks_.block_count())
        throw std::invalid_argument("GaussianProduct: need one covariance per block");
    for (int k = 0; k < blocks_.block_count(); ++k) {
        const Matrix& s = covariances_[static_cast<std::size_t>(k)];
        if (s.rows() != blocks_.size(k) || s.cols() != blocks_.size(k))
            throw std::invalid_argument("GaussianProduct: covariance " + std::to_string(k) +
                                        " has wrong shape");
        Cholesky check(s);  // PD or throw
    }
}

Vector GaussianProduct::block_mean(int k) const {
    const int off = blocks_.offset(k);
    const int dk = blocks_.size(k);
    return Vector(mean_.begin() + off, mean_.begin() + off + dk);
}

bool GaussianProduct::all_updated() const {
    for (char u : updated_)
        if (!u) return false;
    return true;
}

void GaussianProduct::set_block_mean(int k, const Vector& mk) {
    const int off = blocks_.offset(k);
    if (static_cast<int>(mk.size()) != blocks_.size(k))
        throw std::invalid_argument("set_block_mean: dimension mismatch");
    for (std::size_t i = 0; i < mk.size(); ++i) mean_[off + i] = mk[i];
}

void GaussianProduct::set_covariance(int k, Matrix cov, bool mark_updated) {
    if (cov.rows() != blocks_.size(k) || cov.cols() != blocks_.size(k))
        throw std::invalid_argument("set_covariance: dimension mismatch");
    covariances_[static_cast<std::size_t>(k)] = std::move(cov);
    if (mark_updated) updated_[static_cast<std::size_t>(k)] = 1;
}

GaussianProduct mf_optimum(const Potential& pot, const BlockStructure& blocks) {
    require_pure_quadratic(pot, "mf_optimum");
    const Cholesky chol(pot.quadratic());  // throws if Q is not PD
    Vector neg_b = pot.linear();
    for (double& v : neg_b) v = -v;
    Vector mu = chol.solve(neg_b);

    std::vector<Matrix> covs;
    covs.reserve(static_cast<std::size_t>(blocks.block_count()));
    for (int k = 0; k < blocks.block_count(); ++k)
        covs.push_back(invert_pd(block_of(pot.quadratic(), blocks, k)));

    GaussianProduct q(blocks, std::move(mu), std::move(covs));
    for (int k = 0; k < blocks.block_count(); ++k)
        q.set_covariance(k, q.covariance(k), /*mark_updated=*/true);
    return q;
}

void apply_cavi_update(GaussianProduct& state, int k, const Potential& pot) {
    require_pure_quadratic(pot, "apply_cavi_update");
    if (k < 0 || k >= state.block_count())
        throw std::out_of_range("apply_cavi_update: block index out of range");
    const Matrix qkk = block_of(pot.quadratic(), state.blocks(), k);
    const Cholesky chol(qkk);
    Vector rhs = coupling_vector(state, k, pot);
    for (double& v : rhs) v = -v;
    state.set_block_mean(k, chol.solve(rhs));
    state.set_covariance(k, invert_pd(qkk), /*mark_updated=*/true);
}

GaussianProduct cavi_updated(const GaussianProduct& state, int k, const Potential& pot) {
    GaussianProduct next = state;
    apply_cavi_update(next, k, pot);
    return next;
}

double kl_gap(const GaussianProduct& state, const Potential& pot) {
    require_pure_quadratic(pot, "kl_gap");
    const Cholesky chol(pot.quadratic());
    Vector neg_b = pot.linear();
    for (double& v : neg_b) v = -v;
    return kl_gap(state, pot, chol.solve(neg_b));
}

double kl_gap(const GaussianProduct& state, const Potential& pot, const Vector& optimum_mean) {
    require_pure_quadratic(pot, "kl_gap");
    Vector delta(state.mean());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= optimum_mean[i];
    KahanSum gap;
    gap.add(0.5 * quadratic_form(pot.quadratic(), delta));
    for (int k = 0; k < state.block_count(); ++k) {
        const Matrix qkk = block_of(pot.quadratic(), state.blocks(), k);
        const Matrix& sk = state.covariance(k);
        const Matrix prod = matmul(qkk, sk);
        double trace = 0.0;
        for (int i = 0; i < prod.rows(); ++i) trace += prod(i, i);
        const double logdet = Cholesky(qkk).log_det() + Cholesky(sk).log_det();
        gap.add(0.5 * (trace - state.blocks().size(k) - logdet));
    }
    return gap.value();
}

double w2l(const GaussianProduct& a, const GaussianProduct& b, const std::vector<double>& weights) {
    if (a.block_count() != b.block_count())
        throw std::invalid_argument("w2l: block count mismatch");
    if (static_cast<int>(weights.size()) != a.block_count())
        throw std::invalid_argument("w2l: need one weight per block");
    KahanSum total;
    for (int k = 0; k < a.block_count(); ++k) {
        const Vector ma = a.block_mean(k);
        const Vector mb = b.block_mean(k);
        KahanSum sq;
        for (std::size_t i = 0; i < ma.size(); ++i) sq.add((ma[i] - mb[i]) * (ma[i] - mb[i]));

        const Matrix& sa = a.covariance(k);
        const Matrix& sb = b.covariance(k);
        double bures;
        if (sa.rows() == 1) {
            const double d = std::sqrt(sa(0, 0)) - std::sqrt(sb(0, 0));
            bures = d * d;
        } else {
            const Matrix rb = psd_sqrt(sb);
            const Matrix cross = psd_sqrt(matmul(matmul(rb, sa), rb));
            double trace = 0.0;
            for (int i = 0; i < sa.rows(); ++i)
                trace += sa(i, i) + sb(i, i) - 2.0 * cross(i, i);
            bures = std::max(trace, 0.0);
        }
        total.add(weights[static_cast<std::size_t>(k)] * (sq.value() + bures));
    }
    return std::sqrt(std::max(total.value(), 0.0));
}

double second_moment_total(const GaussianProduct& state) {
    KahanSum s;
    for (double m : state.mean()) s.add(m * m);
    for (int k = 0; k < state.block_count(); ++k)
        for (int i = 0; i < state.blocks().size(k); ++i) s.add(state.covariance(k)(i, i));
    return s.value();
}

GaussianProduct one_sweep_from_point(const Potential& pot, const BlockStructure& blocks,
                                     const Vector& x) {
    require_pure_quadratic(pot, "one_sweep_from_point");
    if (static_cast<int>(x.size()) != blocks.dimension())
        throw std::invalid_argument("one_sweep_from_point: point dimension mismatch");
    // Start with unit covariances as placeholders; each block's first update
    // overwrites them, and not-yet-updated blocks enter the conditional only
    // through their (point) means.
    std::vector<Matrix> covs;
    for (int k = 0; k < blocks.block_count(); ++k) covs.push_back(Matrix::identity(blocks.size(k)));
    GaussianProduct state(blocks, x, std::move(covs));
    for (int k = 0; k < blocks.block_count(); ++k) apply_cavi_update(state, k, pot);
    return state;
}

}  // namespace mfcavi
