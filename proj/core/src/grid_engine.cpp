#include "mfcavi/grid_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mfcavi {

namespace {

constexpr int kQuantileLevels = 4096;

double trapezoid(const std::vector<double>& values, double h) {
    KahanSum s;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) s.add(0.5 * h * (values[i] + values[i + 1]));
    return s.value();
}

// Inverse CDF at increasing levels by monotone linear interpolation between
// nodes; flat (zero-mass) cells collapse to their right node. Levels must be
// sorted ascending in [0, 1].
std::vector<double> inverse_cdf(const GridDensity& q, const std::vector<double>& levels) {
    const std::vector<double> cdf = q.cdf();
    const Grid1D& grid = q.grid();
    std::vector<double> out(levels.size());
    std::size_t j = 1;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double u = levels[i];
        while (j + 1 < cdf.size() && cdf[j] < u) ++j;
        const double c0 = cdf[j - 1];
        const double c1 = cdf[j];
        double x;
        if (c1 > c0) {
            const double w = std::clamp((u - c0) / (c1 - c0), 0.0, 1.0);
            x = grid.node(static_cast<int>(j - 1)) + w * grid.spacing();
        } else {
            x = grid.node(static_cast<int>(j));
        }
        out[i] = x;
    }
    return out;
}

// midpoint levels u_i = (i + 1/2)/M
std::vector<double> quantiles(const GridDensity& q) {
    std::vector<double> levels(kQuantileLevels);
    for (int i = 0; i < kQuantileLevels; ++i)
        levels[static_cast<std::size_t>(i)] = (i + 0.5) / kQuantileLevels;
    return inverse_cdf(q, levels);
}

void check_same_grid(const GridDensity& a, const GridDensity& b, const char* who) {
    if (a.grid().points != b.grid().points || a.grid().lo != b.grid().lo ||
        a.grid().hi != b.grid().hi)
        throw std::invalid_argument(std::string(who) + ": densities live on different grids");
}

}  // namespace

Grid1D::Grid1D(double lo_, double hi_, int points_) : lo(lo_), hi(hi_), points(points_) {
    if (!(lo < hi)) throw std::invalid_argument("Grid1D: need lo < hi");
    if (points < 64) throw std::invalid_argument("Grid1D: need at least 64 points");
}

GridDensity GridDensity::normalize(const Grid1D& grid, std::vector<double> log_values) {
    if (static_cast<int>(log_values.size()) != grid.points)
        throw std::invalid_argument("GridDensity::normalize: value count does not match grid");
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : log_values) {
        if (!std::isfinite(v))
            throw std::invalid_argument("GridDensity::normalize: non-finite log value");
        peak = std::max(peak, v);
    }
    std::vector<double> scaled(log_values.size());
    for (std::size_t i = 0; i < log_values.size(); ++i) scaled[i] = std::exp(log_values[i] - peak);
    const double integral = trapezoid(scaled, grid.spacing());
    if (!(integral > 0.0))
        throw std::runtime_error("GridDensity::normalize: density integrates to zero");
    const double log_norm = peak + std::log(integral);
    for (double& v : log_values) v -= log_norm;

    GridDensity q(grid, std::move(log_values), log_norm);
    // domain-adequacy guard: mass within 1e-8 of either boundary node must
    // stay below 1e-6 of the total
    const double boundary_mass = 1e-8 * (q.density(0) + q.density(grid.points - 1));
    if (boundary_mass >= 1e-6)
        throw std::runtime_error(
            "GridDensity::normalize: boundary mass " + std::to_string(boundary_mass) +
            " exceeds 1e-6 of total; the grid domain is too small for this density");
    return q;
}

GridDensity GridDensity::from_linear(const Grid1D& grid, const std::vector<double>& values) {
    if (static_cast<int>(values.size()) != grid.points)
        throw std::invalid_argument("GridDensity::from_linear: value count does not match grid");
    const double integral = trapezoid(values, grid.spacing());
    if (!(integral > 0.0))
        throw std::runtime_error("GridDensity::from_linear: density integrates to zero");
    std::vector<double> log_q(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
            throw std::invalid_argument("GridDensity::from_linear: values must be finite and >= 0");
        log_q[i] = values[i] > 0.0 ? std::log(values[i] / integral)
                                   : -std::numeric_limits<double>::infinity();
    }
    return GridDensity(grid, std::move(log_q), std::log(integral));
}

double GridDensity::density(int i) const {
    const double lq = log_q_[static_cast<std::size_t>(i)];
    return std::isfinite(lq) ? std::exp(lq) : 0.0;
}

std::vector<double> GridDensity::moments(int max_order) const {
    std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
    const double h = grid_.spacing();
    for (int p = 0; p <= max_order; ++p) {
        KahanSum s;
        double prev = 0.0;
        for (int i = 0; i < grid_.points; ++i) {
            const double x = grid_.node(i);
            double xp = 1.0;
            for (int t = 0; t < p; ++t) xp *= x;
            const double cur = xp * density(i);
            if (i > 0) s.add(0.5 * h * (prev + cur));
            prev = cur;
        }
        out[static_cast<std::size_t>(p)] = s.value();
    }
    return out;
}

double GridDensity::entropy() const {
    KahanSum s;
    const double h = grid_.spacing();
    double prev = 0.0;
    for (int i = 0; i < grid_.points; ++i) {
        const double q = density(i);
        const double cur = q > 0.0 ? q * log_q_[static_cast<std::size_t>(i)] : 0.0;
        if (i > 0) s.add(0.5 * h * (prev + cur));
        prev = cur;
    }
    return s.value();
}

std::vector<double> GridDensity::cdf() const {
    std::vector<double> out(static_cast<std::size_t>(grid_.points));
    KahanSum s;
    out[0] = 0.0;
    for (int i = 1; i < grid_.points; ++i) {
        const double inc = 0.5 * grid_.spacing() * (density(i - 1) + density(i));
        if (inc < 0.0 || !std::isfinite(inc))
            throw std::runtime_error("GridDensity::cdf: degenerate CDF increment");
        s.add(inc);
        out[static_cast<std::size_t>(i)] = s.value();
    }
    const double total = out.back();
    if (!(total > 0.0)) throw std::runtime_error("GridDensity::cdf: zero total mass");
    for (double& v : out) v /= total;
    out.back() = 1.0;
    return out;
}

double w2_1d(const GridDensity& a, const GridDensity& b) {
    check_same_grid(a, b, "w2_1d");
    const std::vector<double> qa = quantiles(a);
    const std::vector<double> qb = quantiles(b);
    KahanSum s;
    for (int i = 0; i < kQuantileLevels; ++i) {
        const double d = qa[static_cast<std::size_t>(i)] - qb[static_cast<std::size_t>(i)];
        s.add(d * d);
    }
    return std::sqrt(s.value() / kQuantileLevels);
}

GridDensity displacement_interpolate_1d(const GridDensity& a, const GridDensity& b, double t) {
    check_same_grid(a, b, "displacement_interpolate_1d");
    if (t < 0.0 || t > 1.0)
        throw std::invalid_argument("displacement_interpolate_1d: t must be in [0,1]");
    const std::vector<double> qa = quantiles(a);
    const std::vector<double> qb = quantiles(b);

    const Grid1D& grid = a.grid();
    const double h = grid.spacing();
    std::vector<double> mass(static_cast<std::size_t>(grid.points), 0.0);

    const auto point_deposit = [&](double x, double m) {
        if (x < grid.lo - 1e-12 || x > grid.hi + 1e-12)
            throw std::runtime_error("displacement_interpolate_1d: mass escapes the grid domain");
        const double pos = std::clamp((x - grid.lo) / h, 0.0,
                                      static_cast<double>(grid.points - 1));
        const int left = std::min(static_cast<int>(pos), grid.points - 2);
        const double w = pos - left;
        mass[static_cast<std::size_t>(left)] += (1.0 - w) * m;
        mass[static_cast<std::size_t>(left) + 1] += w * m;
    };
    const auto interpolated = [&](int i) {
        return (1.0 - t) * qa[static_cast<std::size_t>(i)] + t * qb[static_cast<std::size_t>(i)];
    };

    // uniform segments of mass 1/M between consecutive midpoint quantiles,
    // deposited exactly against the linear node weights; the two half-mass
    // tail stubs collapse onto the extreme quantile positions
    const double segment_mass = 1.0 / kQuantileLevels;
    point_deposit(interpolated(0), 0.5 * segment_mass);
    point_deposit(interpolated(kQuantileLevels - 1), 0.5 * segment_mass);
    for (int i = 0; i + 1 < kQuantileLevels; ++i) {
        double lo = interpolated(i);
        double hi = interpolated(i + 1);
        if (lo < grid.lo - 1e-12 || hi > grid.hi + 1e-12)
            throw std::runtime_error("displacement_interpolate_1d: mass escapes the grid domain");
        lo = std::clamp(lo, grid.lo, grid.hi);
        hi = std::clamp(hi, grid.lo, grid.hi);
        if (hi - lo < 1e-300) {
            point_deposit(lo, segment_mass);
            continue;
        }
        const double density_value = segment_mass / (hi - lo);
        int cell = std::min(static_cast<int>((lo - grid.lo) / h), grid.points - 2);
        while (cell < grid.points - 1) {
            const double cell_lo = grid.node(cell);
            if (cell_lo >= hi) break;
            const double overlap_lo = std::max(lo, cell_lo);
            const double overlap_hi = std::min(hi, cell_lo + h);
            if (overlap_hi > overlap_lo) {
                const double alpha = (overlap_lo - cell_lo) / h;
                const double beta = (overlap_hi - cell_lo) / h;
                const double right_share = density_value * h * 0.5 * (beta * beta - alpha * alpha);
                const double total = density_value * (overlap_hi - overlap_lo);
                mass[static_cast<std::size_t>(cell)] += total - right_share;
                mass[static_cast<std::size_t>(cell) + 1] += right_share;
            }
            ++cell;
        }
    }
    // node mass -> density against trapezoid node weights (h/2 at the ends)
    std::vector<double> density(mass.size());
    for (int i = 0; i < grid.points; ++i) {
        const double weight = (i == 0 || i == grid.points - 1) ? 0.5 * h : h;
        density[static_cast<std::size_t>(i)] = mass[static_cast<std::size_t>(i)] / weight;
    }
    return GridDensity::from_linear(grid, density);
}

GridProduct::GridProduct(Grid1D grid, std::vector<GridDensity> factors, int max_moment_order)
    : grid_(grid), factors_(std::move(factors)), max_order_(std::max(max_moment_order, 2)),
      updated_(factors_.size(), 0) {
    if (factors_.empty()) throw std::invalid_argument("GridProduct: need at least one factor");
    for (const GridDensity& f : factors_) check_same_grid(f, factors_.front(), "GridProduct");
    for (int k = 0; k < factor_count(); ++k) refresh_moments(k);
}

double GridProduct::moment(int k, int p) const { return moments_.moment(k, p); }

bool GridProduct::all_updated() const {
    for (char u : updated_)
        if (!u) return false;
    return true;
}

void GridProduct::refresh_moments(int k) {
    moments_.set(k, factors_[static_cast<std::size_t>(k)].moments(max_order_));
}

void GridProduct::replace_factor(int k, GridDensity density, bool mark_updated) {
    check_same_grid(density, factors_.front(), "replace_factor");
    factors_[static_cast<std::size_t>(k)] = std::move(density);
    refresh_moments(k);
    if (mark_updated) updated_[static_cast<std::size_t>(k)] = 1;
}

void GridProduct::apply_cavi_update(int k, const Potential& pot, const BlockStructure& blocks) {
    if (k < 0 || k >= factor_count())
        throw std::out_of_range("apply_cavi_update: factor index out of range");
    const std::vector<double> poly = pot.conditional_polynomial(k, moments_, blocks);
    std::vector<double> log_values(static_cast<std::size_t>(grid_.points));
    for (int i = 0; i < grid_.points; ++i) {
        const double x = grid_.node(i);
        // Horner evaluation of -poly
        double v = 0.0;
        for (std::size_t p = poly.size(); p-- > 0;) v = v * x + poly[p];
        log_values[static_cast<std::size_t>(i)] = -v;
    }
    replace_factor(k, GridDensity::normalize(grid_, std::move(log_values)), /*mark_updated=*/true);
}

double GridProduct::free_energy(const Potential& pot) const {
    if (pot.dimension() != factor_count())
        throw std::invalid_argument("free_energy: potential dimension does not match factors");
    KahanSum psi;
    for (const GridDensity& f : factors_) psi.add(f.entropy());
    // E[U] through independent-factor moments
    const Matrix& q = pot.quadratic();
    for (int i = 0; i < factor_count(); ++i) {
        psi.add(0.5 * q(i, i) * moment(i, 2));
        psi.add(pot.linear()[static_cast<std::size_t>(i)] * moment(i, 1));
        for (int j = i + 1; j < factor_count(); ++j)
            if (q(i, j) != 0.0) psi.add(q(i, j) * moment(i, 1) * moment(j, 1));
    }
    for (const Monomial& m : pot.monomials()) {
        double term = m.coeff;
        for (const auto& [idx, e] : m.powers) term *= moment(idx, e);
        psi.add(term);
    }
    return psi.value();
}

double GridProduct::second_moment_total() const {
    KahanSum s;
    for (int k = 0; k < factor_count(); ++k) s.add(moment(k, 2));
    return s.value();
}

double w2l_grid(const GridProduct& a, const GridProduct& b, const std::vector<double>& weights) {
    if (a.factor_count() != b.factor_count())
        throw std::invalid_argument("w2l_grid: factor count mismatch");
    if (static_cast<int>(weights.size()) != a.factor_count())
        throw std::invalid_argument("w2l_grid: need one weight per factor");
    KahanSum s;
    for (int k = 0; k < a.factor_count(); ++k) {
        const double d = w2_1d(a.factor(k), b.factor(k));
        s.add(weights[static_cast<std::size_t>(k)] * d * d);
    }
    return std::sqrt(std::max(s.value(), 0.0));
}

GridProduct gaussian_grid_product(const Grid1D& grid, const Vector& means,
                                  const Vector& variances, int max_moment_order) {
    if (means.size() != variances.size())
        throw std::invalid_argument("gaussian_grid_product: means/variances length mismatch");
    std::vector<GridDensity> factors;
    factors.reserve(means.size());
    for (std::size_t k = 0; k < means.size(); ++k) {
        if (!(variances[k] > 0.0))
            throw std::invalid_argument("gaussian_grid_product: variances must be positive");
        std::vector<double> log_values(static_cast<std::size_t>(grid.points));
        for (int i = 0; i < grid.points; ++i) {
            const double z = grid.node(i) - means[k];
            log_values[static_cast<std::size_t>(i)] = -0.5 * z * z / variances[k];
        }
        factors.push_back(GridDensity::normalize(grid, std::move(log_values)));
    }
    return GridProduct(grid, std::move(factors), max_moment_order);
}

GridProduct one_sweep_from_point_grid(const Potential& pot, const BlockStructure& blocks,
                                      const Grid1D& grid, const Vector& x) {
    if (!blocks.all_scalar())
        throw std::invalid_argument("one_sweep_from_point_grid: all blocks must have size 1");
    if (static_cast<int>(x.size()) != blocks.dimension())
        throw std::invalid_argument("one_sweep_from_point_grid: point dimension mismatch");
    const int max_order = std::max(2, pot.max_monomial_degree());
    MomentTable table = MomentTable::point_mass(x, max_order);
    std::vector<GridDensity> factors;
    factors.reserve(x.size());
    for (int k = 0; k < blocks.dimension(); ++k) {
        const std::vector<double> poly = pot.conditional_polynomial(k, table, blocks);
        std::vector<double> log_values(static_cast<std::size_t>(grid.points));
        for (int i = 0; i < grid.points; ++i) {
            const double xi = grid.node(i);
            double v = 0.0;
            for (std::size_t p = poly.size(); p-- > 0;) v = v * xi + poly[p];
            log_values[static_cast<std::size_t>(i)] = -v;
        }
        GridDensity f = GridDensity::normalize(grid, std::move(log_values));
        table.set(k, f.moments(max_order));
        factors.push_back(std::move(f));
    }
    GridProduct state(grid, std::move(factors), max_order);
    for (int k = 0; k < state.factor_count(); ++k)
        state.replace_factor(k, state.factor(k), /*mark_updated=*/true);
    return state;
}

ReferenceSolution solve_reference(const Potential& pot, const BlockStructure& blocks,
                                  const GridProduct& init, const std::vector<double>& weights,
                                  double tol, int max_sweeps) {
    GridProduct state = init;
    double movement = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        const GridProduct before = state;
        for (int k = 0; k < state.factor_count(); ++k) state.apply_cavi_update(k, pot, blocks);
        movement = w2l_grid(before, state, weights);
        if (movement < tol) {
            const double psi = state.free_energy(pot);
            return ReferenceSolution{std::move(state), psi, sweep, movement};
        }
    }
    throw std::runtime_error("solve_reference: no convergence within " +
                             std::to_string(max_sweeps) +
                             " sweeps (final movement " + std::to_string(movement) + ")");
}

}  // namespace mfcavi
