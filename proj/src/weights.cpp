#include "declab/weights.hpp"

#include <cmath>

#include "declab/gridfield.hpp"

namespace declab {

double pow_real(double x, double e) {
    const double r = std::round(e);
    if (std::abs(e - r) < 1e-12 && r >= 0.0 && r <= 64.0) {
        double acc = 1.0;
        double base = x;
        auto k = std::uint64_t(r);
        while (k) {
            if (k & 1) acc *= base;
            base *= base;
            k >>= 1;
        }
        return acc;
    }
    return std::pow(x, e);
}

double weight_value(const WeightSpec& w, std::span<const double> x) {
    if (w.indicator) return w.cube.contains(x) ? 1.0 : 0.0;
    double d2 = 0.0;
    for (int a = 0; a < w.cube.dim(); ++a) {
        const double dx = x[static_cast<std::size_t>(a)] - w.cube.center[static_cast<std::size_t>(a)];
        d2 += dx * dx;
    }
    const double base = 1.0 + std::sqrt(d2) / w.cube.side;
    return 1.0 / pow_real(base, w.exponent);
}

std::int64_t SpatialGrid::pts_per_axis() const {
    const double n = padding * cube.side / spacing;
    const std::int64_t k = std::llround(n);
    return k > 0 ? k : 1;
}

std::int64_t SpatialGrid::total() const {
    std::int64_t t = 1;
    for (int d = 0; d < dim(); ++d) t *= pts_per_axis();
    return t;
}

double SpatialGrid::origin(int axis) const {
    return cube.center[static_cast<std::size_t>(axis)] - padding * cube.side / 2.0;
}

double SpatialGrid::cell_measure() const {
    double m = 1.0;
    for (int d = 0; d < dim(); ++d) m *= spacing;
    return m;
}

SpatialGrid make_grid(const SpatialCube& cube, const GridSettings& s) {
    return SpatialGrid{cube, s.padding, s.spacing};
}

IndexBox cover_box(const SpatialGrid& grid, const SpatialCube& sub, double pad) {
    IndexBox box;
    box.dim = grid.dim();
    const std::int64_t n = grid.pts_per_axis();
    for (int a = 0; a < box.dim; ++a) {
        const double x0 = grid.origin(a);
        const double lo = sub.center[static_cast<std::size_t>(a)] - pad * sub.side / 2.0;
        const double hi = sub.center[static_cast<std::size_t>(a)] + pad * sub.side / 2.0;
        std::int64_t i0 = std::int64_t(std::ceil((lo - x0) / grid.spacing - 0.5));
        std::int64_t i1 = std::int64_t(std::floor((hi - x0) / grid.spacing - 0.5)) + 1;
        box.lo[static_cast<std::size_t>(a)] = std::max<std::int64_t>(0, i0);
        box.hi[static_cast<std::size_t>(a)] = std::min<std::int64_t>(n, i1);
    }
    return box;
}

IndexBox full_box(const SpatialGrid& grid) {
    IndexBox box;
    box.dim = grid.dim();
    for (int a = 0; a < box.dim; ++a) {
        box.lo[static_cast<std::size_t>(a)] = 0;
        box.hi[static_cast<std::size_t>(a)] = grid.pts_per_axis();
    }
    return box;
}

double weighted_norm(std::span<const cd> values, const SpatialGrid& grid, double p,
                     const WeightSpec& w, bool normalized) {
    if (p < 1.0) throw DomainError("norm exponent p must be >= 1");
    if (std::int64_t(values.size()) != grid.total())
        throw DomainError("sample count does not match the grid");
    const int d = grid.dim();
    const std::int64_t n = grid.pts_per_axis();
    const std::int64_t rows = grid.total() / n;
    const double half_p = p / 2.0;

    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    // Row partial sums keep the accumulation well conditioned on big grids.
    double total = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) {
        std::int64_t rest = r;
        for (int a = d - 2; a >= 0; --a) {
            x[static_cast<std::size_t>(a)] = grid.coord(a, rest % n);
            rest /= n;
        }
        double row = 0.0;
        const std::int64_t base = r * n;
        for (std::int64_t i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(d - 1)] = grid.coord(d - 1, i);
            const cd v = values[static_cast<std::size_t>(base + i)];
            const double a2 = v.real() * v.real() + v.imag() * v.imag();
            row += pow_real(a2, half_p) * weight_value(w, x);
        }
        total += row;
    }
    total *= grid.cell_measure();
    if (normalized) total /= std::pow(grid.cube.side, d);
    return std::pow(total, 1.0 / p);
}

CoverBounds weight_cover_bounds(const SpatialCube& B, double sub_side, double E) {
    const auto subs = spatial_partition(B, sub_side);
    std::vector<WeightSpec> ws;
    ws.reserve(subs.size());
    for (const auto& s : subs) ws.push_back(WeightSpec{s, E, false});
    const WeightSpec wB{B, E, false};
    const int d = B.dim();

    auto sum_at = [&](std::span<const double> x) {
        double s = 0.0;
        for (const auto& w : ws) s += weight_value(w, x);
        return s;
    };

    // c_low: minimum of the subcube weight sum over a lattice inside B.
    // Sample at the scale of the small cubes (their weight varies at R').
    const double step_low = sub_side / 8.0;
    const std::int64_t n_low = std::int64_t(std::llround(B.side / step_low)) + 1;
    double c_low = -1.0;
    {
        std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
        std::vector<double> x(static_cast<std::size_t>(d));
        while (true) {
            for (int a = 0; a < d; ++a)
                x[static_cast<std::size_t>(a)] = B.center[static_cast<std::size_t>(a)] - B.side / 2 +
                                    double(idx[static_cast<std::size_t>(a)]) * step_low;
            const double s = sum_at(x);
            if (c_low < 0.0 || s < c_low) c_low = s;
            int axis = d - 1;
            while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == n_low) {
                idx[static_cast<std::size_t>(axis)] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
    }

    // c_high: maximum of (sum of subcube weights) / w_B over a padded lattice.
    const double pad = 4.0;
    const double step_high = sub_side / 4.0;
    const std::int64_t n_high = std::int64_t(std::llround(pad * B.side / step_high)) + 1;
    double c_high = 0.0;
    {
        std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
        std::vector<double> x(static_cast<std::size_t>(d));
        while (true) {
            for (int a = 0; a < d; ++a)
                x[static_cast<std::size_t>(a)] = B.center[static_cast<std::size_t>(a)] - pad * B.side / 2 +
                                    double(idx[static_cast<std::size_t>(a)]) * step_high;
            const double ratio = sum_at(x) / weight_value(wB, x);
            if (ratio > c_high) c_high = ratio;
            int axis = d - 1;
            while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == n_high) {
                idx[static_cast<std::size_t>(axis)] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
    }

    return CoverBounds{c_low, c_high};
}

double reverse_holder_check(const GridFunction& g, const SpatialCube& B, double p, double q,
                            double E, const GridSettings& settings) {
    if (q < p || p < 1.0) throw DomainError("need q >= p >= 1");
    const double dual = g.cube.side.to_double() * B.side;
    if (std::abs(dual - 1.0) > 1e-9)
        throw DomainError("reverse Holder requires side(Q) * side(B) == 1");

    const SpatialGrid grid = make_grid(B, settings);
    const auto field = eval_field(g, grid);

    const double lhs = weighted_norm(field, grid, q, WeightSpec{B, E, false}, true);
    const double rhs = weighted_norm(field, grid, p, WeightSpec{B, E * p / q, false}, true);
    return lhs / rhs;
}

double weight_tail_fraction(const WeightSpec& w, double padding) {
    // Outside rho*B every point has |x - c| >= rho*R/2, so with u = |x-c|/R
    //   integral_tail <= omega_{n-1} R^n Int_{rho/2}^inf (1+u)^{-E} u^{n-1} du
    //                 <= omega_{n-1} R^n (1 + rho/2)^{n-E} / (E - n).
    // Normalizing by |B| = R^n gives an R-free bound.
    const int n = w.cube.dim();
    const double E = w.exponent;
    if (E <= n) return 1.0; // no decay margin; bound is vacuous
    static const double unit_sphere[5] = {0.0, 2.0, 2.0 * M_PI, 4.0 * M_PI, 2.0 * M_PI * M_PI};
    const double omega = n <= 4 ? unit_sphere[n] : 2.0 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);
    return omega * std::pow(1.0 + padding / 2.0, double(n) - E) / (E - double(n));
}

} // namespace declab
