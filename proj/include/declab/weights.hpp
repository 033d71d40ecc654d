#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "declab/fields.hpp"
#include "declab/geometry.hpp"

namespace declab {

/// The weight w_{B,E}(x) = (1 + |x - c_B| / R)^{-E} standing in for the
/// indicator of B. `indicator` switches to 1_B itself (the E -> infinity
/// surrogate used by a few oracles).
struct WeightSpec {
    SpatialCube cube;
    double exponent = 8.0;
    bool indicator = false;
};

double weight_value(const WeightSpec& w, std::span<const double> x);

struct GridSettings {
    double padding = 4.0; // rho: integrate over rho * B
    double spacing = 0.5; // dx: resolves every frequency in [0,1]^{n-1} x [0,2]
};

/// Midpoint lattice over the padded cube rho*B, centered on the cube center.
/// Point enumeration is lexicographic with the last axis fastest.
struct SpatialGrid {
    SpatialCube cube;
    double padding = 4.0;
    double spacing = 0.5;

    int dim() const { return cube.dim(); }
    std::int64_t pts_per_axis() const;
    std::int64_t total() const;
    double origin(int axis) const; // left edge of the padded cube
    double coord(int axis, std::int64_t i) const {
        return origin(axis) + (double(i) + 0.5) * spacing;
    }
    double cell_measure() const;
};

SpatialGrid make_grid(const SpatialCube& cube, const GridSettings& s);

/// Half-open index ranges per axis into a SpatialGrid.
struct IndexBox {
    std::array<std::int64_t, 4> lo{};
    std::array<std::int64_t, 4> hi{};
    int dim = 0;
    std::int64_t count() const {
        std::int64_t c = 1;
        for (int d = 0; d < dim; ++d) c *= (hi[std::size_t(d)] - lo[std::size_t(d)]);
        return c;
    }
};

/// Grid indices covering pad * sub (clamped to the grid).
IndexBox cover_box(const SpatialGrid& grid, const SpatialCube& sub, double pad);
IndexBox full_box(const SpatialGrid& grid);

/// Riemann sum norm (sum |f|^p w dx^n)^(1/p); `normalized` divides by |B|
/// inside the root (the averaged norm). Throws on p < 1.
double weighted_norm(std::span<const cd> values, const SpatialGrid& grid, double p,
                     const WeightSpec& w, bool normalized);

/// Measured constants of the cover bounds 1_B <~ sum_Delta w_Delta <~ w_B:
///   c_low  = min over a lattice in B of sum of subcube weights,
///   c_high = max over a padded lattice of that sum divided by w_B.
struct CoverBounds {
    double c_low = 0.0;
    double c_high = 0.0;
};

CoverBounds weight_cover_bounds(const SpatialCube& B, double sub_side, double E);

/// lhs/rhs of the reverse Holder comparison for a single cap at dual scale:
/// averaged L^q norm against weight exponent E versus averaged L^p norm
/// against exponent E p / q. Requires side(Q) * side(B) == 1 and q >= p >= 1.
double reverse_holder_check(const GridFunction& g, const SpatialCube& B, double p, double q,
                            double E, const GridSettings& settings = {});

/// Analytic bound for the weight mass outside the padded cube, relative to
/// the mass inside; reported in verbose mode to certify the truncation.
double weight_tail_fraction(const WeightSpec& w, double padding);

/// x^e for integral e via binary powering, std::pow otherwise.
double pow_real(double x, double e);

} // namespace declab
