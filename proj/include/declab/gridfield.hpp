#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "declab/fields.hpp"
#include "declab/weights.hpp"

namespace declab {

/// Uniform evaluation lattice; the last axis is x_n. Weighted grids come
/// from SpatialGrid, the period-box form fixes x_n to a single slice.
struct EvalAxis {
    double x0 = 0.0;
    double step = 1.0;
    std::int64_t count = 1;
    double at(std::int64_t i) const { return x0 + double(i) * step; }
};

struct EvalGrid {
    std::vector<EvalAxis> axis;
    double cell_measure = 1.0;

    int space_dim() const { return int(axis.size()); }
    std::int64_t xn_count() const { return axis.back().count; }
    std::int64_t total() const {
        std::int64_t t = 1;
        for (const auto& a : axis) t *= a.count;
        return t;
    }
};

EvalGrid eval_grid_from(const SpatialGrid& grid);

/// Unweighted torus lattice over [0, R)^(n-1) at a fixed x_n slice, spacing
/// `spacing` (R / spacing points per axis); cell measure spacing^(n-1).
/// Distinct lattice frequencies in (1/R) Z^{n-1} are exactly orthogonal on it.
EvalGrid period_box_grid(int space_dim, double R, double spacing, double xn_slice);

/// A finite family of plane-wave terms  e(freq . x_bar + lift * x_n).
struct ExpBasis {
    int freq_dim = 1;
    std::vector<double> freq;        // [k * freq_dim + d]
    std::vector<double> lift;        // [k]
    std::vector<Dyadic> freq_exact;  // same layout, or empty when unavailable
    int count() const { return int(lift.size()); }
};

/// Basis of the extension of g restricted to `cap` (all cells when null).
/// `cells` maps each term back to its flat index in g.values.
struct CapTerms {
    ExpBasis basis;
    std::vector<std::int64_t> cells;
};

CapTerms cap_terms(const GridFunction& g, const FrequencyCube* cap = nullptr);

/// Coefficients for cap_terms: cell values times the quadrature weight.
void coeffs_for(const GridFunction& g, const CapTerms& terms, std::vector<cd>& out);

/// Per-axis phase tables for one basis on one grid.
///
/// Along each x_bar axis the table e(xi * x(a)) repeats with an exact period
/// P whenever every xi * step is dyadic; fields are then evaluated on P
/// distinct rows only and indexed modulo P. P falls back to the axis length.
class FieldTables {
  public:
    FieldTables(const EvalGrid& grid, const ExpBasis& basis,
                std::span<const std::int64_t> forced_periods = {});
    ~FieldTables();
    FieldTables(FieldTables&&) noexcept;

    int terms() const;
    std::int64_t period(int xbar_axis) const;
    std::int64_t xn_count() const;

    /// freq_dim == 1: adds sign * field into out[r * Xn + b], r < period(0).
    void add_field_1d(std::span<const cd> coeffs, std::span<cd> out, double sign = 1.0) const;

    /// freq_dim == 2: calls fn(b, slab) for each x_n index with the compact
    /// slab field slab[r0 * P1 + r1]; the buffer is reused between calls.
    void for_each_slab_2d(std::span<const cd> coeffs,
                          const std::function<void(std::int64_t, const cd*)>& fn) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Exact table periods per x_bar axis for a basis on a grid (axis length
/// when no smaller exact period exists). Every multiple of these that stays
/// below the axis length is also a valid table period.
std::vector<std::int64_t> axis_periods(const EvalGrid& grid, const ExpBasis& basis);

/// Weight totals aggregated over the full x_bar axes modulo a period:
/// wagg[r * Xn + b] = sum over a == r (mod P0) of w(x(a), xn(b)) * measure.
/// One-dimensional frequency grids only.
std::vector<double> aggregate_weight_1d(const EvalGrid& grid, std::int64_t P0,
                                        const std::function<double(std::span<const double>)>& w);

/// sum_i wagg[i] * |field[i]|^p (field compact, same layout as wagg).
double compact_p_mass(std::span<const double> wagg, std::span<const cd> field, double p);

/// Full complex field of E_(g.cube) g on a SpatialGrid, row-major with the
/// last axis fastest. Small-grid convenience path.
std::vector<cd> eval_field(const GridFunction& g, const SpatialGrid& grid);

/// Full |field|^2 for one cap of g on a SpatialGrid (whole cube when null).
std::vector<double> eval_abs2(const GridFunction& g, const SpatialGrid& grid,
                              const FrequencyCube* cap = nullptr);

/// sum over an index box of w(x) * abs2[x]^(p/2) * measure (Riemann mass of
/// |f|^p against the weight, restricted to the box).
double box_p_mass(std::span<const double> abs2, const SpatialGrid& grid, const IndexBox& box,
                  const WeightSpec& w, double p);

} // namespace declab
