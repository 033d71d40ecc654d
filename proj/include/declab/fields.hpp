#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "declab/geometry.hpp"

#include "json.hpp"

namespace declab {

using cd = std::complex<double>;

/// Sampling model for a GridFunction.
///  - continuum: samples at cell centers, extension sums carry the cell
///    measure (side/M)^(n-1) as quadrature weight (midpoint rule);
///  - lattice: frequencies sit exactly on (side/M) Z^(n-1) starting at the
///    corner, unit weights -- a pure exponential sum. With one frequency per
///    cap this turns L^2 orthogonality over a full period into an identity.
enum class FieldModel { continuum, lattice };

/// Complex samples of g on a uniform grid over a frequency cube; the test
/// function object every functional consumes. Values are stored in
/// lexicographic cell order (last axis fastest).
struct GridFunction {
    FrequencyCube cube;
    int samples_per_axis = 1;
    FieldModel model = FieldModel::continuum;
    std::vector<cd> values;

    int dim() const { return cube.dim(); }
    std::int64_t cell_count() const {
        std::int64_t c = 1;
        for (int d = 0; d < dim(); ++d) c *= samples_per_axis;
        return c;
    }

    /// Exact frequency of flat cell index (cell centers in continuum mode,
    /// lattice points in lattice mode).
    std::vector<Dyadic> freq_exact(std::int64_t flat) const;
    std::vector<double> freq(std::int64_t flat) const;

    /// Quadrature weight per cell.
    double cell_weight() const;

    bool is_zero() const;
};

GridFunction make_constant(const FrequencyCube& Q, int M);
GridFunction make_cap_indicator(const FrequencyCube& Q, int M, const FrequencyCube& cap);
GridFunction make_random_gaussian(const FrequencyCube& Q, int M, std::uint64_t seed);
GridFunction make_point_mass_lattice(const FrequencyCube& Q, int M, std::uint64_t seed);
/// Unimodular constant with an independent random phase on each cap of the
/// given scale.
GridFunction make_cap_phases(const FrequencyCube& Q, int M, Dyadic cap_scale, std::uint64_t seed);

/// Config-facing description of a test function.
struct TestFunctionSpec {
    enum class Kind { constant, single_cap, random_gaussian, point_mass_lattice, cap_phases };
    Kind kind = Kind::constant;
    std::uint64_t seed = 0;
    FrequencyCube cap;     // single_cap only
    Dyadic cap_scale;      // cap_phases only
};

GridFunction make_test_function(const TestFunctionSpec& spec, const FrequencyCube& Q, int M);

struct SpatialPointSet {
    enum class Provenance { lattice_of_cube, explicit_points };
    std::vector<std::vector<double>> points;
    Provenance provenance = Provenance::explicit_points;
};

enum class EvalMethod {
    direct,    // one exponential per cell, lexicographic summation
    separable  // per-axis phase tables multiplied per cell
};

/// E_Q g at each point: sum over cells of g(xi) e(xi . x_bar + |xi|^2 x_n)
/// times the cell weight, with e(z) = exp(2 pi i z). Deterministic
/// summation order (lexicographic cells). Empty point set gives empty output.
std::vector<cd> evaluate_extension(const GridFunction& g, const SpatialPointSet& points,
                                   EvalMethod method = EvalMethod::separable);

/// Restriction of g to the cells whose centers lie in the cap (other cells
/// zeroed); cap must be a dyadic subcube aligned with the sample grid.
GridFunction restrict_to_cap(const GridFunction& g, const FrequencyCube& cap);

/// Both sides of the parabolic rescaling identity
///   |E_Qt g(x)| = sigma^{(n-1)/2} |E_{L(Qt)} (g o L^{-1}) (T x)|
/// for Qt = g.cube inside Q, together with their relative difference.
/// Continuum model only (the identity is about integrals).
struct CovarianceCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double relerr = 0.0;
};

CovarianceCheck rescaling_covariance_check(const GridFunction& g, const FrequencyCube& Q,
                                           std::span<const double> x);

/// e(turns) on the unit circle with exact fractional reduction.
cd unit_phase_turns(double turns);

nlohmann::ordered_json to_json(const GridFunction& g);
GridFunction grid_function_from_json(const nlohmann::json& j);

} // namespace declab
