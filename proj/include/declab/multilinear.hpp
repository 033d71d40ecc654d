#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "declab/decoupling.hpp"
#include "declab/gridfield.hpp"

namespace declab {

/// Interpolation weight (pn - p - 2n) / ((p-2)(n-1)) governing the L^2/L^p
/// split of the iteration; 0 on [2, 2n/(n-1)] by convention, 1/2 exactly at
/// the critical index 2(n+1)/(n-1). Throws on p < 2.
double kappa(double p, int n);

/// n transverse frequency cubes of equal side mu with their certified lower
/// bound nu, the iteration depth m, and the ambient scale delta.
struct TransverseConfig {
    std::vector<FrequencyCube> cubes;
    double nu = 0.0;
    int m = 1;
    Dyadic delta;

    int n() const { return int(cubes.size()); }
    Dyadic mu() const { return cubes.empty() ? Dyadic() : cubes.front().side; }

    /// Iteration-side requirements: equal sides, nu > 0, mu >= delta.
    void validate_for_iteration() const;
    /// Constant-side requirement in addition: mu >= delta^(2^-m).
    void validate_for_constant() const;
};

/// Geometric mean over i of the l^2 sums of cap extension norms,
///   D_t(q, B^r, g) = [prod_i (sum_{caps of side delta^q in Q_i}
///                      ||E_cap g||_{L^t_sharp(w_{B^r})}^2)^{1/2}]^{1/n}.
double multilinear_D(double t, int q_level, const SpatialCube& Br, const GridFunction& g,
                     const TransverseConfig& cfg, double E, const GridSettings& settings = {});

/// Power average of D_2 over the partition of B^r into cubes of side
/// delta^{-s}: A_p(q, B^r, s, g); equals D_2(q, B^r, g) when the partition
/// is trivial (s = r).
double multilinear_A(double p, int q_level, const SpatialCube& Br, int s_level,
                     const GridFunction& g, const TransverseConfig& cfg, double E,
                     const GridSettings& settings = {});

/// A rectangular box with n-1 sides R^(1/2) and one side R along `direction`.
struct Tile {
    std::vector<double> center;
    std::vector<double> direction; // unit
    double short_side = 1.0;       // R^(1/2)
    double long_side = 1.0;        // R
    double amplitude = 1.0;        // c_P >= 0

    int dim() const { return int(center.size()); }
    bool contains(std::span<const double> x) const;
    /// Orthonormal frame with the long axis first.
    std::vector<std::vector<double>> frame() const;
};

Tile make_tile(std::vector<double> center, std::vector<double> direction, double R,
               double amplitude = 1.0);

struct KakeyaResult {
    double lhs = 0.0;        // avg over the ambient cube of prod F_j^{1/(n-1)}
    double rhs = 0.0;        // prod of (avg F_j)^{1/(n-1)}
    double ratio = 0.0;      // lhs/rhs, 0 when 0/0
    double grid_spacing = 0.0;
};

/// Overlap functional of the transverse tile families, rasterized at spacing
/// R^(1/2)/4 over an ambient cube of side ambient_factor * R centered at the
/// origin. Checks pairwise-family direction transversality >= nu and tile
/// containment; names the offending tuple on failure.
KakeyaResult kakeya_check(const std::vector<std::vector<Tile>>& families, double R, double nu,
                          double ambient_factor = 4.0, int workers = 0);

struct BallInflationResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

/// Spatial-scale upgrade comparison on a cube of side delta^{-2}: the
/// average over the delta^{-1} subcubes of the cap-norm product at exponent
/// p(n-1)/n against the same expression on the whole cube.
BallInflationResult ball_inflation_check(const GridFunction& g, Dyadic delta, double p,
                                         const TransverseConfig& cfg, const SpatialCube& B,
                                         double E, const GridSettings& settings = {});

/// Broad--narrow trichotomy of a cap-constant map over D_{1/K}([0,1]^2):
/// a single dominant cap, a transverse triple, or a line strip holding all
/// significant caps. Scenarios are tested in that order.
enum class Scenario { single_cap, transverse_triple, line_strip };

struct Classification {
    Scenario scenario = Scenario::single_cap;
    std::size_t alpha_star = 0;               // index into the input caps
    std::vector<std::size_t> s_big;           // significant caps
    std::array<std::size_t, 3> triple{};      // transverse witnesses
    std::array<std::size_t, 2> line_caps{};   // centers defining L
    double strip_halfwidth = 0.0;             // C/K
};

Classification broad_narrow_classify(const std::vector<FrequencyCube>& caps,
                                     const std::vector<double>& cap_constants, double K,
                                     double C_threshold = 4.0);

/// Per-level record of the multiscale inequality chain
///   A_p(1, B^{2^m}, 1, g) <~ delta^{-eps} * A_p(2^m, ., 2^m)^{(1-kappa)^m}
///                             * prod_{l<m} D_p(2^l, .)^{kappa (1-kappa)^l},
/// obtained by applying the one-step inequality m times on the cube of side
/// delta^{-2^m}. The implied constant is lhs over the assembled product.
struct LedgerLevel {
    int l = 0;
    double A = 0.0;
    double D = 0.0;
};

struct IterationLedger {
    double kappa = 0.0;
    std::vector<LedgerLevel> levels; // l = 0 .. m-1
    double top_A = 0.0;              // A_p(2^m, B^{2^m}, 2^m, g) = D_2(2^m, .)
    double lhs = 0.0;                // A_p(1, B^{2^m}, 1, g)
    double rhs = 0.0;                // assembled product
    double implied_constant = 0.0;
    int m = 1;
    double p = 0.0;
    double E = 0.0;
};

IterationLedger multiscale_inequality_check(const GridFunction& g, Dyadic delta, double p, int m,
                                            const TransverseConfig& cfg, double E,
                                            const GridSettings& settings = {});

/// Right-hand side of the bootstrap inequality
///   (n-1)/2 >= eta * ([2(1-kappa_p)]^m - 2 kappa_p) / (1 - 2 kappa_p),
/// with the removable singularity at kappa_p = 1/2 evaluated as eta*(m+1).
double bootstrap_bound(double eta, int m, double p, int n);

/// Paired linear / multilinear constant estimation over a delta list.
struct CompareRow {
    int delta_exp = 0;
    double linear_best = 0.0;
    std::string linear_argmax;
    double multilinear_best = 0.0;
    std::string multilinear_argmax;
    double nu = 0.0;
    double mu = 0.0;
};

struct CompareSpec {
    int n = 2;
    double p = 4.0;
    double E = 8.0;
    std::vector<int> delta_exps;
    int trials = 50;
    std::uint64_t seed = 0;
    int m = 1;
    int samples_per_cap = 8;
    GridSettings grid;
    int workers = 0;
    /// Cubes for the transverse tuple; empty selects the two (n=2) or three
    /// (n=3) extreme caps of the sqrt(delta) partition per row.
    std::vector<FrequencyCube> cubes;
};

std::vector<CompareRow> linear_vs_multilinear_report(const CompareSpec& spec);

/// The multilinear functional of one g for a fixed configuration: the
/// Delta-partition product average over the l^2 cap sums (weights 10E on the
/// left, E on the right).
double multilinear_ratio(const GridFunction& g, const DecouplingInstance& inst,
                         const TransverseConfig& cfg);

} // namespace declab
