#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "declab/gridfield.hpp"

namespace declab {

/// Norm convention for ratio functionals:
///  - weighted: L^p(w_{B,E}) Riemann sums over the padded grid of B;
///  - period_box: unweighted L^p over the exact torus [0,R)^{n-1} at a fixed
///    x_n slice, where lattice-model frequencies are exactly orthogonal.
enum class NormMode { weighted, period_box };

/// One decoupling experiment: dimension, Lebesgue index, weight exponent,
/// scale delta = 4^{-k} (so sqrt(delta) is dyadic), the spatial cube of side
/// 1/delta centered at the origin, and the cap scale (default sqrt(delta)).
struct DecouplingInstance {
    int n = 2;
    double p = 4.0;
    double E = 8.0;
    int delta_exp = 1;
    Dyadic cap_scale;            // zero means the default 2^{-delta_exp}
    int samples_per_cap = 8;
    GridSettings grid;
    NormMode mode = NormMode::weighted;
    double period_slice = 0.0;

    double delta() const;
    double big_r() const;                  // 4^{delta_exp}
    Dyadic cap() const;
    SpatialCube box() const;               // side 1/delta, centered at 0
    std::vector<FrequencyCube> caps() const;
    std::int64_t caps_per_axis() const;
    int trial_samples_per_axis() const;    // caps_per_axis * samples_per_cap

    void validate() const;
};

/// ||E g||_{L^p(w_B)} over the l^2 sum of cap extension norms, both sides on
/// one grid. Throws DegenerateInputError when g vanishes.
double decoupling_ratio(const GridFunction& g, const DecouplingInstance& inst);

/// L^2 mechanism check: caps at scale 1/side(B) (not sqrt(delta)).
double l2_decoupling_check(const GridFunction& g, const FrequencyCube& Q, const SpatialCube& B,
                           double E, NormMode mode = NormMode::weighted,
                           const GridSettings& settings = {}, double period_slice = 0.0);

/// A frequency point just above the paraboloid: (xi, |xi|^2 + t).
struct NeighborhoodPoint {
    std::vector<double> xi;
    double t = 0.0;
    cd amplitude{1.0, 0.0};
};

/// Decoupling ratio for an exponential sum supported in the 1/R neighborhood
/// of the paraboloid, points binned into caps of side R^{-1/2}.
double neighborhood_ratio(const std::vector<NeighborhoodPoint>& points, double R, double p,
                          double E, const SpatialCube& B, const GridSettings& settings = {});

/// Randomized lower-bound search for the decoupling constant.
///
/// The trial family is fixed: index 0 is the constant function, index 1 a
/// single-cap indicator, even indices >= 2 carry independent unimodular
/// phases per cap, odd indices are full complex-Gaussian draws. One greedy
/// sweep then re-randomizes each cap phase in order, keeping improvements.
/// Deterministic given (instance, trials, seed) for any worker count.
struct EstimateResult {
    double best_ratio = 0.0;
    std::string argmax_kind;
    int best_trial = -1;
    int greedy_accepts = 0;
};

EstimateResult estimate_constant(const DecouplingInstance& inst, int trials, std::uint64_t seed,
                                 int workers = 0);

/// Forced single-trial estimate (e.g. the constant function for the
/// supercritical contrast probe); no greedy pass.
double forced_ratio(const DecouplingInstance& inst, const TestFunctionSpec& spec);

struct SweepRow {
    int delta_exp = 0;
    double best_ratio = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
    std::string argmax_kind;
    double wall_ms = 0.0; // logged in the manifest; data files carry 0
};

struct EtaFit {
    double eta_hat = 0.0;
    double residual = 0.0;
};

struct DecouplingReport {
    int n = 2;
    double p = 0.0;
    double E = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
    std::vector<SweepRow> rows;
    std::optional<EtaFit> fit; // present when >= 3 scales
};

struct SweepSpec {
    int n = 2;
    double p = 4.0;
    double E = 8.0;
    std::vector<int> delta_exps;
    int trials = 50;
    std::uint64_t seed = 0;
    int samples_per_cap = 8;
    GridSettings grid;
    int workers = 0;
    std::optional<TestFunctionSpec> forced; // bypasses the search when set
};

DecouplingReport scale_sweep(const SweepSpec& spec);

/// Least-squares slope of log(ratio) against log(1/delta); residual is the
/// RMS of the fit. Rows with ratio <= 0 are rejected; needs >= 3 rows.
EtaFit fit_eta(const std::vector<std::pair<double, double>>& delta_ratio_rows);
EtaFit fit_eta(const std::vector<SweepRow>& rows);

} // namespace declab
