#include "declab/decoupling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "declab/parallel.hpp"
#include "declab/rng.hpp"

namespace declab {

double DecouplingInstance::delta() const { return std::pow(0.25, delta_exp); }
double DecouplingInstance::big_r() const { return std::pow(4.0, delta_exp); }

Dyadic DecouplingInstance::cap() const {
    return cap_scale.is_zero() ? Dyadic::pow2(-delta_exp) : cap_scale;
}

SpatialCube DecouplingInstance::box() const { return centered_cube(n, big_r()); }

std::vector<FrequencyCube> DecouplingInstance::caps() const {
    return dyadic_partition(unit_cube(n - 1), cap());
}

std::int64_t DecouplingInstance::caps_per_axis() const {
    return exact_ratio(Dyadic::from_int(1), cap());
}

int DecouplingInstance::trial_samples_per_axis() const {
    return int(caps_per_axis()) * samples_per_cap;
}

void DecouplingInstance::validate() const {
    std::vector<std::string> bad;
    if (n < 2 || n > 3) bad.push_back("n must be 2 or 3");
    if (p < 2.0) bad.push_back("p must be >= 2");
    if (E < 1.0) bad.push_back("E must be >= 1");
    if (delta_exp < 1) bad.push_back("delta must be 4^{-k} with k >= 1");
    if (!cap_scale.is_zero() && (!cap_scale.is_pow2() || cap_scale > Dyadic::from_int(1)))
        bad.push_back("cap scale must be in 2^{-N}");
    if (samples_per_cap < 1) bad.push_back("samples per cap must be >= 1");
    if (grid.spacing <= 0.0 || grid.spacing > 0.5)
        bad.push_back("grid spacing must be in (0, 1/2]");
    if (grid.padding < 1.0) bad.push_back("grid padding must be >= 1");
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

namespace {

struct GroupMass {
    std::vector<double> group; // sum w |E_q g|^p per cap
    double total = 0.0;        // sum w |E g|^p
};

/// Shared machinery for ratio functionals: one grid, one weight, one cap
/// family over a common frequency layout. Thread-safe; evaluation state
/// lives on the caller's stack.
class GroupedEval {
  public:
    GroupedEval(EvalGrid grid, std::vector<ExpBasis> bases,
                std::function<double(std::span<const double>)> weight)
        : grid_(std::move(grid)), fdim_(bases.empty() ? 1 : bases.front().freq_dim) {
        // One common period per axis keeps every compact buffer addable.
        std::vector<std::int64_t> forced(static_cast<std::size_t>(fdim_), 1);
        {
            ExpBasis all;
            all.freq_dim = fdim_;
            bool exact = true;
            for (const auto& b : bases) {
                all.freq.insert(all.freq.end(), b.freq.begin(), b.freq.end());
                all.lift.insert(all.lift.end(), b.lift.begin(), b.lift.end());
                if (b.freq_exact.empty() && b.count() > 0) exact = false;
                all.freq_exact.insert(all.freq_exact.end(), b.freq_exact.begin(),
                                      b.freq_exact.end());
            }
            if (!exact) all.freq_exact.clear();
            FieldTables probe(grid_, all);
            for (int a = 0; a < fdim_; ++a) forced[static_cast<std::size_t>(a)] = probe.period(a);
        }
        forced_ = forced;
        for (auto& b : bases) tables_.emplace_back(grid_, b, forced);

        if (fdim_ == 1) {
            wagg_ = aggregate_weight_1d(grid_, forced_[0], weight ? weight : constant_one);
        } else {
            // Small three-dimensional grids: keep the full weight array.
            wfull_.resize(static_cast<std::size_t>(grid_.total()));
            std::vector<double> x(3);
            std::size_t flat = 0;
            for (std::int64_t a0 = 0; a0 < grid_.axis[0].count; ++a0)
                for (std::int64_t a1 = 0; a1 < grid_.axis[1].count; ++a1)
                    for (std::int64_t b = 0; b < grid_.axis[2].count; ++b, ++flat) {
                        x[0] = grid_.axis[0].at(a0);
                        x[1] = grid_.axis[1].at(a1);
                        x[2] = grid_.axis[2].at(b);
                        wfull_[flat] = (weight ? weight(x) : 1.0) * grid_.cell_measure;
                    }
        }
    }

    int groups() const { return int(tables_.size()); }
    std::int64_t compact_size() const {
        std::int64_t s = grid_.xn_count();
        for (int a = 0; a < fdim_; ++a) s *= forced_[static_cast<std::size_t>(a)];
        return s;
    }

    GroupMass masses(const std::vector<std::vector<cd>>& coeffs, double p) const {
        GroupMass out;
        out.group.assign(tables_.size(), 0.0);
        if (fdim_ == 1) {
            std::vector<cd> total(static_cast<std::size_t>(compact_size()), cd(0, 0));
            std::vector<cd> capfield(static_cast<std::size_t>(compact_size()));
            for (std::size_t c = 0; c < tables_.size(); ++c) {
                std::fill(capfield.begin(), capfield.end(), cd(0, 0));
                tables_[c].add_field_1d(coeffs[c], capfield);
                out.group[c] = compact_p_mass(wagg_, capfield, p);
                for (std::size_t i = 0; i < total.size(); ++i) total[i] += capfield[i];
            }
            out.total = compact_p_mass(wagg_, total, p);
            return out;
        }
        // fdim == 2: accumulate a compact slab stack for the total field.
        const std::int64_t P0 = forced_[0];
        const std::int64_t P1 = forced_[1];
        const std::int64_t Xn = grid_.xn_count();
        std::vector<cd> stack(static_cast<std::size_t>(P0 * P1 * Xn), cd(0, 0));
        for (std::size_t c = 0; c < tables_.size(); ++c) {
            tables_[c].for_each_slab_2d(coeffs[c], [&](std::int64_t b, const cd* slab) {
                out.group[c] += slab_mass(slab, b, p);
                cd* dst = stack.data() + b * P0 * P1;
                for (std::int64_t i = 0; i < P0 * P1; ++i) dst[i] += slab[i];
            });
        }
        for (std::int64_t b = 0; b < Xn; ++b)
            out.total += slab_mass(stack.data() + b * P0 * P1, b, p);
        return out;
    }

    // Greedy helpers (1-d frequency path).
    void group_field(std::size_t c, std::span<const cd> coeffs, std::span<cd> out) const {
        std::fill(out.begin(), out.end(), cd(0, 0));
        tables_[c].add_field_1d(coeffs, out);
    }
    double field_mass(std::span<const cd> field, double p) const {
        return compact_p_mass(wagg_, field, p);
    }
    int freq_dim() const { return fdim_; }

  private:
    static double constant_one(std::span<const double>) { return 1.0; }

    double slab_mass(const cd* slab, std::int64_t b, double p) const {
        const std::int64_t X0 = grid_.axis[0].count;
        const std::int64_t X1 = grid_.axis[1].count;
        const std::int64_t Xn = grid_.axis[2].count;
        const std::int64_t P0 = forced_[0];
        const std::int64_t P1 = forced_[1];
        const double hp = p / 2.0;
        double m = 0.0;
        for (std::int64_t a0 = 0; a0 < X0; ++a0) {
            const cd* row = slab + (a0 % P0) * P1;
            const double* wrow = wfull_.data() + (a0 * X1) * Xn;
            double acc = 0.0;
            for (std::int64_t a1 = 0; a1 < X1; ++a1) {
                const cd v = row[a1 % P1];
                const double a2 = v.real() * v.real() + v.imag() * v.imag();
                acc += pow_real(a2, hp) * wrow[a1 * Xn + b];
            }
            m += acc;
        }
        return m;
    }

    EvalGrid grid_;
    int fdim_;
    std::vector<std::int64_t> forced_;
    std::vector<FieldTables> tables_;
    std::vector<double> wagg_;  // fdim == 1
    std::vector<double> wfull_; // fdim == 2, includes cell measure
};

EvalGrid instance_eval_grid(const DecouplingInstance& inst) {
    if (inst.mode == NormMode::period_box)
        return period_box_grid(inst.n, inst.big_r(), inst.grid.spacing, inst.period_slice);
    return eval_grid_from(make_grid(inst.box(), inst.grid));
}

std::function<double(std::span<const double>)> instance_weight(const DecouplingInstance& inst) {
    if (inst.mode == NormMode::period_box) return nullptr;
    const WeightSpec w{inst.box(), inst.E, false};
    return [w](std::span<const double> x) { return weight_value(w, x); };
}

double ratio_from_masses(const GroupMass& m, double p) {
    const double lhs = std::pow(m.total, 1.0 / p);
    double rhs2 = 0.0;
    for (const double gm : m.group) rhs2 += std::pow(gm, 2.0 / p);
    const double rhs = std::sqrt(rhs2);
    if (rhs == 0.0) throw DegenerateInputError("decoupling ratio of the zero function");
    return lhs / rhs;
}

/// Grouped evaluator plus the fixed trial-function layout of one instance.
class TrialEngine {
  public:
    explicit TrialEngine(const DecouplingInstance& inst)
        : inst_(inst), caps_(inst.caps()),
          layout_(make_constant(unit_cube(inst.n - 1), inst.trial_samples_per_axis())) {
        std::vector<ExpBasis> bases;
        for (const auto& cap : caps_) {
            terms_.push_back(cap_terms(layout_, &cap));
            bases.push_back(terms_.back().basis);
        }
        eval_ = std::make_unique<GroupedEval>(instance_eval_grid(inst), std::move(bases),
                                              instance_weight(inst));
    }

    const DecouplingInstance& inst() const { return inst_; }
    std::size_t cap_count() const { return caps_.size(); }

    GridFunction make_trial(int index, std::uint64_t seed, std::string& kind) const {
        const FrequencyCube domain = unit_cube(inst_.n - 1);
        const int M = inst_.trial_samples_per_axis();
        if (index == 0) {
            kind = "constant";
            return make_constant(domain, M);
        }
        if (index == 1) {
            kind = "single-cap";
            return make_cap_indicator(domain, M, caps_.front());
        }
        if (index % 2 == 0) {
            kind = "cap-phases";
            return make_cap_phases(domain, M, inst_.cap(), mix(seed, index));
        }
        kind = "gaussian";
        return make_random_gaussian(domain, M, mix(seed, index));
    }

    std::vector<std::vector<cd>> coeffs(const GridFunction& g) const {
        std::vector<std::vector<cd>> out(terms_.size());
        for (std::size_t c = 0; c < terms_.size(); ++c) coeffs_for(g, terms_[c], out[c]);
        return out;
    }

    double ratio(const std::vector<std::vector<cd>>& coeffs, double p) const {
        return ratio_from_masses(eval_->masses(coeffs, p), p);
    }

    /// One greedy sweep over caps starting from `coeffs`; re-randomizes one
    /// cap phase at a time and keeps improvements. Returns accepted steps.
    int greedy_sweep(std::vector<std::vector<cd>>& coeffs, double p, std::uint64_t seed) const {
        Rng rng(seed, 0x677265656479ULL);
        int accepted = 0;
        if (eval_->freq_dim() == 1) {
            GroupMass m = eval_->masses(coeffs, p);
            // Rebuild the running total once; per-cap norms are phase
            // invariant so only the interference term needs updating.
            const auto S = static_cast<std::size_t>(eval_->compact_size());
            std::vector<cd> total(S, cd(0, 0)), capfield(S), trial(S);
            for (std::size_t c = 0; c < coeffs.size(); ++c) {
                eval_->group_field(c, coeffs[c], capfield);
                for (std::size_t i = 0; i < S; ++i) total[i] += capfield[i];
            }
            double lhs_mass = eval_->field_mass(total, p);
            for (std::size_t c = 0; c < coeffs.size(); ++c) {
                const cd phase = rng.unit_phase();
                eval_->group_field(c, coeffs[c], capfield);
                const cd f = phase - cd(1.0, 0.0);
                for (std::size_t i = 0; i < S; ++i) trial[i] = total[i] + f * capfield[i];
                const double cand = eval_->field_mass(trial, p);
                if (cand > lhs_mass) {
                    lhs_mass = cand;
                    std::swap(total, trial);
                    for (auto& v : coeffs[c]) v *= phase;
                    ++accepted;
                }
            }
            return accepted;
        }
        // General path: full recomputation per step.
        double best = ratio(coeffs, p);
        for (std::size_t c = 0; c < coeffs.size(); ++c) {
            const cd phase = rng.unit_phase();
            auto trial = coeffs;
            for (auto& v : trial[c]) v *= phase;
            const double cand = ratio(trial, p);
            if (cand > best) {
                best = cand;
                coeffs = std::move(trial);
                ++accepted;
            }
        }
        return accepted;
    }

    static std::uint64_t mix(std::uint64_t seed, int index) {
        return seed ^ (0xD1B54A32D192ED03ULL * std::uint64_t(index + 1));
    }

  private:
    DecouplingInstance inst_;
    std::vector<FrequencyCube> caps_;
    GridFunction layout_;
    std::vector<CapTerms> terms_;
    std::unique_ptr<GroupedEval> eval_;
};

} // namespace

double decoupling_ratio(const GridFunction& g, const DecouplingInstance& inst) {
    inst.validate();
    if (g.cube != unit_cube(inst.n - 1))
        throw DomainError("g must be defined on the full unit frequency cube");
    if (g.is_zero()) throw DegenerateInputError("decoupling ratio of the zero function");

    const auto caps = inst.caps();
    std::vector<ExpBasis> bases;
    std::vector<std::vector<cd>> coeffs;
    for (const auto& cap : caps) {
        const CapTerms t = cap_terms(g, &cap);
        bases.push_back(t.basis);
        coeffs.emplace_back();
        coeffs_for(g, t, coeffs.back());
    }
    GroupedEval eval(instance_eval_grid(inst), std::move(bases), instance_weight(inst));
    return ratio_from_masses(eval.masses(coeffs, inst.p), inst.p);
}

double l2_decoupling_check(const GridFunction& g, const FrequencyCube& Q, const SpatialCube& B,
                           double E, NormMode mode, const GridSettings& settings,
                           double period_slice) {
    if (!(g.cube == Q)) throw DomainError("g must be sampled on Q");
    const double invR = 1.0 / B.side;
    if (Q.side.to_double() < invR)
        throw InvalidScaleError("cap scale 1/R exceeds side(Q)");
    const int j = int(std::llround(std::log2(B.side)));
    if (std::abs(std::ldexp(1.0, j) - B.side) > 1e-9)
        throw InvalidScaleError("side(B) must be a power of two");
    const Dyadic capside = Dyadic::pow2(-j);
    // The sample grid must resolve the caps (a whole number of cells each).
    const double cells_per_cap =
        double(g.samples_per_axis) * capside.to_double() / g.cube.side.to_double();
    if (cells_per_cap < 1.0 - 1e-9 || std::abs(cells_per_cap - std::round(cells_per_cap)) > 1e-9)
        throw InvalidScaleError("cap scale 1/R is finer than the sample grid resolves");

    const auto caps = dyadic_partition(Q, capside);
    std::vector<ExpBasis> bases;
    std::vector<std::vector<cd>> coeffs;
    for (const auto& cap : caps) {
        const CapTerms t = cap_terms(g, &cap);
        bases.push_back(t.basis);
        coeffs.emplace_back();
        coeffs_for(g, t, coeffs.back());
    }

    const int n = g.dim() + 1;
    EvalGrid grid = mode == NormMode::period_box
                        ? period_box_grid(n, B.side, settings.spacing, period_slice)
                        : eval_grid_from(make_grid(B, settings));
    std::function<double(std::span<const double>)> w;
    if (mode == NormMode::weighted) {
        const WeightSpec ws{B, E, false};
        w = [ws](std::span<const double> x) { return weight_value(ws, x); };
    }
    GroupedEval eval(std::move(grid), std::move(bases), std::move(w));
    return ratio_from_masses(eval.masses(coeffs, 2.0), 2.0);
}

double neighborhood_ratio(const std::vector<NeighborhoodPoint>& points, double R, double p,
                          double E, const SpatialCube& B, const GridSettings& settings) {
    if (points.empty()) throw DegenerateInputError("empty frequency point set");
    if (std::abs(B.side - R) > 1e-9) throw DomainError("B must have side R");
    const int fdim = int(points.front().xi.size());
    const double caps_axis = std::sqrt(R);
    const int j = int(std::llround(std::log2(caps_axis)));
    if (std::abs(std::ldexp(1.0, j) - caps_axis) > 1e-9)
        throw InvalidScaleError("R^{1/2} must be a power of two");
    const auto caps = dyadic_partition(unit_cube(fdim), Dyadic::pow2(-j));

    for (const auto& pt : points) {
        if (int(pt.xi.size()) != fdim) throw DomainError("mixed frequency dimensions");
        for (const double v : pt.xi)
            if (v < 0.0 || v > 1.0) throw DomainError("frequency outside the unit cube");
        if (pt.t < -1e-12 || pt.t > 1.0 / R + 1e-12)
            throw DomainError("point lies outside the 1/R neighborhood of the paraboloid");
    }

    // Bin by xi; points on the top faces go to the last cap of the row.
    const auto bins = std::int64_t(1) << j;
    std::vector<ExpBasis> bases(caps.size());
    std::vector<std::vector<cd>> coeffs(caps.size());
    for (auto& b : bases) b.freq_dim = fdim;
    for (const auto& pt : points) {
        std::int64_t flat = 0;
        for (int d = 0; d < fdim; ++d) {
            auto i = std::int64_t(pt.xi[static_cast<std::size_t>(d)] * caps_axis);
            i = std::min(i, bins - 1);
            flat = flat * bins + i;
        }
        double sq = 0.0;
        for (const double v : pt.xi) {
            bases[static_cast<std::size_t>(flat)].freq.push_back(v);
            sq += v * v;
        }
        bases[static_cast<std::size_t>(flat)].lift.push_back(sq + pt.t);
        coeffs[static_cast<std::size_t>(flat)].push_back(pt.amplitude);
    }

    const WeightSpec ws{B, E, false};
    GroupedEval eval(eval_grid_from(make_grid(B, settings)), std::move(bases),
                     [ws](std::span<const double> x) { return weight_value(ws, x); });
    return ratio_from_masses(eval.masses(coeffs, p), p);
}

EstimateResult estimate_constant(const DecouplingInstance& inst, int trials, std::uint64_t seed,
                                 int workers) {
    inst.validate();
    if (trials < 1) throw DomainError("trials must be >= 1");
    const TrialEngine engine(inst);

    std::vector<double> ratios(static_cast<std::size_t>(trials), 0.0);
    std::vector<std::string> kinds(static_cast<std::size_t>(trials));
    parallel_for(static_cast<std::size_t>(trials), resolve_workers(workers), [&](std::size_t i) {
        std::string kind;
        const GridFunction g = engine.make_trial(int(i), seed, kind);
        ratios[i] = engine.ratio(engine.coeffs(g), inst.p);
        kinds[i] = std::move(kind);
    });

    EstimateResult best;
    for (int i = 0; i < trials; ++i) {
        if (ratios[static_cast<std::size_t>(i)] > best.best_ratio) {
            best.best_ratio = ratios[static_cast<std::size_t>(i)];
            best.argmax_kind = kinds[static_cast<std::size_t>(i)];
            best.best_trial = i;
        }
    }

    // Greedy refinement from the argmax, one sweep over caps.
    std::string kind;
    const GridFunction g0 = engine.make_trial(best.best_trial, seed, kind);
    auto coeffs = engine.coeffs(g0);
    best.greedy_accepts =
        engine.greedy_sweep(coeffs, inst.p, TrialEngine::mix(seed, trials) ^ 0x9E3779B9ULL);
    if (best.greedy_accepts > 0) {
        const double refined = engine.ratio(coeffs, inst.p);
        if (refined > best.best_ratio) {
            best.best_ratio = refined;
            best.argmax_kind += "+greedy" + std::to_string(best.greedy_accepts);
        }
    }
    return best;
}

double forced_ratio(const DecouplingInstance& inst, const TestFunctionSpec& spec) {
    inst.validate();
    const GridFunction g = make_test_function(spec, unit_cube(inst.n - 1),
                                              inst.trial_samples_per_axis());
    return decoupling_ratio(g, inst);
}

DecouplingReport scale_sweep(const SweepSpec& spec) {
    DecouplingReport report;
    report.n = spec.n;
    report.p = spec.p;
    report.E = spec.E;
    report.trials = spec.trials;
    report.seed = spec.seed;

    for (const int k : spec.delta_exps) {
        DecouplingInstance inst;
        inst.n = spec.n;
        inst.p = spec.p;
        inst.E = spec.E;
        inst.delta_exp = k;
        inst.samples_per_cap = spec.samples_per_cap;
        inst.grid = spec.grid;

        const auto t0 = std::chrono::steady_clock::now();
        SweepRow row;
        row.delta_exp = k;
        row.trials = spec.trials;
        row.seed = spec.seed;
        if (spec.forced) {
            row.best_ratio = forced_ratio(inst, *spec.forced);
            row.argmax_kind = "forced";
        } else {
            const EstimateResult est = estimate_constant(inst, spec.trials, spec.seed, spec.workers);
            row.best_ratio = est.best_ratio;
            row.argmax_kind = est.argmax_kind;
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                          .count();
        report.rows.push_back(std::move(row));
    }

    if (report.rows.size() >= 3) report.fit = fit_eta(report.rows);
    return report;
}

EtaFit fit_eta(const std::vector<std::pair<double, double>>& rows) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [delta, ratio] : rows) {
        if (ratio <= 0.0) throw DegenerateInputError("nonpositive ratio row rejected by the fit");
        pts.emplace_back(std::log(1.0 / delta), std::log(ratio));
    }
    if (pts.size() < 3) throw DegenerateInputError("eta fit needs at least 3 scales");

    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= double(pts.size());
    my /= double(pts.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    EtaFit fit;
    fit.eta_hat = sxy / sxx;
    double rss = 0.0;
    for (const auto& [x, y] : pts) {
        const double e = y - (my + fit.eta_hat * (x - mx));
        rss += e * e;
    }
    fit.residual = std::sqrt(rss / double(pts.size()));
    return fit;
}

EtaFit fit_eta(const std::vector<SweepRow>& rows) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) pts.emplace_back(std::pow(0.25, r.delta_exp), r.best_ratio);
    return fit_eta(pts);
}

} // namespace declab
