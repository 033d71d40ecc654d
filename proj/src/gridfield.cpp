#include "declab/gridfield.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace declab {

namespace {

using MatC = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic>;
using MapRowMajor = Eigen::Map<Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Exact dyadic form of a double when the denominator exponent stays small;
// nullifies the periodicity detection otherwise.
bool small_dyadic(double x, Dyadic& out) {
    if (x == 0.0) {
        out = Dyadic::from_int(0);
        return true;
    }
    int e = 0;
    const double m = std::frexp(x, &e); // x = m * 2^e, |m| in [0.5, 1)
    const double scaled = std::ldexp(m, 40);
    if (scaled != std::floor(scaled)) return false;
    const auto num = std::int64_t(scaled);
    const int exp2 = 40 - e;
    if (exp2 < 0) {
        out = Dyadic(num << (-exp2), 0);
        return true;
    }
    if (exp2 > 50) return false;
    out = Dyadic(num, exp2);
    return true;
}

} // namespace

EvalGrid eval_grid_from(const SpatialGrid& grid) {
    EvalGrid g;
    g.axis.resize(static_cast<std::size_t>(grid.dim()));
    for (int a = 0; a < grid.dim(); ++a) {
        g.axis[static_cast<std::size_t>(a)] =
            EvalAxis{grid.origin(a) + 0.5 * grid.spacing, grid.spacing, grid.pts_per_axis()};
    }
    g.cell_measure = grid.cell_measure();
    return g;
}

EvalGrid period_box_grid(int space_dim, double R, double spacing, double xn_slice) {
    EvalGrid g;
    g.axis.resize(static_cast<std::size_t>(space_dim));
    const auto n = std::int64_t(std::llround(R / spacing));
    if (n < 1 || std::abs(double(n) * spacing - R) > 1e-9)
        throw InvalidScaleError("period box needs spacing dividing R");
    for (int a = 0; a + 1 < space_dim; ++a)
        g.axis[static_cast<std::size_t>(a)] = EvalAxis{0.5 * spacing, spacing, n};
    g.axis[static_cast<std::size_t>(space_dim - 1)] = EvalAxis{xn_slice, 1.0, 1};
    g.cell_measure = std::pow(spacing, space_dim - 1);
    return g;
}

CapTerms cap_terms(const GridFunction& g, const FrequencyCube* cap) {
    CapTerms t;
    t.basis.freq_dim = g.dim();
    bool exact_ok = true;
    const int M = g.samples_per_axis;
    exact_ok = (M & (M - 1)) == 0; // power-of-two sample counts stay dyadic
    for (std::int64_t i = 0; i < g.cell_count(); ++i) {
        const auto xi = g.freq(i);
        if (cap && !cap->contains(xi)) continue;
        t.cells.push_back(i);
        double sq = 0.0;
        for (const double v : xi) {
            t.basis.freq.push_back(v);
            sq += v * v;
        }
        t.basis.lift.push_back(sq);
        if (exact_ok) {
            for (const auto& v : g.freq_exact(i)) t.basis.freq_exact.push_back(v);
        }
    }
    if (!exact_ok) t.basis.freq_exact.clear();
    return t;
}

void coeffs_for(const GridFunction& g, const CapTerms& terms, std::vector<cd>& out) {
    const double w = g.cell_weight();
    out.resize(terms.cells.size());
    for (std::size_t k = 0; k < terms.cells.size(); ++k)
        out[k] = g.values[static_cast<std::size_t>(terms.cells[k])] * w;
}

struct FieldTables::Impl {
    int freq_dim = 1;
    int K = 0;
    std::int64_t Xn = 1;
    std::vector<std::int64_t> P; // per x_bar axis
    std::vector<MatC> A;         // A[a]: P_a x K
    MatC L;                      // K x Xn
};

FieldTables::~FieldTables() = default;
FieldTables::FieldTables(FieldTables&&) noexcept = default;

int FieldTables::terms() const { return impl_->K; }
std::int64_t FieldTables::period(int xbar_axis) const { return impl_->P[static_cast<std::size_t>(xbar_axis)]; }
std::int64_t FieldTables::xn_count() const { return impl_->Xn; }

namespace {

// Minimal P with freq * step * P integral for every term, capped at len.
std::int64_t axis_period(const ExpBasis& basis, int axis, double step, std::int64_t len) {
    if (basis.freq_exact.empty()) return len;
    Dyadic dstep;
    if (!small_dyadic(step, dstep)) return len;
    int max_exp = 0;
    for (int k = 0; k < basis.count(); ++k) {
        const Dyadic q = basis.freq_exact[static_cast<std::size_t>(k * basis.freq_dim + axis)] * dstep;
        if (q.is_zero()) continue;
        if (q.exp2 > max_exp) max_exp = q.exp2;
        if (max_exp > 40) return len;
    }
    const std::int64_t P = std::int64_t(1) << max_exp;
    return P < len ? P : len;
}

} // namespace

std::vector<std::int64_t> axis_periods(const EvalGrid& grid, const ExpBasis& basis) {
    std::vector<std::int64_t> out;
    for (int a = 0; a < basis.freq_dim; ++a) {
        const auto& ax = grid.axis[static_cast<std::size_t>(a)];
        out.push_back(axis_period(basis, a, ax.step, ax.count));
    }
    return out;
}

FieldTables::FieldTables(const EvalGrid& grid, const ExpBasis& basis,
                         std::span<const std::int64_t> forced_periods)
    : impl_(std::make_unique<Impl>()) {
    const int f = basis.freq_dim;
    if (f + 1 != grid.space_dim())
        throw DomainError("basis frequency dimension does not match the grid");
    impl_->freq_dim = f;
    impl_->K = basis.count();
    impl_->Xn = grid.xn_count();
    impl_->P.resize(static_cast<std::size_t>(f));
    impl_->A.resize(static_cast<std::size_t>(f));

    for (int a = 0; a < f; ++a) {
        const auto& ax = grid.axis[static_cast<std::size_t>(a)];
        std::int64_t P = axis_period(basis, a, ax.step, ax.count);
        if (!forced_periods.empty()) {
            const std::int64_t want = forced_periods[static_cast<std::size_t>(a)];
            if (want >= ax.count) {
                P = ax.count;
            } else if (want % P == 0) {
                P = want; // any multiple of the minimal period is a period
            } else {
                throw DomainError("forced period is not a multiple of the table period");
            }
        }
        impl_->P[static_cast<std::size_t>(a)] = P;
        MatC& A = impl_->A[static_cast<std::size_t>(a)];
        A.resize(P, impl_->K);
        for (int k = 0; k < impl_->K; ++k) {
            const double xi = basis.freq[static_cast<std::size_t>(k * f + a)];
            for (std::int64_t r = 0; r < P; ++r) A(r, k) = unit_phase_turns(xi * ax.at(r));
        }
    }

    const auto& axn = grid.axis.back();
    impl_->L.resize(impl_->K, impl_->Xn);
    for (int k = 0; k < impl_->K; ++k) {
        const double lift = basis.lift[static_cast<std::size_t>(k)];
        for (std::int64_t b = 0; b < impl_->Xn; ++b)
            impl_->L(k, b) = unit_phase_turns(lift * axn.at(b));
    }
}

void FieldTables::add_field_1d(std::span<const cd> coeffs, std::span<cd> out, double sign) const {
    const auto& im = *impl_;
    if (im.freq_dim != 1) throw DomainError("add_field_1d needs a 1-d frequency basis");
    const std::int64_t P = im.P[0];
    if (std::int64_t(out.size()) != P * im.Xn) throw DomainError("output buffer size mismatch");
    if (im.K == 0) return;
    Eigen::Map<const Eigen::VectorXcd> c(coeffs.data(), im.K);
    MatC scaled = c.asDiagonal() * im.L; // K x Xn
    MapRowMajor O(out.data(), P, im.Xn);
    O.noalias() += sign * (im.A[0] * scaled);
}

void FieldTables::for_each_slab_2d(std::span<const cd> coeffs,
                                   const std::function<void(std::int64_t, const cd*)>& fn) const {
    const auto& im = *impl_;
    if (im.freq_dim != 2) throw DomainError("for_each_slab_2d needs a 2-d frequency basis");
    const std::int64_t P0 = im.P[0];
    const std::int64_t P1 = im.P[1];
    MatC slab(P0, P1);
    MatC right(im.K, P1);
    Eigen::Map<const Eigen::VectorXcd> c(coeffs.data(), im.K);
    for (std::int64_t b = 0; b < im.Xn; ++b) {
        if (im.K == 0) {
            slab.setZero();
        } else {
            Eigen::VectorXcd w = c.cwiseProduct(im.L.col(b));
            right.noalias() = w.asDiagonal() * im.A[1].transpose();
            slab.noalias() = im.A[0] * right;
        }
        // Row-major view expected by callers: slab_buf[r0 * P1 + r1].
        static thread_local std::vector<cd> buf;
        buf.resize(static_cast<std::size_t>(P0 * P1));
        for (std::int64_t r0 = 0; r0 < P0; ++r0)
            for (std::int64_t r1 = 0; r1 < P1; ++r1) buf[static_cast<std::size_t>(r0 * P1 + r1)] = slab(r0, r1);
        fn(b, buf.data());
    }
}

std::vector<double> aggregate_weight_1d(const EvalGrid& grid, std::int64_t P0,
                                        const std::function<double(std::span<const double>)>& w) {
    if (grid.space_dim() != 2) throw DomainError("aggregate_weight_1d expects a planar grid");
    const auto& ax = grid.axis[0];
    const auto& an = grid.axis[1];
    std::vector<double> wagg(static_cast<std::size_t>(P0 * an.count), 0.0);
    double x[2];
    std::int64_t r = 0;
    for (std::int64_t a = 0; a < ax.count; ++a) {
        x[0] = ax.at(a);
        double* row = wagg.data() + r * an.count;
        for (std::int64_t b = 0; b < an.count; ++b) {
            x[1] = an.at(b);
            row[b] += w(std::span<const double>(x, 2)) * grid.cell_measure;
        }
        if (++r == P0) r = 0;
    }
    return wagg;
}

double compact_p_mass(std::span<const double> wagg, std::span<const cd> field, double p) {
    const double hp = p / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < wagg.size(); ++i) {
        const cd v = field[i];
        const double a2 = v.real() * v.real() + v.imag() * v.imag();
        total += wagg[i] * pow_real(a2, hp);
    }
    return total;
}

namespace {

void expand_1d(std::span<const cd> compact, std::int64_t P0, const EvalGrid& grid,
               std::span<cd> out) {
    const std::int64_t X0 = grid.axis[0].count;
    const std::int64_t Xn = grid.axis[1].count;
    for (std::int64_t a = 0; a < X0; ++a) {
        const cd* src = compact.data() + (a % P0) * Xn;
        cd* dst = out.data() + a * Xn;
        for (std::int64_t b = 0; b < Xn; ++b) dst[b] = src[b];
    }
}

} // namespace

std::vector<cd> eval_field(const GridFunction& g, const SpatialGrid& grid) {
    const EvalGrid eg = eval_grid_from(grid);
    const CapTerms terms = cap_terms(g);
    std::vector<cd> coeffs;
    coeffs_for(g, terms, coeffs);
    FieldTables tables(eg, terms.basis);
    std::vector<cd> out(static_cast<std::size_t>(eg.total()), cd(0, 0));

    if (g.dim() == 1) {
        std::vector<cd> compact(static_cast<std::size_t>(tables.period(0) * eg.xn_count()), cd(0, 0));
        tables.add_field_1d(coeffs, compact);
        expand_1d(compact, tables.period(0), eg, out);
        return out;
    }
    if (g.dim() == 2) {
        const std::int64_t X0 = eg.axis[0].count;
        const std::int64_t X1 = eg.axis[1].count;
        const std::int64_t Xn = eg.axis[2].count;
        const std::int64_t P0 = tables.period(0);
        const std::int64_t P1 = tables.period(1);
        tables.for_each_slab_2d(coeffs, [&](std::int64_t b, const cd* slab) {
            for (std::int64_t a0 = 0; a0 < X0; ++a0)
                for (std::int64_t a1 = 0; a1 < X1; ++a1)
                    out[static_cast<std::size_t>((a0 * X1 + a1) * Xn + b)] =
                        slab[static_cast<std::size_t>((a0 % P0) * P1 + (a1 % P1))];
        });
        return out;
    }
    throw DomainError("grid field evaluation supports frequency dimension 1 or 2");
}

std::vector<double> eval_abs2(const GridFunction& g, const SpatialGrid& grid,
                              const FrequencyCube* cap) {
    const EvalGrid eg = eval_grid_from(grid);
    const CapTerms terms = cap_terms(g, cap);
    std::vector<cd> coeffs;
    coeffs_for(g, terms, coeffs);
    FieldTables tables(eg, terms.basis);
    std::vector<double> out(static_cast<std::size_t>(eg.total()), 0.0);

    if (g.dim() == 1) {
        std::vector<cd> compact(static_cast<std::size_t>(tables.period(0) * eg.xn_count()), cd(0, 0));
        tables.add_field_1d(coeffs, compact);
        const std::int64_t X0 = eg.axis[0].count;
        const std::int64_t Xn = eg.axis[1].count;
        const std::int64_t P0 = tables.period(0);
        for (std::int64_t a = 0; a < X0; ++a) {
            const cd* src = compact.data() + (a % P0) * Xn;
            double* dst = out.data() + a * Xn;
            for (std::int64_t b = 0; b < Xn; ++b)
                dst[b] = src[b].real() * src[b].real() + src[b].imag() * src[b].imag();
        }
        return out;
    }
    if (g.dim() == 2) {
        const std::int64_t X0 = eg.axis[0].count;
        const std::int64_t X1 = eg.axis[1].count;
        const std::int64_t Xn = eg.axis[2].count;
        const std::int64_t P0 = tables.period(0);
        const std::int64_t P1 = tables.period(1);
        tables.for_each_slab_2d(coeffs, [&](std::int64_t b, const cd* slab) {
            for (std::int64_t a0 = 0; a0 < X0; ++a0)
                for (std::int64_t a1 = 0; a1 < X1; ++a1) {
                    const cd v = slab[static_cast<std::size_t>((a0 % P0) * P1 + (a1 % P1))];
                    out[static_cast<std::size_t>((a0 * X1 + a1) * Xn + b)] =
                        v.real() * v.real() + v.imag() * v.imag();
                }
        });
        return out;
    }
    throw DomainError("grid field evaluation supports frequency dimension 1 or 2");
}

double box_p_mass(std::span<const double> abs2, const SpatialGrid& grid, const IndexBox& box,
                  const WeightSpec& w, double p) {
    const int d = grid.dim();
    const std::int64_t n = grid.pts_per_axis();
    const double hp = p / 2.0;
    double total = 0.0;
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<std::int64_t> idx;
    for (int a = 0; a < d; ++a) idx.push_back(box.lo[static_cast<std::size_t>(a)]);
    if (box.count() == 0) return 0.0;
    while (true) {
        for (int a = 0; a + 1 < d; ++a) x[static_cast<std::size_t>(a)] = grid.coord(a, idx[static_cast<std::size_t>(a)]);
        std::int64_t base = 0;
        for (int a = 0; a + 1 < d; ++a) base = (base + idx[static_cast<std::size_t>(a)]) * n;
        double row = 0.0;
        for (std::int64_t i = box.lo[static_cast<std::size_t>(d - 1)]; i < box.hi[static_cast<std::size_t>(d - 1)]; ++i) {
            x[static_cast<std::size_t>(d - 1)] = grid.coord(d - 1, i);
            row += pow_real(abs2[static_cast<std::size_t>(base + i)], hp) * weight_value(w, x);
        }
        total += row;
        int axis = d - 2;
        while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == box.hi[static_cast<std::size_t>(axis)]) {
            idx[static_cast<std::size_t>(axis)] = box.lo[static_cast<std::size_t>(axis)];
            --axis;
        }
        if (axis < 0) break;
    }
    return total * grid.cell_measure();
}

} // namespace declab
