#include "declab/multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "declab/parallel.hpp"
#include "declab/rng.hpp"

namespace declab {

double kappa(double p, int n) {
    if (p < 2.0) throw DomainError("p must be >= 2");
    if (n < 2) throw DomainError("n must be >= 2");
    const double low = 2.0 * double(n) / double(n - 1);
    if (p <= low) return 0.0;
    const double k = (p * n - p - 2.0 * n) / ((p - 2.0) * double(n - 1));
    return std::clamp(k, 0.0, 1.0);
}

void TransverseConfig::validate_for_iteration() const {
    std::vector<std::string> bad;
    if (cubes.size() < 2) bad.push_back("need n >= 2 transverse cubes");
    for (const auto& q : cubes) {
        if (q.dim() != n() - 1) bad.push_back("cube dimension must be n-1");
        if (!(q.side == mu())) bad.push_back("transverse cubes must have equal side lengths");
    }
    if (!(nu > 0.0)) bad.push_back("certified transversality nu must be positive");
    if (m < 1) bad.push_back("iteration depth m must be >= 1");
    if (delta.is_zero() || mu() < delta)
        bad.push_back("cube side mu must be at least delta");
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

void TransverseConfig::validate_for_constant() const {
    validate_for_iteration();
    const double bound = std::pow(delta.to_double(), std::pow(2.0, -m));
    if (mu().to_double() < bound - 1e-12)
        throw ValidationError({"cube side mu must be at least delta^(2^-m) = " +
                               std::to_string(bound)});
}

namespace {

// Weight samples of one box over its covering index range, in iteration
// order, so repeated cap masses become plain dot products.
struct BoxWeights {
    IndexBox box;
    std::vector<double> w;
    std::vector<std::int64_t> flat; // grid-flat index per sample
};

BoxWeights box_weights(const SpatialGrid& grid, const SpatialCube& cube, double weight_E,
                       double pad) {
    BoxWeights bw;
    bw.box = cover_box(grid, cube, pad);
    const WeightSpec spec{cube, weight_E, false};
    const int d = grid.dim();
    const std::int64_t n = grid.pts_per_axis();
    if (bw.box.count() == 0) return bw;
    bw.w.reserve(static_cast<std::size_t>(bw.box.count()));
    bw.flat.reserve(static_cast<std::size_t>(bw.box.count()));
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<std::int64_t> idx;
    for (int a = 0; a < d; ++a) idx.push_back(bw.box.lo[static_cast<std::size_t>(a)]);
    while (true) {
        for (int a = 0; a < d; ++a) x[static_cast<std::size_t>(a)] = grid.coord(a, idx[static_cast<std::size_t>(a)]);
        std::int64_t flat = 0;
        for (int a = 0; a < d; ++a) flat = flat * n + idx[static_cast<std::size_t>(a)];
        bw.w.push_back(weight_value(spec, x));
        bw.flat.push_back(flat);
        int axis = d - 1;
        while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == bw.box.hi[static_cast<std::size_t>(axis)]) {
            idx[static_cast<std::size_t>(axis)] = bw.box.lo[static_cast<std::size_t>(axis)];
            --axis;
        }
        if (axis < 0) break;
    }
    return bw;
}

double box_mass(const BoxWeights& bw, std::span<const double> abs2, double t, double measure) {
    const double ht = t / 2.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < bw.w.size(); ++j)
        acc += bw.w[j] * pow_real(abs2[static_cast<std::size_t>(bw.flat[j])], ht);
    return acc * measure;
}

// norms[i][cap][box][exp] of ||E_cap g||_{L^t(w_box, weight_E)}, normalized
// by |box| inside the root when `normalized` (the averaged norm).
using NormTensor = std::vector<std::vector<std::vector<std::vector<double>>>>;

NormTensor cap_box_norms(const GridFunction& g,
                         const std::vector<std::vector<FrequencyCube>>& caps,
                         const SpatialGrid& grid, const std::vector<SpatialCube>& boxes,
                         const std::vector<double>& exponents, double weight_E,
                         bool normalized) {
    std::vector<BoxWeights> bws;
    bws.reserve(boxes.size());
    for (const auto& b : boxes) bws.push_back(box_weights(grid, b, weight_E, grid.padding));

    const double measure = grid.cell_measure();
    NormTensor out(caps.size());
    for (std::size_t i = 0; i < caps.size(); ++i) {
        out[i].resize(caps[i].size());
        for (std::size_t c = 0; c < caps[i].size(); ++c) {
            const auto abs2 = eval_abs2(g, grid, &caps[i][c]);
            out[i][c].resize(boxes.size());
            for (std::size_t b = 0; b < boxes.size(); ++b) {
                out[i][c][b].resize(exponents.size());
                for (std::size_t e = 0; e < exponents.size(); ++e) {
                    const double t = exponents[e];
                    double mass = box_mass(bws[b], abs2, t, measure);
                    if (normalized) mass /= std::pow(boxes[b].side, grid.dim());
                    out[i][c][b][e] = std::pow(mass, 1.0 / t);
                }
            }
        }
    }
    return out;
}

std::vector<std::vector<FrequencyCube>> level_caps(const GridFunction& g,
                                                   const TransverseConfig& cfg, Dyadic delta,
                                                   int q_level) {
    const Dyadic scale = dyadic_pow(delta, q_level);
    if (scale > cfg.mu())
        throw InvalidScaleError("cap scale delta^q exceeds the transverse cube side");
    // The sample grid must resolve the caps with whole cells.
    const double cells = scale.to_double() * double(g.samples_per_axis) /
                         g.cube.side.to_double();
    if (cells < 1.0 - 1e-9 || std::abs(cells - std::round(cells)) > 1e-9) {
        const int need = int(std::ceil(g.cube.side.to_double() / scale.to_double()));
        throw ResolutionError("sample grid does not resolve level-" + std::to_string(q_level) +
                              " caps; need samples_per_axis to be a multiple of " +
                              std::to_string(need));
    }
    std::vector<std::vector<FrequencyCube>> caps;
    caps.reserve(cfg.cubes.size());
    for (const auto& q : cfg.cubes) caps.push_back(dyadic_partition(q, scale));
    return caps;
}

// D_t from a per-cube norm slice: geometric mean of l^2 cap sums.
double d_from_norms(const NormTensor& norms, std::size_t box, std::size_t exp_idx) {
    double prod = 1.0;
    for (const auto& cube_norms : norms) {
        double sum2 = 0.0;
        for (const auto& cap : cube_norms) {
            const double v = cap[box][exp_idx];
            sum2 += v * v;
        }
        prod *= std::sqrt(sum2);
    }
    return std::pow(prod, 1.0 / double(norms.size()));
}

int level_from_side(const SpatialCube& B, Dyadic delta) {
    const double r = std::log(B.side) / std::log(1.0 / delta.to_double());
    const int ri = int(std::llround(r));
    if (ri < 1 || std::abs(r - double(ri)) > 1e-9)
        throw InvalidScaleError("cube side must be an integer power of 1/delta");
    return ri;
}

} // namespace

double multilinear_D(double t, int q_level, const SpatialCube& Br, const GridFunction& g,
                     const TransverseConfig& cfg, double E, const GridSettings& settings) {
    cfg.validate_for_iteration();
    if (q_level < 1) throw DomainError("q must be a positive integer level");
    level_from_side(Br, cfg.delta); // validates nesting
    const auto caps = level_caps(g, cfg, cfg.delta, q_level);
    const SpatialGrid grid = make_grid(Br, settings);
    const auto norms = cap_box_norms(g, caps, grid, {Br}, {t}, E, true);
    return d_from_norms(norms, 0, 0);
}

double multilinear_A(double p, int q_level, const SpatialCube& Br, int s_level,
                     const GridFunction& g, const TransverseConfig& cfg, double E,
                     const GridSettings& settings) {
    cfg.validate_for_iteration();
    const int r_level = level_from_side(Br, cfg.delta);
    if (!(q_level >= 1 && q_level <= s_level && s_level <= r_level))
        throw DomainError("levels must nest as q <= s <= r");
    const auto caps = level_caps(g, cfg, cfg.delta, q_level);
    const SpatialGrid grid = make_grid(Br, settings);
    const double sub_side = std::pow(1.0 / cfg.delta.to_double(), s_level);
    const auto boxes = spatial_partition(Br, sub_side);
    const auto norms = cap_box_norms(g, caps, grid, boxes, {2.0}, E, true);

    double acc = 0.0;
    for (std::size_t b = 0; b < boxes.size(); ++b) acc += std::pow(d_from_norms(norms, b, 0), p);
    return std::pow(acc / double(boxes.size()), 1.0 / p);
}

bool Tile::contains(std::span<const double> x) const {
    const auto f = frame();
    const int d = dim();
    for (int k = 0; k < d; ++k) {
        double proj = 0.0;
        for (int a = 0; a < d; ++a)
            proj += (x[static_cast<std::size_t>(a)] - center[static_cast<std::size_t>(a)]) * f[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)];
        const double half = (k == 0 ? long_side : short_side) / 2.0;
        if (std::abs(proj) > half) return false;
    }
    return true;
}

std::vector<std::vector<double>> Tile::frame() const {
    const int d = dim();
    std::vector<std::vector<double>> f;
    f.push_back(direction);
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(direction[static_cast<std::size_t>(a)]) < std::abs(direction[static_cast<std::size_t>(b)]);
    });
    for (const int axis : order) {
        if (int(f.size()) == d) break;
        std::vector<double> u(static_cast<std::size_t>(d), 0.0);
        u[static_cast<std::size_t>(axis)] = 1.0;
        for (const auto& prev : f) {
            double dot = 0.0;
            for (int a = 0; a < d; ++a) dot += u[static_cast<std::size_t>(a)] * prev[static_cast<std::size_t>(a)];
            for (int a = 0; a < d; ++a) u[static_cast<std::size_t>(a)] -= dot * prev[static_cast<std::size_t>(a)];
        }
        double norm2 = 0.0;
        for (const double v : u) norm2 += v * v;
        if (norm2 > 1e-18) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& v : u) v *= inv;
            f.push_back(std::move(u));
        }
    }
    if (int(f.size()) != d) throw DomainError("degenerate tile direction");
    return f;
}

Tile make_tile(std::vector<double> center, std::vector<double> direction, double R,
               double amplitude) {
    double norm2 = 0.0;
    for (const double v : direction) norm2 += v * v;
    if (norm2 <= 0.0) throw DomainError("tile direction must be nonzero");
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : direction) v *= inv;
    if (amplitude < 0.0) throw DomainError("tile amplitude must be nonnegative");
    Tile t;
    t.center = std::move(center);
    t.direction = std::move(direction);
    t.long_side = R;
    t.short_side = std::sqrt(R);
    t.amplitude = amplitude;
    return t;
}

namespace {

// Axis-aligned bounding half-extents of a tile around its center.
std::vector<double> tile_extents(const Tile& t) {
    const auto f = t.frame();
    const int d = t.dim();
    std::vector<double> ext(static_cast<std::size_t>(d), 0.0);
    for (int a = 0; a < d; ++a) {
        double e = (t.long_side / 2.0) * std::abs(f[0][static_cast<std::size_t>(a)]);
        for (int k = 1; k < d; ++k) e += (t.short_side / 2.0) * std::abs(f[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)]);
        ext[static_cast<std::size_t>(a)] = e;
    }
    return ext;
}

} // namespace

KakeyaResult kakeya_check(const std::vector<std::vector<Tile>>& families, double R, double nu,
                          double ambient_factor, int workers) {
    const int n = int(families.size());
    if (n < 2) throw DomainError("need at least two tile families");
    const double S = ambient_factor * R;
    const double short_ref = std::sqrt(R);

    for (std::size_t j = 0; j < families.size(); ++j) {
        for (std::size_t k = 0; k < families[j].size(); ++k) {
            const Tile& t = families[j][k];
            if (t.dim() != n) throw PreconditionError("tile dimension mismatch in family " +
                                                      std::to_string(j));
            if (std::abs(t.long_side - R) > 1e-9 || std::abs(t.short_side - short_ref) > 1e-9)
                throw PreconditionError("tile (" + std::to_string(j) + "," + std::to_string(k) +
                                        ") does not have sides R^(1/2) x ... x R");
            const auto ext = tile_extents(t);
            for (int a = 0; a < n; ++a) {
                if (std::abs(t.center[static_cast<std::size_t>(a)]) + ext[static_cast<std::size_t>(a)] > S / 2.0 + 1e-9)
                    throw PreconditionError("tile (" + std::to_string(j) + "," +
                                            std::to_string(k) + ") leaves the ambient cube");
            }
        }
    }

    // Directional transversality over every cross-family tuple.
    {
        std::vector<std::size_t> pick(static_cast<std::size_t>(n), 0);
        bool done = false;
        for (const auto& fam : families)
            if (fam.empty()) done = true;
        while (!done) {
            std::vector<std::vector<double>> rows;
            for (int j = 0; j < n; ++j)
                rows.push_back(families[static_cast<std::size_t>(j)][pick[static_cast<std::size_t>(j)]].direction);
            if (abs_det(rows) < nu - 1e-12) {
                std::string named = "(";
                for (int j = 0; j < n; ++j)
                    named += (j ? "," : "") + std::to_string(pick[static_cast<std::size_t>(j)]);
                named += ")";
                throw PreconditionError("tile tuple " + named +
                                        " violates the transversality bound nu=" +
                                        std::to_string(nu));
            }
            int axis = n - 1;
            while (axis >= 0 && ++pick[static_cast<std::size_t>(axis)] == families[static_cast<std::size_t>(axis)].size()) {
                pick[static_cast<std::size_t>(axis)] = 0;
                --axis;
            }
            if (axis < 0) done = true;
        }
    }

    const double h_goal = short_ref / 4.0;
    const auto cells = std::max<std::int64_t>(1, std::llround(S / h_goal));
    const double h = S / double(cells);
    const double inv_exp = 1.0 / double(n - 1);

    // Precompute frames and bounding boxes once.
    struct PreTile {
        const Tile* tile;
        std::vector<std::vector<double>> frame;
        std::vector<double> ext;
    };
    std::vector<std::vector<PreTile>> pre(families.size());
    for (std::size_t j = 0; j < families.size(); ++j)
        for (const auto& t : families[j]) pre[j].push_back({&t, t.frame(), tile_extents(t)});

    auto coord = [&](std::int64_t i) { return -S / 2.0 + (double(i) + 0.5) * h; };
    auto inside = [&](const PreTile& pt, std::span<const double> x) {
        for (int k = 0; k < n; ++k) {
            double proj = 0.0;
            for (int a = 0; a < n; ++a)
                proj += (x[static_cast<std::size_t>(a)] - pt.tile->center[static_cast<std::size_t>(a)]) *
                        pt.frame[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)];
            const double half = (k == 0 ? pt.tile->long_side : pt.tile->short_side) / 2.0;
            if (std::abs(proj) > half) return false;
        }
        return true;
    };

    double lhs_sum = 0.0;
    std::vector<double> fam_sum(families.size(), 0.0);
    std::int64_t total_cells = 0;

    if (n == 2) {
        total_cells = cells * cells;
        std::vector<double> F(families.size());
        double x[2];
        for (std::int64_t a = 0; a < cells; ++a) {
            x[0] = coord(a);
            for (std::int64_t b = 0; b < cells; ++b) {
                x[1] = coord(b);
                double prod = 1.0;
                for (std::size_t j = 0; j < families.size(); ++j) {
                    double fj = 0.0;
                    for (const auto& pt : pre[j])
                        if (inside(pt, std::span<const double>(x, 2))) fj += pt.tile->amplitude;
                    F[j] = fj;
                    fam_sum[j] += fj;
                    prod *= fj;
                }
                lhs_sum += prod; // n-1 == 1, exponent is 1
            }
        }
    } else if (n == 3) {
        total_cells = cells * cells * cells;
        // Slab partial sums reduced in slab order keep the result independent
        // of the worker count.
        struct Partial {
            double lhs = 0.0;
            std::array<double, 3> fam{0.0, 0.0, 0.0};
        };
        std::vector<Partial> partials(static_cast<std::size_t>(cells));
        parallel_for(static_cast<std::size_t>(cells), resolve_workers(workers), [&](std::size_t zi) {
            const double z = coord(std::int64_t(zi));
            Partial part;
            std::vector<std::vector<double>> F(
                families.size(), std::vector<double>(static_cast<std::size_t>(cells * cells), 0.0));
            // Rasterize tiles into this slab via their bounding boxes.
            for (std::size_t j = 0; j < families.size(); ++j) {
                for (const auto& pt : pre[j]) {
                    if (std::abs(z - pt.tile->center[2]) > pt.ext[2] + h) continue;
                    const auto lo = [&](int axis) {
                        const double v = pt.tile->center[static_cast<std::size_t>(axis)] - pt.ext[static_cast<std::size_t>(axis)];
                        return std::max<std::int64_t>(0, std::int64_t((v + S / 2.0) / h) - 1);
                    };
                    const auto hi = [&](int axis) {
                        const double v = pt.tile->center[static_cast<std::size_t>(axis)] + pt.ext[static_cast<std::size_t>(axis)];
                        return std::min<std::int64_t>(cells, std::int64_t((v + S / 2.0) / h) + 2);
                    };
                    double x[3];
                    x[2] = z;
                    for (std::int64_t a = lo(0); a < hi(0); ++a) {
                        x[0] = coord(a);
                        for (std::int64_t b = lo(1); b < hi(1); ++b) {
                            x[1] = coord(b);
                            if (inside(pt, std::span<const double>(x, 3)))
                                F[j][static_cast<std::size_t>(a * cells + b)] += pt.tile->amplitude;
                        }
                    }
                }
            }
            for (std::int64_t i = 0; i < cells * cells; ++i) {
                double prod = 1.0;
                for (std::size_t j = 0; j < families.size(); ++j) {
                    const double fj = F[j][static_cast<std::size_t>(i)];
                    part.fam[j] += fj;
                    prod *= fj;
                }
                if (prod > 0.0) part.lhs += std::sqrt(prod); // exponent 1/(n-1) = 1/2
            }
            partials[zi] = part;
        });
        for (const auto& part : partials) {
            lhs_sum += part.lhs;
            for (std::size_t j = 0; j < families.size(); ++j) fam_sum[j] += part.fam[j];
        }
    } else {
        throw DomainError("tile rasterization supports n = 2 or 3");
    }

    KakeyaResult res;
    res.grid_spacing = h;
    res.lhs = lhs_sum / double(total_cells);
    double rhs = 1.0;
    for (const double s : fam_sum) rhs *= std::pow(s / double(total_cells), inv_exp);
    res.rhs = rhs;
    res.ratio = (res.rhs == 0.0) ? 0.0 : res.lhs / res.rhs;
    return res;
}

BallInflationResult ball_inflation_check(const GridFunction& g, Dyadic delta, double p,
                                         const TransverseConfig& cfg, const SpatialCube& B,
                                         double E, const GridSettings& settings) {
    const int n = cfg.n();
    const double low = 2.0 * double(n) / double(n - 1);
    if (p < low - 1e-12)
        throw DomainError("ball inflation requires p >= 2n/(n-1)");
    const double want_side = std::pow(1.0 / delta.to_double(), 2);
    if (std::abs(B.side - want_side) > 1e-9)
        throw DomainError("B must have side delta^{-2}");

    TransverseConfig local = cfg;
    local.delta = delta;
    local.validate_for_iteration();

    const double q = p * double(n - 1) / double(n);
    const auto caps = level_caps(g, local, delta, 1);
    const SpatialGrid grid = make_grid(B, settings);
    auto boxes = spatial_partition(B, 1.0 / delta.to_double());
    const std::size_t n_delta = boxes.size();
    boxes.push_back(B); // whole-cube norms share the same pass
    const auto norms = cap_box_norms(g, caps, grid, boxes, {q}, E, true);

    BallInflationResult res;
    double acc = 0.0;
    for (std::size_t b = 0; b < n_delta; ++b)
        acc += std::pow(d_from_norms(norms, b, 0), p); // [prod_i (...)^(1/2)]^{p/n} per box
    res.lhs = acc / double(n_delta);
    res.rhs = std::pow(d_from_norms(norms, n_delta, 0), p);
    if (res.rhs == 0.0) throw DegenerateInputError("ball inflation of the zero function");
    res.ratio = res.lhs / res.rhs;
    return res;
}

namespace {

double cap_set_distance(const FrequencyCube& a, const FrequencyCube& b) {
    double d2 = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        const double alo = a.corner[static_cast<std::size_t>(i)].to_double();
        const double ahi = alo + a.side.to_double();
        const double blo = b.corner[static_cast<std::size_t>(i)].to_double();
        const double bhi = blo + b.side.to_double();
        const double gap = std::max({0.0, blo - ahi, alo - bhi});
        d2 += gap * gap;
    }
    return std::sqrt(d2);
}

double center_distance(const FrequencyCube& a, const FrequencyCube& b) {
    const auto ca = a.center_d();
    const auto cb = b.center_d();
    double d2 = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) d2 += (ca[i] - cb[i]) * (ca[i] - cb[i]);
    return std::sqrt(d2);
}

double point_line_distance(const std::array<double, 2>& p, const std::array<double, 2>& a,
                           const std::array<double, 2>& b) {
    const double vx = b[0] - a[0];
    const double vy = b[1] - a[1];
    const double len = std::sqrt(vx * vx + vy * vy);
    return std::abs(vx * (p[1] - a[1]) - vy * (p[0] - a[0])) / len;
}

double triangle_area(const std::array<double, 2>& a, const std::array<double, 2>& b,
                     const std::array<double, 2>& c) {
    return 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

std::array<double, 2> cap_center2(const FrequencyCube& q) {
    const auto c = q.center_d();
    return {c[0], c[1]};
}

} // namespace

Classification broad_narrow_classify(const std::vector<FrequencyCube>& caps,
                                     const std::vector<double>& cap_constants, double K,
                                     double C_threshold) {
    if (caps.empty() || cap_constants.empty())
        throw DegenerateInputError("empty cap map");
    if (caps.size() != cap_constants.size())
        throw DomainError("cap and constant counts differ");
    if (C_threshold <= 0.0) throw DomainError("threshold exponent C must be positive");
    for (const auto& q : caps) {
        if (q.dim() != 2) throw DomainError("broad-narrow classification works on plane caps");
        if (std::abs(q.side.to_double() - 1.0 / K) > 1e-12)
            throw DomainError("caps must have side 1/K");
    }

    Classification cls;
    std::size_t star = 0;
    for (std::size_t i = 1; i < caps.size(); ++i)
        if (cap_constants[i] > cap_constants[star]) star = i;
    if (!(cap_constants[star] > 0.0))
        throw DegenerateInputError("all cap constants vanish");
    cls.alpha_star = star;

    const double cut = std::pow(K, -C_threshold) * cap_constants[star];
    for (std::size_t i = 0; i < caps.size(); ++i)
        if (cap_constants[i] >= cut) cls.s_big.push_back(i);

    // First scenario: nothing significant far from the dominant cap.
    bool far = false;
    for (const std::size_t i : cls.s_big)
        if (cap_set_distance(caps[i], caps[star]) >= 10.0 / K) far = true;
    if (!far) {
        cls.scenario = Scenario::single_cap;
        return cls;
    }

    // Line through the furthest-apart pair of significant centers.
    std::array<std::size_t, 2> pair{cls.s_big[0], cls.s_big[0]};
    double best = -1.0;
    for (std::size_t a = 0; a < cls.s_big.size(); ++a)
        for (std::size_t b = a + 1; b < cls.s_big.size(); ++b) {
            const double d = center_distance(caps[cls.s_big[a]], caps[cls.s_big[b]]);
            if (d > best) {
                best = d;
                pair = {cls.s_big[a], cls.s_big[b]};
            }
        }
    cls.line_caps = pair;
    cls.strip_halfwidth = C_threshold / K;

    const auto A = cap_center2(caps[pair[0]]);
    const auto B = cap_center2(caps[pair[1]]);

    // Second scenario: a significant cap intersects the complement of the
    // strip, i.e. its farthest corner leaves the C/K band around the line.
    auto square_max_dist = [&](const FrequencyCube& q) {
        const double s = q.side.to_double();
        double mx = 0.0;
        for (int cx = 0; cx <= 1; ++cx)
            for (int cy = 0; cy <= 1; ++cy) {
                const std::array<double, 2> pt{q.corner[0].to_double() + cx * s,
                                               q.corner[1].to_double() + cy * s};
                mx = std::max(mx, point_line_distance(pt, A, B));
            }
        return mx;
    };
    bool escape = false;
    for (const std::size_t i : cls.s_big) {
        if (square_max_dist(caps[i]) > cls.strip_halfwidth) {
            escape = true;
            break;
        }
    }
    if (escape) {
        // Witness triple maximizing the center triangle area (exhaustive).
        std::array<std::size_t, 3> tri{};
        double area = -1.0;
        for (std::size_t a = 0; a < cls.s_big.size(); ++a)
            for (std::size_t b = a + 1; b < cls.s_big.size(); ++b)
                for (std::size_t c = b + 1; c < cls.s_big.size(); ++c) {
                    const double t = triangle_area(cap_center2(caps[cls.s_big[a]]),
                                                   cap_center2(caps[cls.s_big[b]]),
                                                   cap_center2(caps[cls.s_big[c]]));
                    if (t > area) {
                        area = t;
                        tri = {cls.s_big[a], cls.s_big[b], cls.s_big[c]};
                    }
                }
        cls.scenario = Scenario::transverse_triple;
        cls.triple = tri;
        return cls;
    }

    cls.scenario = Scenario::line_strip;
    return cls;
}

IterationLedger multiscale_inequality_check(const GridFunction& g, Dyadic delta, double p, int m,
                                            const TransverseConfig& cfg, double E,
                                            const GridSettings& settings) {
    if (m < 1) throw DomainError("iteration depth m must be >= 1");
    TransverseConfig local = cfg;
    local.delta = delta;
    local.m = m;
    local.validate_for_iteration();

    const int top = 1 << m; // 2^m
    const double side = std::pow(1.0 / delta.to_double(), top);
    const SpatialCube B = centered_cube(local.n(), side);
    const SpatialGrid grid = make_grid(B, settings);

    IterationLedger ledger;
    ledger.kappa = kappa(p, local.n());
    ledger.m = m;
    ledger.p = p;
    ledger.E = E;

    for (int l = 0; l < m; ++l) {
        const int q = 1 << l;
        const auto caps = level_caps(g, local, delta, q);
        const double sub_side = std::pow(1.0 / delta.to_double(), q);
        auto boxes = spatial_partition(B, sub_side);
        const std::size_t n_sub = boxes.size();
        boxes.push_back(B);
        const auto norms = cap_box_norms(g, caps, grid, boxes, {2.0, p}, E, true);

        LedgerLevel level;
        level.l = l;
        double acc = 0.0;
        for (std::size_t b = 0; b < n_sub; ++b) acc += std::pow(d_from_norms(norms, b, 0), p);
        level.A = std::pow(acc / double(n_sub), 1.0 / p);
        level.D = d_from_norms(norms, n_sub, 1);
        ledger.levels.push_back(level);
    }

    {
        const auto caps = level_caps(g, local, delta, top);
        const auto norms = cap_box_norms(g, caps, grid, {B}, {2.0}, E, true);
        ledger.top_A = d_from_norms(norms, 0, 0); // single box: A = D_2
    }

    ledger.lhs = ledger.levels.front().A;
    const double k = ledger.kappa;
    double rhs = std::pow(ledger.top_A, std::pow(1.0 - k, m));
    for (int l = 0; l < m; ++l)
        rhs *= std::pow(ledger.levels[static_cast<std::size_t>(l)].D, k * std::pow(1.0 - k, l));
    ledger.rhs = rhs;
    if (!(rhs > 0.0)) throw DegenerateInputError("multiscale chain on the zero function");
    ledger.implied_constant = ledger.lhs / rhs;
    return ledger;
}

double bootstrap_bound(double eta, int m, double p, int n) {
    const double k = kappa(p, n);
    if (std::abs(k - 0.5) < 1e-9) return eta * double(m + 1); // removable singularity
    return eta * (std::pow(2.0 * (1.0 - k), m) - 2.0 * k) / (1.0 - 2.0 * k);
}

double multilinear_ratio(const GridFunction& g, const DecouplingInstance& inst,
                         const TransverseConfig& cfg) {
    const SpatialCube B = inst.box();
    const SpatialGrid grid = make_grid(B, inst.grid);
    const double delta_side = 1.0 / cfg.mu().to_double(); // Delta has side mu^{-1}
    const auto deltas = spatial_partition(B, delta_side);

    // Left side: whole-cube extensions against the small-cube weights with
    // the heavier exponent 10E, unnormalized.
    std::vector<std::vector<FrequencyCube>> whole;
    for (const auto& q : cfg.cubes) whole.push_back({q});
    const auto left = cap_box_norms(g, whole, grid, deltas, {inst.p}, 10.0 * inst.E, false);

    const int n = cfg.n();
    double lhs_acc = 0.0;
    for (std::size_t b = 0; b < deltas.size(); ++b) {
        double prod = 1.0;
        for (std::size_t i = 0; i < whole.size(); ++i) {
            const double v = left[i][0][b][0];
            prod *= std::pow(v, inst.p);
        }
        lhs_acc += std::pow(prod, 1.0 / double(n));
    }
    const double lhs = std::pow(lhs_acc, 1.0 / inst.p);

    // Right side: sqrt(delta)-caps of each cube against w_{B,E}.
    std::vector<std::vector<FrequencyCube>> caps;
    for (const auto& q : cfg.cubes) caps.push_back(dyadic_partition(q, inst.cap()));
    const auto right = cap_box_norms(g, caps, grid, {B}, {inst.p}, inst.E, false);
    double rhs_prod = 1.0;
    for (std::size_t i = 0; i < caps.size(); ++i) {
        double sum2 = 0.0;
        for (const auto& cap : right[i]) {
            const double v = cap[0][0];
            sum2 += v * v;
        }
        rhs_prod *= sum2;
    }
    const double rhs = std::pow(rhs_prod, 1.0 / (2.0 * double(n)));
    if (rhs == 0.0) throw DegenerateInputError("multilinear ratio of a function vanishing on a cube");
    return lhs / rhs;
}

std::vector<CompareRow> linear_vs_multilinear_report(const CompareSpec& spec) {
    std::vector<CompareRow> rows;
    for (const int k : spec.delta_exps) {
        DecouplingInstance inst;
        inst.n = spec.n;
        inst.p = spec.p;
        inst.E = spec.E;
        inst.delta_exp = k;
        inst.samples_per_cap = spec.samples_per_cap;
        inst.grid = spec.grid;
        inst.validate();

        // Default tuple: extreme caps of the sqrt(delta) partition.
        std::vector<FrequencyCube> cubes = spec.cubes;
        if (cubes.empty()) {
            const auto caps = inst.caps();
            if (spec.n == 2) {
                cubes = {caps.front(), caps.back()};
            } else {
                const auto side = caps.front().side;
                const Dyadic one = Dyadic::from_int(1);
                cubes = {
                    make_frequency_cube({Dyadic::from_int(0), Dyadic::from_int(0)}, side),
                    make_frequency_cube({one - side, Dyadic::from_int(0)}, side),
                    make_frequency_cube({Dyadic::from_int(0), one - side}, side),
                };
            }
        }
        const auto cert = transversality(cubes, 4);

        TransverseConfig cfg;
        cfg.cubes = cubes;
        cfg.nu = cert.nu_lower;
        cfg.m = spec.m;
        cfg.delta = Dyadic::pow2(-2 * k);

        CompareRow row;
        row.delta_exp = k;
        row.nu = cert.nu_lower;
        row.mu = cfg.mu().to_double();

        const EstimateResult lin = estimate_constant(inst, spec.trials, spec.seed, spec.workers);
        row.linear_best = lin.best_ratio;
        row.linear_argmax = lin.argmax_kind;

        // Same trial family, no greedy pass, reduced in index order.
        std::vector<double> ratios(static_cast<std::size_t>(spec.trials), 0.0);
        std::vector<std::string> kinds(static_cast<std::size_t>(spec.trials));
        const FrequencyCube domain = unit_cube(spec.n - 1);
        const int M = inst.trial_samples_per_axis();
        parallel_for(static_cast<std::size_t>(spec.trials), resolve_workers(spec.workers), [&](std::size_t i) {
            TestFunctionSpec tf;
            if (i == 0) {
                tf.kind = TestFunctionSpec::Kind::constant;
                kinds[i] = "constant";
            } else if (i == 1) {
                tf.kind = TestFunctionSpec::Kind::single_cap;
                tf.cap = cfg.cubes.front();
                kinds[i] = "single-cap";
            } else if (i % 2 == 0) {
                tf.kind = TestFunctionSpec::Kind::cap_phases;
                tf.cap_scale = inst.cap();
                tf.seed = spec.seed ^ (0xD1B54A32D192ED03ULL * (i + 1));
                kinds[i] = "cap-phases";
            } else {
                tf.kind = TestFunctionSpec::Kind::random_gaussian;
                tf.seed = spec.seed ^ (0xD1B54A32D192ED03ULL * (i + 1));
                kinds[i] = "gaussian";
            }
            const GridFunction g = make_test_function(tf, domain, M);
            try {
                ratios[i] = multilinear_ratio(g, inst, cfg);
            } catch (const DegenerateInputError&) {
                ratios[i] = 0.0; // e.g. single-cap g vanishing on the other cube
            }
        });
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            if (ratios[i] > row.multilinear_best) {
                row.multilinear_best = ratios[i];
                row.multilinear_argmax = kinds[i];
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace declab
