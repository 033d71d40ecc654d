#include "declab/fields.hpp"

#include <cmath>

#include "declab/rng.hpp"

namespace declab {

cd unit_phase_turns(double turns) {
    const double t = turns - std::floor(turns);
    const double th = 2.0 * M_PI * t;
    return {std::cos(th), std::sin(th)};
}

std::vector<Dyadic> GridFunction::freq_exact(std::int64_t flat) const {
    const int d = dim();
    const int M = samples_per_axis;
    std::vector<Dyadic> xi(static_cast<std::size_t>(d));
    // Uniform spacing side/M is dyadic only for power-of-two M; fall back to
    // doubles is handled by callers that need it. Here M must be a power of
    // two for exactness; make_* constructors accept any M >= 1 and freq()
    // covers the general case.
    for (int axis = d - 1; axis >= 0; --axis) {
        const std::int64_t i = flat % M;
        flat /= M;
        // corner + (i + offset) * side / M with offset 1/2 (continuum) or 0.
        Dyadic step = cube.side; // side / M when M is a power of two
        Dyadic idx = (model == FieldModel::continuum) ? Dyadic(2 * i + 1, 1) : Dyadic::from_int(i);
        Dyadic m(M, 0);
        if (!m.is_pow2()) throw InvalidScaleError("exact frequencies need power-of-two M");
        xi[static_cast<std::size_t>(axis)] = cube.corner[static_cast<std::size_t>(axis)] + idx * div_pow2(step, m);
    }
    return xi;
}

std::vector<double> GridFunction::freq(std::int64_t flat) const {
    const int d = dim();
    const int M = samples_per_axis;
    const double h = cube.side.to_double() / double(M);
    const double off = (model == FieldModel::continuum) ? 0.5 : 0.0;
    std::vector<double> xi(static_cast<std::size_t>(d));
    for (int axis = d - 1; axis >= 0; --axis) {
        const std::int64_t i = flat % M;
        flat /= M;
        xi[static_cast<std::size_t>(axis)] = cube.corner[static_cast<std::size_t>(axis)].to_double() + (double(i) + off) * h;
    }
    return xi;
}

double GridFunction::cell_weight() const {
    if (model == FieldModel::lattice) return 1.0;
    return std::pow(cube.side.to_double() / double(samples_per_axis), dim());
}

bool GridFunction::is_zero() const {
    for (const auto& v : values)
        if (v != cd(0.0, 0.0)) return false;
    return true;
}

namespace {

GridFunction blank(const FrequencyCube& Q, int M, FieldModel model) {
    if (M < 1) throw DomainError("samples_per_axis must be >= 1");
    GridFunction g;
    g.cube = Q;
    g.samples_per_axis = M;
    g.model = model;
    std::int64_t cells = 1;
    for (int d = 0; d < Q.dim(); ++d) cells *= M;
    g.values.assign(static_cast<std::size_t>(cells), cd(0.0, 0.0));
    return g;
}

} // namespace

GridFunction make_constant(const FrequencyCube& Q, int M) {
    GridFunction g = blank(Q, M, FieldModel::continuum);
    for (auto& v : g.values) v = cd(1.0, 0.0);
    return g;
}

GridFunction make_cap_indicator(const FrequencyCube& Q, int M, const FrequencyCube& cap) {
    GridFunction g = blank(Q, M, FieldModel::continuum);
    for (std::int64_t i = 0; i < g.cell_count(); ++i) {
        const auto xi = g.freq(i);
        if (cap.contains(xi)) g.values[static_cast<std::size_t>(i)] = cd(1.0, 0.0);
    }
    return g;
}

GridFunction make_random_gaussian(const FrequencyCube& Q, int M, std::uint64_t seed) {
    GridFunction g = blank(Q, M, FieldModel::continuum);
    Rng rng(seed, 0x6761757373ULL);
    for (auto& v : g.values) v = rng.complex_gaussian();
    return g;
}

GridFunction make_point_mass_lattice(const FrequencyCube& Q, int M, std::uint64_t seed) {
    GridFunction g = blank(Q, M, FieldModel::lattice);
    Rng rng(seed, 0x706d61737355ULL);
    const std::uint64_t cell = rng.next_u64() % std::uint64_t(g.cell_count());
    g.values[static_cast<std::size_t>(cell)] = cd(1.0, 0.0);
    return g;
}

GridFunction make_cap_phases(const FrequencyCube& Q, int M, Dyadic cap_scale, std::uint64_t seed) {
    GridFunction g = blank(Q, M, FieldModel::continuum);
    const auto caps = dyadic_partition(Q, cap_scale);
    Rng rng(seed, 0x70686173ULL);
    std::vector<cd> phase(caps.size());
    for (auto& ph : phase) ph = rng.unit_phase();
    for (std::int64_t i = 0; i < g.cell_count(); ++i) {
        const auto xi = g.freq(i);
        for (std::size_t c = 0; c < caps.size(); ++c) {
            if (caps[c].contains(xi)) {
                g.values[static_cast<std::size_t>(i)] = phase[c];
                break;
            }
        }
    }
    return g;
}

GridFunction make_test_function(const TestFunctionSpec& spec, const FrequencyCube& Q, int M) {
    using Kind = TestFunctionSpec::Kind;
    switch (spec.kind) {
        case Kind::constant: return make_constant(Q, M);
        case Kind::single_cap: return make_cap_indicator(Q, M, spec.cap);
        case Kind::random_gaussian: return make_random_gaussian(Q, M, spec.seed);
        case Kind::point_mass_lattice: return make_point_mass_lattice(Q, M, spec.seed);
        case Kind::cap_phases: return make_cap_phases(Q, M, spec.cap_scale, spec.seed);
    }
    throw DomainError("unknown test function kind");
}

namespace {

cd eval_point_direct(const GridFunction& g, std::span<const double> x) {
    const int d = g.dim();
    const double w = g.cell_weight();
    cd acc(0.0, 0.0);
    for (std::int64_t i = 0; i < g.cell_count(); ++i) {
        const cd v = g.values[static_cast<std::size_t>(i)];
        if (v == cd(0.0, 0.0)) continue;
        const auto xi = g.freq(i);
        double phase = 0.0;
        double sq = 0.0;
        for (int a = 0; a < d; ++a) {
            phase += xi[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
            sq += xi[static_cast<std::size_t>(a)] * xi[static_cast<std::size_t>(a)];
        }
        phase += sq * x[static_cast<std::size_t>(d)];
        acc += v * unit_phase_turns(phase);
    }
    return acc * w;
}

cd eval_point_separable(const GridFunction& g, std::span<const double> x) {
    const int d = g.dim();
    const int M = g.samples_per_axis;
    const double w = g.cell_weight();
    const double xn = x[static_cast<std::size_t>(d)];
    const double h = g.cube.side.to_double() / double(M);
    const double off = (g.model == FieldModel::continuum) ? 0.5 : 0.0;

    // Per-axis tables e(xi_a x_a + xi_a^2 x_n); their product is the full phase.
    std::vector<std::vector<cd>> tab(static_cast<std::size_t>(d), std::vector<cd>(static_cast<std::size_t>(M)));
    for (int a = 0; a < d; ++a) {
        const double c = g.cube.corner[static_cast<std::size_t>(a)].to_double();
        for (int i = 0; i < M; ++i) {
            const double xi = c + (double(i) + off) * h;
            tab[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] = unit_phase_turns(xi * x[static_cast<std::size_t>(a)] + xi * xi * xn);
        }
    }

    cd acc(0.0, 0.0);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::int64_t flat = 0;
    while (true) {
        const cd v = g.values[static_cast<std::size_t>(flat)];
        if (v != cd(0.0, 0.0)) {
            cd ph(1.0, 0.0);
            for (int a = 0; a < d; ++a) ph *= tab[static_cast<std::size_t>(a)][static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
            acc += v * ph;
        }
        ++flat;
        int axis = d - 1;
        while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == M) {
            idx[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return acc * w;
}

} // namespace

std::vector<cd> evaluate_extension(const GridFunction& g, const SpatialPointSet& points,
                                   EvalMethod method) {
    std::vector<cd> out;
    out.reserve(points.points.size());
    for (const auto& x : points.points) {
        if (int(x.size()) != g.dim() + 1)
            throw DomainError("spatial point dimension must be n = freq dim + 1");
        out.push_back(method == EvalMethod::direct ? eval_point_direct(g, x)
                                                   : eval_point_separable(g, x));
    }
    return out;
}

GridFunction restrict_to_cap(const GridFunction& g, const FrequencyCube& cap) {
    GridFunction out = g;
    for (std::int64_t i = 0; i < g.cell_count(); ++i) {
        if (!cap.contains(g.freq(i))) out.values[static_cast<std::size_t>(i)] = cd(0.0, 0.0);
    }
    return out;
}

CovarianceCheck rescaling_covariance_check(const GridFunction& g, const FrequencyCube& Q,
                                           std::span<const double> x) {
    if (g.model != FieldModel::continuum)
        throw DomainError("covariance check applies to the continuum (quadrature) model");
    if (!g.cube.inside(Q)) throw DomainError("g must live on a subcube of Q");
    const auto maps = parabolic_rescale_maps(Q);

    SpatialPointSet left;
    left.points.push_back(std::vector<double>(x.begin(), x.end()));
    const double lhs = std::abs(evaluate_extension(g, left)[0]);

    // Pull g back through the frequency map: cell centers map to cell
    // centers, so the sample array transports unchanged.
    GridFunction gl = g;
    gl.cube = maps.freq_apply(g.cube);

    SpatialPointSet right;
    right.points.push_back(maps.space_apply(x));
    const int d = g.dim();
    const double scale = std::pow(maps.sqrt_sigma.to_double(), d);
    const double rhs = scale * std::abs(evaluate_extension(gl, right)[0]);

    CovarianceCheck chk;
    chk.lhs = lhs;
    chk.rhs = rhs;
    const double denom = std::max(std::abs(lhs), std::abs(rhs));
    chk.relerr = denom > 0.0 ? std::abs(lhs - rhs) / denom : 0.0;
    return chk;
}

namespace {

nlohmann::ordered_json dyadic_json(const Dyadic& d) {
    return nlohmann::ordered_json{{"num", d.num}, {"exp2", d.exp2}};
}

Dyadic dyadic_from_json(const nlohmann::json& j) {
    return Dyadic(j.at("num").get<std::int64_t>(), j.at("exp2").get<int>());
}

} // namespace

nlohmann::ordered_json to_json(const GridFunction& g) {
    nlohmann::ordered_json cube;
    cube["side"] = dyadic_json(g.cube.side);
    auto corners = nlohmann::ordered_json::array();
    for (const auto& c : g.cube.corner) corners.push_back(dyadic_json(c));
    cube["corner"] = std::move(corners);

    auto vals = nlohmann::ordered_json::array();
    for (const auto& v : g.values) vals.push_back({v.real(), v.imag()});

    return nlohmann::ordered_json{
        {"cube", std::move(cube)},
        {"M", g.samples_per_axis},
        {"model", g.model == FieldModel::continuum ? "continuum" : "lattice"},
        {"values", std::move(vals)},
    };
}

GridFunction grid_function_from_json(const nlohmann::json& j) {
    std::vector<Dyadic> corner;
    for (const auto& c : j.at("cube").at("corner")) corner.push_back(dyadic_from_json(c));
    GridFunction g;
    g.cube = make_frequency_cube(std::move(corner), dyadic_from_json(j.at("cube").at("side")));
    g.samples_per_axis = j.at("M").get<int>();
    g.model = j.at("model").get<std::string>() == "lattice" ? FieldModel::lattice
                                                            : FieldModel::continuum;
    for (const auto& v : j.at("values")) g.values.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    if (std::int64_t(g.values.size()) != g.cell_count())
        throw DomainError("value count does not match the sample grid");
    return g;
}

} // namespace declab
