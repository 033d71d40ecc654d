#include <cmath>
#include <functional>

#include "declab/rng.hpp"
#include "declab/runner.hpp"

namespace declab {

namespace {

struct Check {
    std::string name;
    std::function<void()> body; // throws with a message on failure
};

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool cond, const std::string& msg) {
    if (!cond) throw CheckFailure(msg);
}

void expect_near(double a, double b, double tol, const std::string& what) {
    if (std::abs(a - b) > tol)
        throw CheckFailure(what + ": " + format_double(a) + " vs " + format_double(b));
}

std::vector<Check> build_checks() {
    std::vector<Check> checks;
    auto add = [&](std::string name, std::function<void()> body) {
        checks.push_back({std::move(name), std::move(body)});
    };

    add("identity partition", [] {
        const auto Q = make_frequency_cube({Dyadic::from_int(0)}, Dyadic(1, 2));
        const auto parts = dyadic_partition(Q, Dyadic(1, 2));
        expect(parts.size() == 1 && parts[0] == Q, "expected the cube itself");
    });

    add("2x2 partition corners", [] {
        const auto parts = dyadic_partition(unit_cube(2), Dyadic(1, 1));
        expect(parts.size() == 4, "expected 4 cubes");
        const Dyadic h(1, 1);
        const Dyadic z = Dyadic::from_int(0);
        expect(parts[0].corner == std::vector<Dyadic>{z, z} &&
                   parts[1].corner == std::vector<Dyadic>{z, h} &&
                   parts[2].corner == std::vector<Dyadic>{h, z} &&
                   parts[3].corner == std::vector<Dyadic>{h, h},
               "lexicographic corner order violated");
    });

    add("partition covers points uniquely", [] {
        const auto parts = dyadic_partition(unit_cube(2), Dyadic(1, 3));
        Rng rng(2024, 1);
        for (int i = 0; i < 200; ++i) {
            const double x[2] = {rng.uniform(), rng.uniform()};
            int hits = 0;
            for (const auto& q : parts)
                if (q.contains(std::span<const double>(x, 2))) ++hits;
            expect(hits == 1, "interior point not covered exactly once");
        }
    });

    add("normal at the origin", [] {
        const double xi[1] = {0.0};
        const auto n = paraboloid_normal(std::span<const double>(xi, 1));
        expect_near(n[0], 0.0, 1e-15, "n_x");
        expect_near(n[1], -1.0, 1e-15, "n_y");
    });

    add("normal at one half", [] {
        const double xi[1] = {0.5};
        const auto n = paraboloid_normal(std::span<const double>(xi, 1));
        expect_near(n[0], 1.0 / std::sqrt(2.0), 1e-12, "n_x");
        expect_near(n[1], -1.0 / std::sqrt(2.0), 1e-12, "n_y");
    });

    add("normals are unit vectors", [] {
        Rng rng(7, 2);
        for (int i = 0; i < 50; ++i) {
            const double xi[2] = {rng.uniform(), rng.uniform()};
            const auto n = paraboloid_normal(std::span<const double>(xi, 2));
            double s = 0.0;
            for (const double v : n) s += v * v;
            expect_near(std::sqrt(s), 1.0, 1e-12, "|n|");
        }
    });

    add("identical cubes are not transverse", [] {
        const auto q = make_frequency_cube({Dyadic::from_int(0)}, Dyadic(1, 2));
        const std::vector<FrequencyCube> pair{q, q};
        expect(transversality(pair, 3).nu_lower == 0.0, "repeated normals must give zero");
    });

    add("rescale maps: unit cube is the identity", [] {
        const auto maps = parabolic_rescale_maps(unit_cube(1));
        const double x[2] = {3.25, -1.5};
        const auto y = maps.space_apply(std::span<const double>(x, 2));
        expect_near(y[0], x[0], 0.0, "x1");
        expect_near(y[1], x[1], 0.0, "x2");
    });

    add("rescale maps on [1/2,3/4]", [] {
        const auto Q = make_frequency_cube({Dyadic(1, 1)}, Dyadic(1, 2));
        const auto maps = parabolic_rescale_maps(Q);
        expect(maps.sigma == Dyadic(1, 4), "sigma must be 1/16");
        const std::vector<Dyadic> lo{Dyadic(1, 1)};
        const std::vector<Dyadic> hi{Dyadic(3, 2)};
        expect(maps.freq_apply(std::span<const Dyadic>(lo))[0] == Dyadic::from_int(0),
               "corner must map to 0");
        expect(maps.freq_apply(std::span<const Dyadic>(hi))[0] == Dyadic::from_int(1),
               "corner must map to 1");
        const double x[2] = {1.0, 2.0};
        const auto y = maps.space_apply(std::span<const double>(x, 2));
        expect_near(y[0], 0.75, 1e-15, "(x1+x2)/4");
        expect_near(y[1], 0.125, 1e-15, "x2/16");
    });

    add("rescale round trip", [] {
        const auto Q = make_frequency_cube({Dyadic(1, 2), Dyadic(1, 1)}, Dyadic(1, 2));
        const auto maps = parabolic_rescale_maps(Q);
        Rng rng(11, 3);
        for (int i = 0; i < 20; ++i) {
            const double x[3] = {20.0 * rng.uniform() - 10.0, 20.0 * rng.uniform() - 10.0,
                                 20.0 * rng.uniform() - 10.0};
            const auto y = maps.space_apply(std::span<const double>(x, 3));
            const auto back = maps.space_apply_inverse(y);
            for (int a = 0; a < 3; ++a) expect_near(back[static_cast<std::size_t>(a)], x[a], 1e-12, "inverse");
        }
    });

    add("constant test function", [] {
        const auto g = make_constant(unit_cube(2), 4);
        expect(g.values.size() == 16, "expected 16 cells");
        for (const auto& v : g.values) expect(v == cd(1.0, 0.0), "all cells must equal 1");
    });

    add("gaussian draws are deterministic", [] {
        const auto a = make_random_gaussian(unit_cube(1), 32, 7);
        const auto b = make_random_gaussian(unit_cube(1), 32, 7);
        expect(a.values == b.values, "same seed must give identical arrays");
    });

    add("extension of 1 at the origin", [] {
        const auto Q = make_frequency_cube({Dyadic(1, 1)}, Dyadic(1, 1));
        const auto g = make_constant(Q, 8);
        SpatialPointSet pts;
        pts.points.push_back({0.0, 0.0});
        const auto v = evaluate_extension(g, pts);
        expect_near(std::abs(v[0]), 0.5, 1e-12, "|E1(0)| = |Q|");
    });

    add("point mass field is unimodular", [] {
        const auto g = make_point_mass_lattice(unit_cube(1), 16, 5);
        Rng rng(5, 4);
        for (int i = 0; i < 5; ++i) {
            SpatialPointSet pts;
            pts.points.push_back({50.0 * rng.uniform(), 50.0 * rng.uniform()});
            expect_near(std::abs(evaluate_extension(g, pts)[0]), 1.0, 1e-12, "|E g|");
        }
    });

    add("extension is linear", [] {
        const auto g1 = make_random_gaussian(unit_cube(1), 16, 1);
        auto g2 = make_random_gaussian(unit_cube(1), 16, 2);
        auto combo = g1;
        const cd alpha(0.3, -1.1);
        const cd beta(-2.0, 0.7);
        for (std::size_t i = 0; i < combo.values.size(); ++i)
            combo.values[i] = alpha * g1.values[i] + beta * g2.values[i];
        SpatialPointSet pts;
        pts.points.push_back({3.7, -0.3});
        const cd lhs = evaluate_extension(combo, pts)[0];
        const cd rhs = alpha * evaluate_extension(g1, pts)[0] + beta * evaluate_extension(g2, pts)[0];
        expect_near(std::abs(lhs - rhs), 0.0, 1e-12, "linearity");
    });

    add("cap additivity of the extension", [] {
        const auto g = make_random_gaussian(unit_cube(1), 16, 3);
        SpatialPointSet pts;
        pts.points.push_back({1.25, -2.0});
        const cd whole = evaluate_extension(g, pts)[0];
        cd sum(0.0, 0.0);
        for (const auto& cap : dyadic_partition(unit_cube(1), Dyadic(1, 2)))
            sum += evaluate_extension(restrict_to_cap(g, cap), pts)[0];
        expect_near(std::abs(whole - sum), 0.0, 1e-12, "sum over caps");
    });

    add("weight equals 1 at the center", [] {
        const WeightSpec w{centered_cube(2, 8.0), 8.0, false};
        const double x[2] = {0.0, 0.0};
        expect_near(weight_value(w, std::span<const double>(x, 2)), 1.0, 0.0, "w(c)");
    });

    add("weight at distance R", [] {
        const WeightSpec w{centered_cube(2, 8.0), 6.0, false};
        const double x[2] = {8.0, 0.0};
        expect_near(weight_value(w, std::span<const double>(x, 2)), std::pow(2.0, -6.0), 1e-15,
                    "w = 2^{-E}");
    });

    add("weight monotone in the exponent", [] {
        const WeightSpec w1{centered_cube(2, 4.0), 4.0, false};
        const WeightSpec w2{centered_cube(2, 4.0), 9.0, false};
        Rng rng(9, 6);
        for (int i = 0; i < 20; ++i) {
            const double x[2] = {30.0 * rng.uniform() - 15.0, 30.0 * rng.uniform() - 15.0};
            expect(weight_value(w1, std::span<const double>(x, 2)) >=
                       weight_value(w2, std::span<const double>(x, 2)),
                   "larger E must not increase the weight");
        }
    });

    add("weighted norm homogeneity", [] {
        const SpatialGrid grid{centered_cube(1, 2.0), 4.0, 0.5};
        std::vector<cd> f(static_cast<std::size_t>(grid.total()), cd(1.0, 0.5));
        auto f2 = f;
        for (auto& v : f2) v *= 2.0;
        const WeightSpec w{grid.cube, 4.0, false};
        const double n1 = weighted_norm(f, grid, 3.0, w, false);
        const double n2 = weighted_norm(f2, grid, 3.0, w, false);
        expect_near(n2, 2.0 * n1, 1e-12 * n2, "||2f|| = 2||f||");
    });

    add("normalized indicator norm is 1", [] {
        const SpatialGrid grid{centered_cube(2, 4.0), 4.0, 0.5};
        std::vector<cd> f(static_cast<std::size_t>(grid.total()), cd(1.0, 0.0));
        const WeightSpec w{grid.cube, 8.0, true};
        expect_near(weighted_norm(f, grid, 2.0, w, true), 1.0, 1e-12, "sharp norm of 1 on B");
    });

    add("single-cap decoupling ratio is 1", [] {
        DecouplingInstance inst;
        inst.delta_exp = 1;
        inst.samples_per_cap = 4;
        const auto caps = inst.caps();
        const auto g = make_cap_indicator(unit_cube(1), inst.trial_samples_per_axis(), caps[1]);
        expect_near(decoupling_ratio(g, inst), 1.0, 1e-12, "one term on each side");
    });

    add("estimate includes the single-cap floor", [] {
        DecouplingInstance inst;
        inst.delta_exp = 1;
        inst.samples_per_cap = 4;
        const auto est = estimate_constant(inst, 2, 1, 1);
        expect(est.best_ratio >= 1.0 - 1e-12, "max over trials must reach 1");
    });

    add("kappa endpoints", [] {
        for (int n = 2; n <= 4; ++n) {
            expect_near(kappa(2.0 * n / double(n - 1), n), 0.0, 1e-12, "kappa at 2n/(n-1)");
            expect_near(kappa(2.0 * (n + 1) / double(n - 1), n), 0.5, 1e-12,
                        "kappa at the critical index");
        }
        expect_near(kappa(2.0, 3), 0.0, 0.0, "convention branch at p=2");
    });

    add("power average equals D2 on the trivial partition", [] {
        TransverseConfig cfg;
        cfg.cubes = {make_frequency_cube({Dyadic::from_int(0)}, Dyadic(1, 2)),
                     make_frequency_cube({Dyadic(1, 1)}, Dyadic(1, 2))};
        cfg.nu = transversality(cfg.cubes, 3).nu_lower;
        cfg.m = 1;
        cfg.delta = Dyadic(1, 2);
        const auto g = make_random_gaussian(unit_cube(1), 16, 13);
        const auto B = centered_cube(2, 4.0);
        const double A = multilinear_A(4.0, 1, B, 1, g, cfg, 8.0);
        const double D = multilinear_D(2.0, 1, B, g, cfg, 8.0);
        expect_near(A, D, 1e-12 * std::max(1.0, D), "A(q,B,r) vs D_2(q,B)");
    });

    add("bootstrap bound vanishes with eta", [] {
        for (int m = 1; m <= 20; ++m)
            expect(bootstrap_bound(0.0, m, 4.0, 2) == 0.0, "eta = 0 must give 0");
    });

    add("bootstrap bound growth at kappa 0", [] {
        expect_near(bootstrap_bound(0.1, 4, 4.0, 2), 1.6, 1e-12, "eta 2^m");
    });

    add("kakeya amplitude homogeneity", [] {
        std::vector<std::vector<Tile>> fams;
        fams.push_back({make_tile({0.0, 0.0}, {1.0, 0.0}, 16.0)});
        fams.push_back({make_tile({0.0, 0.0}, {0.0, 1.0}, 16.0)});
        const auto base = kakeya_check(fams, 16.0, 0.9, 1.0, 1);
        fams[0][0].amplitude = 3.0;
        const auto scaled = kakeya_check(fams, 16.0, 0.9, 1.0, 1);
        expect_near(scaled.lhs, 3.0 * base.lhs, 1e-12 * scaled.lhs, "lhs homogeneity");
        expect_near(scaled.rhs, 3.0 * base.rhs, 1e-12 * scaled.rhs, "rhs homogeneity");
        expect_near(scaled.ratio, base.ratio, 1e-12, "ratio invariance");
    });

    add("broad-narrow single dominant cap", [] {
        const auto caps = dyadic_partition(unit_cube(2), Dyadic(1, 4));
        std::vector<double> c(caps.size(), 0.0);
        c[37] = 1.0;
        const auto cls = broad_narrow_classify(caps, c, 16.0, 4.0);
        expect(cls.scenario == Scenario::single_cap && cls.alpha_star == 37,
               "full mass in one cap must be scenario 1");
    });

    add("eta fit recovers an exact slope", [] {
        std::vector<std::pair<double, double>> rows;
        for (int k = 1; k <= 4; ++k) {
            const double delta = std::pow(0.25, k);
            rows.emplace_back(delta, std::pow(delta, -0.5));
        }
        const auto fit = fit_eta(rows);
        expect_near(fit.eta_hat, 0.5, 1e-12, "slope");
        expect_near(fit.residual, 0.0, 1e-12, "residual");
    });

    add("eta fit of constant ratios", [] {
        std::vector<std::pair<double, double>> rows = {{0.25, 2.0}, {0.0625, 2.0}, {0.015625, 2.0}};
        expect_near(fit_eta(rows).eta_hat, 0.0, 1e-12, "flat data");
    });

    return checks;
}

} // namespace

std::vector<CheckResult> run_verify_suite() {
    std::vector<CheckResult> out;
    for (const auto& check : build_checks()) {
        CheckResult r;
        r.name = check.name;
        try {
            check.body();
            r.pass = true;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace declab
