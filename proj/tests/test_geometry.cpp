#include "doctest.h"

#include <cmath>

#include "declab/geometry.hpp"
#include "declab/rng.hpp"

using namespace declab;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("dyadic arithmetic is exact") {
    const Dyadic a(3, 3);  // 3/8
    const Dyadic b(1, 1);  // 1/2
    CHECK(a + b == Dyadic(7, 3));
    CHECK(b - a == Dyadic(1, 3));
    CHECK(a * b == Dyadic(3, 4));
    CHECK(Dyadic::pow2(-3) == Dyadic(1, 3));
    CHECK(Dyadic::pow2(2) == Dyadic::from_int(4));
    CHECK(div_pow2(a, b) == Dyadic(3, 2));
    CHECK(exact_ratio(Dyadic::from_int(1), Dyadic(1, 4)) == 16);
    CHECK(parse_dyadic("3/8") == a);
    CHECK(parse_dyadic("0.375") == a);
    CHECK(parse_dyadic("2") == Dyadic::from_int(2));
    CHECK_THROWS_AS(parse_dyadic("1/3"), InvalidScaleError);
}

TEST_CASE("partition of the unit square at scale 1/2") {
    const auto parts = dyadic_partition(unit_cube(2), Dyadic(1, 1));
    REQUIRE(parts.size() == 4);
    const Dyadic z = Dyadic::from_int(0);
    const Dyadic h(1, 1);
    CHECK(parts[0].corner == std::vector<Dyadic>{z, z});
    CHECK(parts[1].corner == std::vector<Dyadic>{z, h});
    CHECK(parts[2].corner == std::vector<Dyadic>{h, z});
    CHECK(parts[3].corner == std::vector<Dyadic>{h, h});
}

TEST_CASE("identity partition returns the cube itself") {
    const auto Q = make_frequency_cube({Dyadic::from_int(0)}, Dyadic(1, 2));
    const auto parts = dyadic_partition(Q, Dyadic(1, 2));
    REQUIRE(parts.size() == 1);
    CHECK(parts[0] == Q);
}

TEST_CASE("partition at 1/8: exhaustive lattice membership oracle") {
    // 64 cubes, unit total measure, pairwise interior disjoint: every point
    // of a 128^2 cell-center lattice must land in exactly one cube.
    const auto parts = dyadic_partition(unit_cube(2), Dyadic(1, 3));
    REQUIRE(parts.size() == 64);
    std::vector<int> hits(parts.size(), 0);
    for (int i = 0; i < 128; ++i) {
        for (int j = 0; j < 128; ++j) {
            const double x[2] = {(i + 0.5) / 128.0, (j + 0.5) / 128.0};
            int owner = -1;
            for (std::size_t c = 0; c < parts.size(); ++c) {
                if (parts[c].contains(std::span<const double>(x, 2))) {
                    CHECK(owner == -1);
                    owner = int(c);
                }
            }
            REQUIRE(owner >= 0);
            ++hits[static_cast<std::size_t>(owner)];
        }
    }
    for (const int h : hits) CHECK(h == 128 * 128 / 64); // equal measure
}

TEST_CASE("invalid partition scales are rejected") {
    CHECK_THROWS_AS(dyadic_partition(unit_cube(1), Dyadic(3, 3)), InvalidScaleError);
    const auto Q = make_frequency_cube({Dyadic::from_int(0)}, Dyadic(1, 2));
    CHECK_THROWS_AS(dyadic_partition(Q, Dyadic(1, 1)), InvalidScaleError);
}

TEST_CASE("partition property under rejection sampling") {
    const auto Q = make_frequency_cube({Dyadic(1, 2), Dyadic(1, 1)}, Dyadic(1, 2));
    const auto parts = dyadic_partition(Q, Dyadic(1, 4));
    Rng rng(42, 0);
    for (int t = 0; t < 500; ++t) {
        const double x[2] = {0.25 + 0.25 * rng.uniform(), 0.5 + 0.25 * rng.uniform()};
        int hits = 0;
        for (const auto& q : parts)
            if (q.contains(std::span<const double>(x, 2))) ++hits;
        CHECK(hits == 1);
    }
}

TEST_CASE("paraboloid normals") {
    SUBCASE("flat point") {
        const double xi[1] = {0.0};
        const auto n = paraboloid_normal(std::span<const double>(xi, 1));
        CHECK(n[0] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(n[1] == doctest::Approx(-1.0).epsilon(1e-15));
    }
    SUBCASE("n=2 at 1/2") {
        const double xi[1] = {0.5};
        const auto n = paraboloid_normal(std::span<const double>(xi, 1));
        CHECK(n[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));
        CHECK(n[1] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-13));
    }
    SUBCASE("n=3 at (1/2,1/2)") {
        const double xi[2] = {0.5, 0.5};
        const auto n = paraboloid_normal(std::span<const double>(xi, 2));
        const double r = 1.0 / std::sqrt(3.0);
        CHECK(n[0] == doctest::Approx(r).epsilon(1e-13));
        CHECK(n[1] == doctest::Approx(r).epsilon(1e-13));
        CHECK(n[2] == doctest::Approx(-r).epsilon(1e-13));
    }
    SUBCASE("unit norm everywhere") {
        Rng rng(3, 1);
        for (int t = 0; t < 100; ++t) {
            const double xi[2] = {rng.uniform(), rng.uniform()};
            const auto n = paraboloid_normal(std::span<const double>(xi, 2));
            double s = 0.0;
            for (const double v : n) s += v * v;
            CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("transversality of identical cubes vanishes") {
    const auto q = make_frequency_cube({Dyadic(1, 2)}, Dyadic(1, 2));
    const std::vector<FrequencyCube> cubes{q, q};
    CHECK(transversality(cubes, 4).nu_lower == 0.0);
}

TEST_CASE("transversality of separated intervals matches the analytic minimum") {
    // For cubes [0,1/4] and [3/4,1] the determinant 2(xi2-xi1)/sqrt((1+4 xi1^2)(1+4 xi2^2))
    // is minimized at the inner corners xi1=1/4, xi2=3/4.
    const std::vector<FrequencyCube> cubes{
        make_frequency_cube({Dyadic::from_int(0)}, Dyadic(1, 2)),
        make_frequency_cube({Dyadic(3, 2)}, Dyadic(1, 2)),
    };
    const double expected = 2.0 * 0.5 / std::sqrt((1.0 + 4.0 * 0.0625) * (1.0 + 4.0 * 0.5625));

    const auto coarse = transversality(cubes, 5); // endpoints included
    CHECK(coarse.nu_lower == doctest::Approx(expected).epsilon(1e-12));

    // Brute force over a 64-point refinement confirms the coarse sample.
    double brute = 1e9;
    for (int i = 0; i <= 64; ++i) {
        for (int j = 0; j <= 64; ++j) {
            const double x1 = 0.25 * i / 64.0;
            const double x2 = 0.75 + 0.25 * j / 64.0;
            const double det =
                2.0 * (x2 - x1) / std::sqrt((1.0 + 4.0 * x1 * x1) * (1.0 + 4.0 * x2 * x2));
            brute = std::min(brute, det);
        }
    }
    CHECK(coarse.nu_lower == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("transversality of three corner squares is positive") {
    const Dyadic z = Dyadic::from_int(0);
    const Dyadic a(3, 2);
    const std::vector<FrequencyCube> cubes{
        make_frequency_cube({z, z}, Dyadic(1, 2)),
        make_frequency_cube({a, z}, Dyadic(1, 2)),
        make_frequency_cube({z, a}, Dyadic(1, 2)),
    };
    CHECK(transversality(cubes, 8).nu_lower > 0.0);
}

TEST_CASE("transversality never increases along nested refinements") {
    const std::vector<FrequencyCube> cubes{
        make_frequency_cube({Dyadic::from_int(0)}, Dyadic(1, 2)),
        make_frequency_cube({Dyadic(1, 1)}, Dyadic(1, 2)),
    };
    // Densities 2 -> 3 -> 5 -> 9 nest (each lattice refines the previous).
    double prev = transversality(cubes, 2).nu_lower;
    for (const int d : {3, 5, 9}) {
        const double cur = transversality(cubes, d).nu_lower;
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
}

TEST_CASE("parabolic rescaling of the unit cube is the identity") {
    const auto maps = parabolic_rescale_maps(unit_cube(2));
    CHECK(maps.sigma == Dyadic::from_int(1));
    const double x[3] = {1.5, -2.0, 0.75};
    const auto y = maps.space_apply(std::span<const double>(x, 3));
    for (int i = 0; i < 3; ++i) CHECK(y[static_cast<std::size_t>(i)] == x[i]);
}

TEST_CASE("parabolic rescaling of [1/2, 3/4]") {
    const auto Q = make_frequency_cube({Dyadic(1, 1)}, Dyadic(1, 2));
    const auto maps = parabolic_rescale_maps(Q);
    CHECK(maps.sigma == Dyadic(1, 4));

    // Frequency side: L(xi) = 4 xi - 2, corners map to corners exactly.
    const std::vector<std::pair<Dyadic, Dyadic>> pairs{
        {Dyadic(1, 1), Dyadic::from_int(0)},
        {Dyadic(5, 3), Dyadic(1, 1)},
        {Dyadic(3, 2), Dyadic::from_int(1)},
    };
    for (const auto& [xi, want] : pairs) {
        const std::vector<Dyadic> pt{xi};
        CHECK(maps.freq_apply(std::span<const Dyadic>(pt))[0] == want);
    }

    // Spatial side: T(x1, x2) = ((x1 + x2)/4, x2/16).
    const double x[2] = {2.0, 3.0};
    const auto y = maps.space_apply(std::span<const double>(x, 2));
    CHECK(y[0] == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(3.0 / 16.0).epsilon(1e-15));

    // Jacobian determinant sigma^{(n+1)/2} = (1/16)^{3/2}.
    CHECK(maps.space_det() == doctest::Approx(std::pow(1.0 / 16.0, 1.5)).epsilon(1e-14));
}

TEST_CASE("rescaling round trip on random points") {
    const auto Q = make_frequency_cube({Dyadic(1, 2), Dyadic(0, 0)}, Dyadic(1, 2));
    const auto maps = parabolic_rescale_maps(Q);
    Rng rng(17, 5);
    for (int t = 0; t < 100; ++t) {
        double x[3];
        for (auto& v : x) v = 20.0 * rng.uniform() - 10.0;
        const auto y = maps.space_apply(std::span<const double>(x, 3));
        const auto b = maps.space_apply_inverse(y);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(b[static_cast<std::size_t>(i)] - x[i]) < 1e-12);
    }
}

TEST_CASE("rescaling rejects caps outside the unit cube") {
    FrequencyCube Q;
    Q.corner = {Dyadic(3, 1)}; // 3/2
    Q.side = Dyadic(1, 1);
    CHECK_THROWS_AS(parabolic_rescale_maps(Q), DomainError);
}

TEST_CASE("cube construction validates alignment") {
    CHECK_THROWS_AS(make_frequency_cube({Dyadic(1, 3)}, Dyadic(1, 2)), InvalidScaleError);
    CHECK_THROWS_AS(make_frequency_cube({Dyadic(7, 3)}, Dyadic(1, 2)), DomainError);
    CHECK_NOTHROW(make_frequency_cube({Dyadic(1, 2)}, Dyadic(1, 2)));
}

TEST_SUITE_END();
