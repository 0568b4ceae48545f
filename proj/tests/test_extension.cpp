#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "nlhomog/errors.hpp"
#include "nlhomog/extension.hpp"

using namespace nlhomog;

namespace {

const Perforation hole = Perforation::ball({0.5, 0.5}, 0.25);

std::vector<double> random_field(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("extension keeps E and constants") {
    const auto op = make_extension(hole, 0.08, 16);
    const auto g = build_grid(hole, 16, 3);
    Rng rng(1);
    const auto u = random_field(g.size(), rng);
    const auto v = extend(u, g, op);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.mask[i]) REQUIRE(v[i] == u[i]);

    const std::vector<double> c(g.size(), 2.5);
    for (double x : extend(c, g, op)) REQUIRE(x == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("extension is linear") {
    const auto op = make_extension(hole, 0.08, 16);
    const auto g = build_grid(hole, 16, 2);
    Rng rng(2);
    const auto u = random_field(g.size(), rng);
    const auto w = random_field(g.size(), rng);
    std::vector<double> mix(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) mix[i] = 2.0 * u[i] - 0.5 * w[i];
    const auto eu = extend(u, g, op), ew = extend(w, g, op), em = extend(mix, g, op);
    for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(em[i] == doctest::Approx(2.0 * eu[i] - 0.5 * ew[i]));
}

TEST_CASE("collar values interpolate between the reflection and the mean") {
    const auto op = make_extension(hole, 0.08, 16);
    const auto g = build_grid(hole, 16, 1);
    Rng rng(3);
    const auto u = random_field(g.size(), rng);
    const auto v = extend(u, g, op);
    double mean = 0.0;
    for (std::size_t r : op.collar.reflected) mean += u[r];
    mean /= static_cast<double>(op.collar.reflected.size());
    for (std::size_t k = 0; k < op.collar.inner.size(); ++k) {
        const double phi = 1.0 - op.collar.depth[k] / op.tau;
        REQUIRE(v[op.collar.inner[k]] == doctest::Approx(phi * u[op.collar.reflected[k]] + (1 - phi) * mean));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.mask[i]) continue;
        bool collar = false;
        for (std::size_t j : op.collar.inner) collar |= (j == i);
        if (!collar) REQUIRE(v[i] == doctest::Approx(mean));
    }
}

TEST_CASE("extension rejects bad input") {
    const auto op = make_extension(hole, 0.08, 16);
    const auto g = build_grid(hole, 16, 1);
    std::vector<double> u(g.size(), 0.0);
    std::size_t first_e = 0;
    while (!g.mask[first_e]) ++first_e;
    u[first_e] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(extend(u, g, op), std::invalid_argument);
    CHECK_THROWS_AS(extend(u, build_grid(hole, 8, 1), op), DimensionError);
    CHECK_THROWS_AS(make_extension(hole, 0.1, 16), GeometryError);
    CHECK_THROWS_AS(make_extension(hole, 0.08, 4), GeometryError);
}

TEST_CASE("energy ratios") {
    const auto op = make_extension(hole, 0.08, 16);
    const auto g = build_grid(hole, 16, 4);
    Rng rng(4);
    const auto u = random_field(g.size(), rng);
    const double ratio = energy_ratio(u, g, op, 0.08, 0.5, std::sqrt(2.0));
    CHECK(ratio > 0.0);
    CHECK(std::isfinite(ratio));

    ExtensionWindow w;
    w.origin = {0, 0};
    w.M = 4;
    w.margin = 0.0;
    const auto r = extension_ratios(u, g, op, w, 0.08, 0.5);
    CHECK(r.l2_ratio() >= 1.0);  // the whole box includes E itself

    // a constant field has zero energy on both sides
    const std::vector<double> c(g.size(), 1.0);
    CHECK(energy_ratio(c, g, op, 0.08, 0.5, 0.0) == 0.0);

    // r0 shorter than the lattice spacing leaves no pair on the right side
    CHECK_THROWS_AS(energy_ratio(u, g, op, 0.08, 0.01, 0.0), DegenerateInputError);
}

TEST_CASE("sampled extension constants are reproducible") {
    const auto op = make_extension(hole, 0.08, 16);
    ExtensionSampling s;
    Rng a(7), b(7);
    const auto ca = extension_constants(op, s, 0.5, 10, a);
    const auto cb = extension_constants(op, s, 0.5, 10, b);
    CHECK(ca.C_energy == cb.C_energy);
    CHECK(ca.C_L2 == cb.C_L2);
    CHECK(ca.M == 4);
    CHECK(ca.C_energy > 0.0);
    Rng c(7);
    CHECK_THROWS_AS(extension_constants(op, s, 0.3, 1, c), std::invalid_argument);
}

TEST_CASE("localization constant") {
    // four points on a line, spacing 1
    const std::vector<double> line = {0, 0, 1, 0, 2, 0, 3, 0};
    Rng rng(5);
    const auto all = localization_constant(line, 2, 10.0, 20, rng);
    CHECK(all.c_r == doctest::Approx(1.0));
    CHECK(all.exact == doctest::Approx(1.0));

    const auto near = localization_constant(line, 2, 1.0, 500, rng);
    // path graph on 4 nodes: lambda_2 = 2 - 2 cos(pi/4)
    const double exact = 4.0 / (2.0 - 2.0 * std::cos(std::numbers::pi / 4.0));
    CHECK(near.exact == doctest::Approx(exact));
    CHECK(near.c_r <= near.exact * (1 + 1e-12));
    CHECK(near.c_r > 1.0);

    CHECK_THROWS_AS(localization_constant(line, 2, 0.5, 5, rng), DisconnectedError);
}

TEST_CASE("collar points form one cluster at moderate range") {
    const auto op = make_extension(hole, 0.08, 32);
    const auto pts = collar_points(op);
    CHECK(pts.size() == 2 * op.collar.outer.size());
    Rng rng(6);
    const auto res = localization_constant(pts, 2, 0.3, 20, rng);
    CHECK(res.points == op.collar.outer.size());
    CHECK(res.c_r <= res.exact);
}
