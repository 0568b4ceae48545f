#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nlhomog/gamma_harness.hpp"
#include "nlhomog/random.hpp"
#include "oracles.hpp"

using namespace nlhomog;

namespace {

double boundary_distance(const TorusGrid& g, std::size_t i) {
    std::vector<double> x(g.dim);
    g.coords(i, x);
    double d = 1e300;
    for (double c : x) d = std::min({d, c, g.cells - c});
    return d;
}

FiniteCubeProblem small_problem() {
    FiniteCubeProblem p;
    p.z = {1.0, 0.3};
    p.T = 2;
    p.delta = 0.5;
    p.n = 6;
    p.perforation = Perforation::ball({0.5, 0.5}, 0.22);
    p.kernel = KernelSpec::ball(2, 0.45);
    p.R = 0.45;
    return p;
}

}  // namespace

TEST_CASE("boundary layer holds the E-points near the cube boundary") {
    const auto g = build_grid(Perforation::ball({0.5, 0.5}, 0.25), 8, 4);
    const auto layer = boundary_layer(g, 0.25);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const bool expect = g.mask[i] && boundary_distance(g, i) < 0.5;
        REQUIRE(static_cast<bool>(layer[i]) == expect);
    }
}

TEST_CASE("finite cube value matches dense oracles in both variants") {
    for (bool periodic : {true, false}) {
        auto p = small_problem();
        p.periodic = periodic;
        const auto res = finite_cube_value(p);
        const auto g = build_grid(p.perforation, p.n, p.T);
        const auto layer = boundary_layer(g, p.delta);
        std::vector<std::uint8_t> free(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) free[i] = g.mask[i] && !layer[i];
        const auto dense =
            oracle::dense_minimize(oracle::enumerate_edges(g, p.kernel, p.R, p.z, periodic), g.size(), free);
        CHECK(res.value == doctest::Approx(dense.energy / 4.0).epsilon(1e-8));
        CHECK(res.pinned + res.free == g.count_in_E());
    }
}

TEST_CASE("periodic finite cube values lie above the cell value") {
    auto p = small_problem();
    const auto f0 = cell_value(p.z, build_grid(p.perforation, p.n, 1), p.kernel, p.R).value;
    for (int T : {2, 3, 4}) {
        p.T = T;
        p.delta = 1.0 / T;
        CHECK(finite_cube_value(p).value >= f0 * (1 - 1e-10));
    }
}

TEST_CASE("finite cube preconditions") {
    auto p = small_problem();
    p.delta = 0.6;
    CHECK_THROWS_AS(finite_cube_value(p), GeometryError);
    p.delta = 0.5;
    p.T = 1;
    CHECK_THROWS_AS(finite_cube_value(p), GeometryError);
    p.T = 2;
    p.delta = 0.01;
    CHECK_THROWS_AS(finite_cube_value(p), GeometryError);
}

TEST_CASE("delta rules") {
    CHECK(delta_rule_from_string("1/T")(4) == 0.25);
    CHECK(delta_rule_from_string("3/T")(6) == 0.5);
    CHECK(delta_rule_from_string("0.2")(8) == 0.2);
    CHECK_THROWS(delta_rule_from_string("T/2"));
}

TEST_CASE("convergence study reports shrinking nonnegative gaps") {
    auto p = small_problem();
    const int Ts[] = {2, 4};
    const auto study = convergence_study(p, Ts, DeltaRule{}, "e1", 1e-8);
    REQUIRE(study.rows.size() == 2);
    CHECK_FALSE(study.below_cell_value);
    CHECK_FALSE(study.non_decreasing);
    CHECK(study.rows[0].f_0 == study.rows[1].f_0);
    CHECK(study.rows[1].gap < study.rows[0].gap);
    for (const auto& r : study.rows) {
        CHECK(r.gap == doctest::Approx(r.f_T - r.f_0));
        CHECK(r.direction == "e1");
    }
}

TEST_CASE("blended field equals the outer field near the boundary and the inner one deep inside") {
    const auto g = build_grid(Perforation::ball({0.5, 0.5}, 0.25), 8, 4);
    const std::vector<double> z = {0.0, 0.0};
    AssemblyOptions opts;
    opts.periodic = false;
    const auto form = assemble(g, KernelSpec::ball(2, 0.3), 0.3, z, opts);
    Rng rng(8);
    std::vector<double> vin(g.size()), vout(g.size());
    for (auto& v : vin) v = rng.normal();
    for (auto& v : vout) v = rng.normal();
    const double delta = 0.5;
    const int N = 4;
    const auto b = blend_boundary(form, vin, vout, delta, N);
    CHECK(b.layer >= 1);
    CHECK(b.layer <= N);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = boundary_distance(g, i);
        REQUIRE(b.cutoff[i] >= 0.0);
        REQUIRE(b.cutoff[i] <= 1.0);
        if (d <= delta) {
            REQUIRE(b.cutoff[i] == 0.0);
            REQUIRE(b.values[i] == vout[i]);
        }
        if (d >= 2 * delta) {
            REQUIRE(b.cutoff[i] == 1.0);
            REQUIRE(b.values[i] == vin[i]);
        }
    }
    CHECK_THROWS_AS(blend_boundary(form, vin, vout, 1.0, N), GeometryError);
}

TEST_CASE("blending a field with itself changes nothing") {
    const auto g = build_grid(Perforation::none(2), 8, 4);
    const std::vector<double> z = {0.0, 0.0};
    AssemblyOptions opts;
    opts.periodic = false;
    const auto form = assemble(g, KernelSpec::ball(2, 0.3), 0.3, z, opts);
    std::vector<double> v(g.size()), x(2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.coords(i, x);
        v[i] = std::sin(x[0]) * x[1];
    }
    for (int N : {1, 2, 4}) {
        const auto b = blend_boundary(form, v, v, 0.5, N);
        CHECK(field_energy(form, b.values) == doctest::Approx(field_energy(form, v)).epsilon(1e-13));
        for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(b.values[i] == doctest::Approx(v[i]).epsilon(1e-15));
    }
}
