#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "nlhomog/nonlocal_form.hpp"
#include "nlhomog/random.hpp"
#include "oracles.hpp"

using namespace nlhomog;

namespace {

std::size_t nonzero_edges(const std::vector<oracle::Edge>& edges) {
    std::size_t n = 0;
    for (const auto& e : edges)
        if (!(e.p == e.q && e.b == 0.0 && e.w > 0.0)) ++n;
    return n;
}

std::vector<double> random_field(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("constants cost nothing without an affine datum") {
    const auto g = build_grid(Perforation::ball({0.5, 0.5}, 0.25), 8, 2);
    const std::vector<double> z = {0.0, 0.0};
    const auto form = assemble(g, KernelSpec::ball(2, 0.5), 0.5, z);
    const std::vector<double> c(g.size(), 3.7);
    CHECK(form.value(c) == 0.0);
}

TEST_CASE("affine energy of the unperforated torus matches the lattice moment") {
    const int n = 8;
    const auto g = build_grid(Perforation::none(2), n, 1);
    const std::vector<double> z = {1.0, 0.0};
    const double R = 0.3;
    const auto form = assemble(g, KernelSpec::ball(2, R), R, z);
    const std::vector<double> zero(g.size(), 0.0);
    // Q(0) = n^2 * h^4 * sum_{|k h| <= R} (k_1 h)^2
    const double h = 1.0 / n;
    double moment = 0.0;
    for (int a = -n; a <= n; ++a)
        for (int b = -n; b <= n; ++b)
            if (std::hypot(a * h, b * h) <= R) moment += (a * h) * (a * h);
    CHECK(form.value(zero) == doctest::Approx(n * n * std::pow(h, 4) * moment).epsilon(1e-13));
}

TEST_CASE("edge enumeration matches a brute-force oracle") {
    const auto p = Perforation::ball({0.5, 0.5}, 0.2);
    const std::vector<double> z = {0.3, -0.7};
    Rng rng(11);
    for (bool periodic : {true, false}) {
        for (double R : {0.3, 0.6, 1.3}) {
            const auto g = build_grid(p, 5, 2);
            const auto k = KernelSpec::ball(2, R);
            AssemblyOptions opts;
            opts.periodic = periodic;
            const auto form = assemble(g, k, R, z, opts);
            const auto edges = oracle::enumerate_edges(g, k, R, z, periodic);
            CHECK(form.edge_count() == nonzero_edges(edges));
            const auto phi = random_field(g.size(), rng);
            CHECK(form.value(phi) == doctest::Approx(oracle::energy(edges, phi)).epsilon(1e-12));
        }
    }
}

TEST_CASE("a single interacting pair") {
    TorusGrid g = build_grid(Perforation::none(1), 4, 1);
    g.mask.assign(g.size(), 0);
    g.mask[0] = g.mask[1] = 1;
    AssemblyOptions opts;
    opts.periodic = false;
    const std::vector<double> z = {1.0};
    const auto form = assemble(g, KernelSpec::ball(1, 0.3), 0.3, z, opts);
    CHECK(form.edge_count() == 2);
    const std::vector<double> phi = {0.0, 0.5, 0.0, 0.0};
    // both orientations: h^2 (0.5 + 0.25)^2 + h^2 (-0.5 - 0.25)^2
    CHECK(form.value(phi) == doctest::Approx(2.0 * 0.75 * 0.75 / 16.0));
}

TEST_CASE("one-dimensional ring with nearest neighbours") {
    const auto g = build_grid(Perforation::none(1), 4, 1);
    const std::vector<double> z = {1.0};
    const auto form = assemble(g, KernelSpec::ball(1, 0.25), 0.25, z);
    CHECK(form.edge_count() == 8);
    const std::vector<double> zero(4, 0.0);
    // 8 edges of weight h^2 and affine term +-h
    CHECK(form.value(zero) == doctest::Approx(8.0 * std::pow(0.25, 4)));
    // periodic differences sum to zero around the ring, so the best corrector
    // is constant and the minimum equals Q(0)
    const auto res = minimize(form);
    CHECK(res.report.converged);
    CHECK(res.report.energy == doctest::Approx(8.0 * std::pow(0.25, 4)).epsilon(1e-12));
    for (double v : res.phi) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("minimizer agrees with a dense least-squares oracle") {
    Rng rng(21);
    const auto p = Perforation::ball({0.5, 0.5}, 0.22);
    for (int trial = 0; trial < 4; ++trial) {
        const std::vector<double> z = {rng.normal(), rng.normal()};
        const auto g = build_grid(p, 6, 1);
        const double R = 0.45;
        const auto k = KernelSpec::ball(2, R);
        const auto form = assemble(g, k, R, z);
        const auto res = minimize(form);
        std::vector<std::uint8_t> free(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) free[i] = form.is_free(i);
        const auto dense = oracle::dense_minimize(oracle::enumerate_edges(g, k, R, z), g.size(), free);
        CHECK(res.report.energy == doctest::Approx(dense.energy).epsilon(1e-8));
        CHECK(form.value(res.phi) == doctest::Approx(res.report.energy).epsilon(1e-12));
    }
}

TEST_CASE("pinned nodes keep zero and raise the minimum") {
    const auto g = build_grid(Perforation::none(2), 6, 1);
    const std::vector<double> z = {1.0, 0.5};
    const auto k = KernelSpec::ball(2, 0.4);
    auto form = assemble(g, k, 0.4, z, {.periodic = false});
    const double unpinned = minimize(form).report.energy;
    std::vector<std::uint8_t> pinned(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); i += 5) pinned[i] = 1;
    form.pin(pinned);
    const auto res = minimize(form);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (pinned[i]) REQUIRE(res.phi[i] == 0.0);
    CHECK(res.report.energy >= unpinned - 1e-14);
    std::vector<std::uint8_t> free(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) free[i] = form.is_free(i);
    const auto dense =
        oracle::dense_minimize(oracle::enumerate_edges(g, k, 0.4, z, false), g.size(), free);
    CHECK(res.report.energy == doctest::Approx(dense.energy).epsilon(1e-8));
}

TEST_CASE("energy is even in z and quadratic under scaling") {
    const auto g = build_grid(Perforation::ball({0.5, 0.5}, 0.25), 8, 1);
    const auto k = KernelSpec::ball(2, 0.4);
    auto value = [&](std::vector<double> z) { return minimize(assemble(g, k, 0.4, z)).report.energy; };
    const double base = value({0.6, -0.3});
    CHECK(value({-0.6, 0.3}) == doctest::Approx(base).epsilon(1e-8));
    CHECK(value({1.8, -0.9}) == doctest::Approx(9.0 * base).epsilon(1e-8));
}

TEST_CASE("folding a corrector onto one cell does not raise the energy") {
    const auto p = Perforation::ball({0.5, 0.5}, 0.25);
    const auto k = KernelSpec::ball(2, 0.5);
    const std::vector<double> z = {1.0, 0.0};
    const auto g1 = build_grid(p, 8, 1);
    CHECK(unit_cell_of(build_grid(p, 8, 3)).mask == g1.mask);

    Rng rng(4);
    const auto phi1 = random_field(g1.size(), rng);
    const auto same = fold_average(phi1, g1);
    CHECK(same == phi1);

    const auto g3 = build_grid(p, 8, 3);
    const auto f3 = assemble(g3, k, 0.5, z);
    const auto f1 = assemble(g1, k, 0.5, z);
    for (int trial = 0; trial < 3; ++trial) {
        const auto phi = random_field(g3.size(), rng);
        const auto folded = fold_average(phi, g3);
        CHECK(9.0 * f1.value(folded) <= f3.value(phi) * (1 + 1e-12));
    }
}

TEST_CASE("threaded operator matches the serial path") {
    const auto g = build_grid(Perforation::ball({0.5, 0.5}, 0.25), 8, 2);
    const std::vector<double> z = {1.0, 1.0};
    const auto form = assemble(g, KernelSpec::ball(2, 0.4), 0.4, z);
    Rng rng(9);
    const auto phi = random_field(g.size(), rng);
    std::vector<double> a(g.size()), b(g.size());
    form.apply(phi, a, 1);
    form.apply(phi, b, 4);
    CHECK(a == b);
    const auto s1 = minimize(form, {.tol = 1e-10, .max_iter = 20000, .threads = 1});
    const auto s4 = minimize(form, {.tol = 1e-10, .max_iter = 20000, .threads = 4});
    CHECK(s1.phi == s4.phi);
}

TEST_CASE("assembly limits") {
    const auto g = build_grid(Perforation::none(2), 8, 1);
    const std::vector<double> z = {1.0, 0.0};
    CHECK_THROWS_AS(assemble(g, KernelSpec::power(2, 1.0, 1.0, 4.0), 0.3, z), TruncationError);
    AssemblyOptions tiny;
    tiny.memory_cap_mb = 1e-6;
    CHECK_THROWS_AS(assemble(g, KernelSpec::ball(2, 0.3), 0.3, z, tiny), MemoryCapError);
    const std::vector<double> wrong = {1.0};
    CHECK_THROWS_AS(assemble(g, KernelSpec::ball(2, 0.3), 0.3, wrong), DimensionError);
}

TEST_CASE("components of a disconnected mask") {
    const auto g = build_grid(Perforation::ball({0.5, 0.5}, 0.25), 8, 1);
    const std::vector<double> z = {0.0, 0.0};
    const auto form = assemble(g, KernelSpec::ball(2, 0.13), 0.13, z);
    CHECK(form.stats().components == 1);
    const auto fs = assemble(g, KernelSpec::stripe({0.0, 0.125}, 0.01), 0.2, z);
    // offsets only along axis 1: each column is its own component
    CHECK(fs.stats().components == 8);
}
