#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nlhomog/errors.hpp"
#include "nlhomog/geometry.hpp"
#include "nlhomog/random.hpp"

using namespace nlhomog;

namespace {
double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}
}  // namespace

TEST_CASE("membership in the perforated set") {
    const auto p = Perforation::ball({0.5, 0.5}, 0.25);
    const double center[] = {0.5, 0.5}, corner[] = {0.05, 0.05}, shifted[] = {3.5, -1.5}, rim[] = {0.75, 0.5};
    CHECK_FALSE(in_E(p, center));
    CHECK(in_E(p, corner));
    CHECK_FALSE(in_E(p, shifted));
    CHECK_FALSE(in_E(p, rim));
    const double any[] = {0.5, 0.5};
    CHECK(in_E(Perforation::none(2), any));
}

TEST_CASE("frame leaves a band along the cell faces") {
    const auto p = Perforation::frame(2, 0.2);
    const double face[] = {0.05, 0.5}, inside[] = {0.5, 0.5}, edge[] = {0.11, 0.5};
    CHECK(in_E(p, face));
    CHECK_FALSE(in_E(p, inside));
    CHECK_FALSE(in_E(p, edge));
    CHECK_THROWS_AS(Perforation::frame(2, 0.3).validate(), GeometryError);
}

TEST_CASE("invalid perforations are rejected") {
    CHECK_THROWS_AS(Perforation::ball({0.5, 0.5}, 0.5).validate(), GeometryError);
    CHECK_THROWS_AS(Perforation::ball({0.2, 0.5}, 0.25).validate(), GeometryError);
    CHECK_THROWS_AS(Perforation::box({0.5, 0.5}, {0.5, 0.2}).validate(), GeometryError);
}

TEST_CASE("grid sizes and indexing") {
    const auto g = build_grid(Perforation::none(2), 4, 1);
    CHECK(g.size() == 16);
    CHECK(g.count_in_E() == 16);

    const auto p = Perforation::ball({0.5, 0.5}, 0.25);
    const auto one = build_grid(p, 16, 1);
    const auto two = build_grid(p, 16, 2);
    CHECK(two.count_in_E() == 4 * one.count_in_E());

    std::vector<int> m(2);
    for (std::size_t i = 0; i < two.size(); ++i) {
        two.multi_index(i, m);
        REQUIRE(two.index(m) == i);
        // periodicity of the mask
        std::vector<int> mm = {m[0] % 16, m[1] % 16};
        REQUIRE(two.mask[i] == one.mask[one.index(mm)]);
    }
    std::vector<double> x(2);
    two.coords(1, x);
    CHECK(x[0] == doctest::Approx(1.5 / 16));
    CHECK(x[1] == doctest::Approx(0.5 / 16));
}

TEST_CASE("solid fraction converges to the area of E in a cell") {
    const auto p = Perforation::ball({0.5, 0.5}, 0.25);
    const double exact = 1.0 - std::numbers::pi / 16.0;
    double prev = 1.0;
    for (int n : {16, 64, 256}) {
        const double err = std::abs(build_grid(p, n, 1).solid_fraction() - exact);
        CHECK(err <= prev);
        prev = err;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("ball reflection is the radial mirror image") {
    const auto p = Perforation::ball({0.5, 0.5}, 0.25);
    const double x[] = {0.5 + 0.2, 0.5};
    const auto r = p.reflect(x);
    CHECK(r[0] == doctest::Approx(0.8));
    CHECK(r[1] == doctest::Approx(0.5));
    const double rim[] = {0.5, 0.75};
    const auto same = p.reflect(rim);
    CHECK(same[1] == doctest::Approx(0.75));
}

TEST_CASE("box reflection keeps the normal distance to the face") {
    const auto p = Perforation::box({0.5, 0.5}, {0.25, 0.25});
    const double x[] = {0.72, 0.55};
    const auto r = p.reflect(x);
    // depth 0.03 inside the right face maps to distance 0.03 outside it
    CHECK(r[0] - 0.75 == doctest::Approx(0.75 - x[0]));
    CHECK(p.distance_outside(r) == doctest::Approx(p.depth_inside(x)));
}

TEST_CASE("collar sets of a ball") {
    const auto p = Perforation::ball({0.5, 0.5}, 0.25);
    const auto g = build_grid(p, 32, 1);
    const auto c = collar_sets(p, 0.08, g);
    CHECK(c.outer.size() >= c.inner.size());
    CHECK(c.inner.size() == c.reflected.size());
    CHECK(c.distortion <= 2.0);
    std::vector<double> x(2);
    for (std::size_t k = 0; k < c.inner.size(); ++k) {
        REQUIRE(!g.mask[c.inner[k]]);
        REQUIRE(g.mask[c.reflected[k]]);
        g.coords(c.inner[k], x);
        REQUIRE(c.depth[k] < 0.08);
        REQUIRE(c.depth[k] == doctest::Approx(p.depth_inside(x)));
    }
    for (std::size_t i : c.outer) {
        g.coords(i, x);
        REQUIRE(p.distance_outside(x) < 0.08);
    }
    CHECK_THROWS_AS(collar_sets(p, 0.1, g), GeometryError);
    CHECK_THROWS_AS(collar_sets(p, 0.3, g), GeometryError);
}

TEST_CASE("sampled distortion agrees with direct measurement") {
    const auto p = Perforation::ball({0.5, 0.5}, 0.25);
    const double q = reflection_distortion(p, 0.05, 1000, 3);
    CHECK(q >= 1.0);
    CHECK(q < 2.0);
    // two points on one ray: depths t1, t2 map to outward distances t1, t2
    // scaled by the radius ratio, so q is at most (r + tau)/(r - tau)
    CHECK(q <= (0.25 + 0.05) / (0.25 - 0.05) + 1e-12);

    const double a[] = {0.5 + 0.24, 0.5};
    const double b[] = {0.5, 0.5 + 0.24};
    const auto ra = p.reflect(a), rb = p.reflect(b);
    const double direct = dist(ra, rb) / std::hypot(0.24, 0.24);
    CHECK(direct == doctest::Approx(0.26 / 0.24));
}

TEST_CASE("box collars need a looser distortion limit") {
    const auto p = Perforation::box({0.5, 0.5}, {0.25, 0.25});
    const auto g = build_grid(p, 32, 1);
    CHECK_THROWS_AS(collar_sets(p, 0.05, g), GeometryError);
    const auto c = collar_sets(p, 0.05, g, 3.0);
    CHECK(c.distortion > 2.0);
    CHECK(c.distortion <= 3.0);
}

TEST_CASE("shrunk domain") {
    ShrunkDomain d{{0.0, 0.0}, {4.0, 4.0}, 1.0};
    const double in[] = {2.0, 2.0}, edge[] = {0.5, 2.0};
    CHECK(d.contains(in));
    CHECK_FALSE(d.contains(edge));
    CHECK(d.base_contains(edge));
}
