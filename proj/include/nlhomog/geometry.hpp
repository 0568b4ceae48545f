#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nlhomog {

enum class PerforationKind { none, ball, box, frame };

std::string to_string(PerforationKind kind);
PerforationKind perforation_kind_from_string(const std::string& name);

// The obstacle K0 inside the unit cell [0,1)^d; the perforated set is
// E = R^d \ (K0 + Z^d).
//
// A frame of width delta is the box centered at (1/2,...,1/2) with half-sides
// (1-delta)/2, so E restricted to a cell is the band of width delta/2 along
// the cell faces. This is the set Q1 \ Q_{1-delta} for Q1 = [-1/2,1/2]^d
// translated into cell coordinates.
struct Perforation {
    PerforationKind kind = PerforationKind::none;
    int dim = 2;
    std::vector<double> center;
    double radius = 0.0;
    std::vector<double> half_sides;
    double delta = 0.0;

    static Perforation none(int dim);
    static Perforation ball(std::vector<double> center, double radius);
    static Perforation box(std::vector<double> center, std::vector<double> half_sides);
    // Requires 0 < delta < 1/4.
    static Perforation frame(int dim, double delta);

    // K0 must sit strictly inside the open unit cell so that integer
    // translates are pairwise disjoint. Throws GeometryError otherwise.
    void validate() const;

    // Closed-set membership of a point given in cell coordinates.
    bool contains(std::span<const double> x) const;

    // Euclidean distance from x (outside K0) to K0; 0 inside.
    double distance_outside(std::span<const double> x) const;
    // Distance from x (inside K0) to the boundary of K0; 0 outside.
    double depth_inside(std::span<const double> x) const;

    // Gauge-radial reflection through the boundary of K0: the point on the
    // same ray from the center with gauge 2 - gauge(x). For a ball this is
    // |x'-c| = 2r - |x-c|; for a box the gauge is max_i |x_i-c_i| / s_i.
    std::vector<double> reflect(std::span<const double> x) const;

    double volume() const;
    std::vector<double> box_center() const;
    std::vector<double> box_half_sides() const;
};

// x in E iff (x mod 1) lies outside K0.
bool in_E(const Perforation& p, std::span<const double> x);

// Cell-centered lattice of T cells per axis with n points per cell, points at
// (i + 1/2) h, h = 1/n. Axis 0 is the fastest-varying index.
struct TorusGrid {
    int dim = 2;
    int n = 0;
    int cells = 1;
    double h = 0.0;
    std::vector<std::uint8_t> mask;  // 1 iff the point lies in E

    int side() const { return n * cells; }
    std::size_t size() const { return mask.size(); }
    std::size_t index(std::span<const int> multi) const;
    void multi_index(std::size_t index, std::span<int> out) const;
    void coords(std::size_t index, std::span<double> out) const;
    std::size_t count_in_E() const;
    // Fraction of points of one cell lying in E, an estimate of |E cap Q1|.
    double solid_fraction() const;
};

// Throws GeometryError when no lattice point lies in E.
TorusGrid build_grid(const Perforation& p, int n, int T);

// Collar of K0 (in the cell [0,1)^d of the grid) at depth tau.
struct CollarSets {
    std::vector<std::size_t> outer;      // A: E-points within tau of K0
    std::vector<std::size_t> inner;      // A*: K0-points within tau of its boundary
    std::vector<std::size_t> reflected;  // per inner point, the A-point nearest to its reflection
    std::vector<double> depth;           // per inner point, distance to the boundary of K0
    double distortion = 0.0;             // sampled bi-Lipschitz factor of the reflection
};

// Rejects tau whose collar leaves the cell, reflections distorting distances by
// more than max_distortion on 1000 sampled pairs, and collars with no lattice
// point. Requires a ball or box (frame) perforation. Box corners shear the
// gauge reflection to a factor of about 2.5 at any tau, so boxes need a looser
// max_distortion.
CollarSets collar_sets(const Perforation& p, double tau, const TorusGrid& grid, double max_distortion = 2.0);

// Max over sampled pairs a != b in A* of max(q, 1/q), q = |R(a)-R(b)| / |a-b|.
double reflection_distortion(const Perforation& p, double tau, int pairs, std::uint64_t seed);

// Omega(t) = {x in Omega : dist(x, boundary) > t} for a coordinate box Omega.
struct ShrunkDomain {
    std::vector<double> lower;
    std::vector<double> upper;
    double margin = 0.0;

    bool contains(std::span<const double> x) const;
    bool base_contains(std::span<const double> x) const;
};

}  // namespace nlhomog
