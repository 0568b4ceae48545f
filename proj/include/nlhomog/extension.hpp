#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nlhomog/geometry.hpp"
#include "nlhomog/random.hpp"

namespace nlhomog {

// Per-cell extension template built once on a single cell and replayed in
// every cell of a grid. Inside K0:
//
//   collar A* (depth < tau):  v = phi u(R x) + (1 - phi) mean_A
//   deeper points:            v = mean_A
//
// with phi = 1 - depth/tau and mean_A the average of u(R x) over A*. Points of
// E keep their values.
struct ExtensionOperator {
    Perforation perforation;
    double tau = 0.0;
    int n = 0;
    CollarSets collar;                 // on the one-cell grid
    std::vector<int> inner_local;      // d ints per collar point
    std::vector<int> reflected_local;  // d ints per collar point
    std::vector<int> deep_local;       // d ints per deep point
    std::vector<double> phi;           // cutoff per collar point
};

// Throws GeometryError when the collar is not resolved at n or the
// reflection distorts distances by more than max_distortion.
ExtensionOperator make_extension(const Perforation& p, double tau, int n, double max_distortion = 2.0);

// u is indexed by grid point; values off E are ignored. The grid must be
// built from the operator's perforation with the same n.
std::vector<double> extend(std::span<const double> u, const TorusGrid& grid, const ExtensionOperator& op);

// Pair energies on the box [0, M]^d (cell units) covered by `grid`, whose
// first point sits `origin` cells from the box corner. `margin` defines
// Omega(margin), the points farther than margin from the box boundary.
struct ExtensionWindow {
    std::vector<int> origin;  // cells, per axis
    int M = 0;                // domain side in cells
    double margin = 0.0;
};

struct ExtensionRatios {
    double energy_lhs = 0.0;  // pairs in Omega(margin), |x-y| <= r, of v
    double energy_rhs = 0.0;  // pairs in E, |x-y| <= r0, of u
    double l2_lhs = 0.0;      // sum of v^2 over Omega(margin)
    double l2_rhs = 0.0;      // sum of u^2 over E
    double energy_ratio() const;
    double l2_ratio() const;
};

// Evaluates both bounds for the extension of u. energy_ratio() is 0 when both
// sides vanish and throws DegenerateInputError when only the right side does;
// l2_ratio() behaves the same way.
ExtensionRatios extension_ratios(std::span<const double> u, const TorusGrid& grid, const ExtensionOperator& op,
                                 const ExtensionWindow& window, double r, double r0);

// Convenience form on a whole-domain grid (origin 0, M = grid.cells).
double energy_ratio(std::span<const double> u, const TorusGrid& grid, const ExtensionOperator& op, double r,
                    double r0, double margin);

struct ExtensionSampling {
    int n = 16;
    double L = 2.0;  // domain side in macroscopic units
    double r = 0.08;
    double r0 = 0.5;
    double margin = 0.0;  // in cells; <= 0 selects sqrt(d)
    int max_window_cells = 3;
};

struct ExtensionConstants {
    double eps = 0.0;
    int M = 0;
    double C_energy = 0.0;  // max sampled energy ratio
    double C_L2 = 0.0;      // max sampled L2 ratio
    int samples = 0;
};

// Samples u as i.i.d. standard normals on the E-points of a random window of
// 1..max_window_cells cells inside (0, L/eps)^d and zero elsewhere. Only a
// crop reaching ceil(max(r, r0)) cells past the window is materialized; this
// is exact because the extension only mixes values within a cell.
ExtensionConstants extension_constants(const ExtensionOperator& op, const ExtensionSampling& s, double eps,
                                       int samples, Rng& rng);

// Coordinates (d per point) of the outer collar A of the operator's cell.
std::vector<double> collar_points(const ExtensionOperator& op);

struct LocalizationResult {
    double c_r = 0.0;    // max over samples of all-pairs / within-r energy
    double exact = 0.0;  // N / lambda_2 of the within-r graph Laplacian
    int samples = 0;
    std::size_t points = 0;
};

// Unit-weight pair energies on a point cloud (d coordinates per point).
// Throws DisconnectedError when the graph of pairs within r is disconnected.
LocalizationResult localization_constant(std::span<const double> points, int dim, double r, int samples, Rng& rng,
                                         bool with_exact = true);

}  // namespace nlhomog
