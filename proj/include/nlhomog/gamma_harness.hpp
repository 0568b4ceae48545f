#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nlhomog/cell_problem.hpp"
#include "nlhomog/geometry.hpp"
#include "nlhomog/kernels.hpp"
#include "nlhomog/nonlocal_form.hpp"

namespace nlhomog {

// Minimization on the cube [0,T]^d with w = <z, y> prescribed on the layer of
// points closer than delta*T/2 to the cube's boundary.
//
// With `periodic` (the default) the corrector is extended T-periodically and
// every E-node of the cube interacts with all of E, so f_T is the value of a
// constrained competitor for the T-periodic cell problem and f_T >= f0. With
// periodic = false only pairs inside the cube count.
struct FiniteCubeProblem {
    std::vector<double> z;
    int T = 2;
    double delta = 0.5;
    int n = 16;
    Perforation perforation = Perforation::none(2);
    KernelSpec kernel = KernelSpec::ball(2, 1.0);
    double R = 1.0;
    bool periodic = true;
    CellOptions options;
};

struct FiniteCubeResult {
    double value = 0.0;  // T^-d min
    SolveReport report;
    std::size_t pinned = 0;
    std::size_t free = 0;
    FormStats stats;
    std::vector<double> phi;
};

// Pinned-layer mask for the T-cell grid (1 on E-points of the layer).
std::vector<std::uint8_t> boundary_layer(const TorusGrid& grid, double delta);

// Throws GeometryError when the layer is empty, when (1-delta)T < 1, or when
// no E-node is left to minimize over.
FiniteCubeResult finite_cube_value(const FiniteCubeProblem& p);

// delta as a function of T: `inverse` gives delta = scale / T (one boundary
// cell for scale = 1), `fixed` gives delta = scale.
struct DeltaRule {
    enum class Kind { inverse, fixed };
    Kind kind = Kind::inverse;
    double scale = 1.0;
    double operator()(int T) const { return kind == Kind::inverse ? scale / T : scale; }
};

DeltaRule delta_rule_from_string(const std::string& text);

struct GammaRow {
    int T = 0;
    std::string direction;
    double f_T = 0.0;
    double f_0 = 0.0;
    double gap = 0.0;  // f_T - f_0
    int iterations = 0;
    FormStats stats;
};

struct GammaStudy {
    std::vector<GammaRow> rows;
    // |gap| failed to decrease from one T to the next while above the
    // consistency tolerance.
    bool non_decreasing = false;
    // f_T < f_0 - consistency_tol for some T.
    bool below_cell_value = false;
};

// f_T(z) for every T in T_list (ascending) against f0 = cell_value(z) on the
// one-cell grid with the same n, kernel and R.
GammaStudy convergence_study(const FiniteCubeProblem& base, std::span<const int> T_list, const DeltaRule& rule,
                             const std::string& direction = "", double consistency_tol = 1e-8);

struct BlendResult {
    std::vector<double> values;
    std::vector<double> cutoff;  // phi per grid point
    int layer = 1;               // selected k in 1..N
};

// phi v_inner + (1 - phi) v_outer on the box [0, side h]^d of `form`'s grid,
// with the piecewise linear cutoff
//
//   phi = clamp((N/delta) (dist(x, boundary) - delta (1 + (k-1)/N)), 0, 1)
//
// so phi = 0 within delta of the boundary and phi = 1 beyond 2 delta. The layer
// k minimizes the energy of v_inner and v_outer on pairs touching
// S_k = {delta(1 + (k-1)/N) < dist <= delta(1 + k/N)}; ties go to the smallest k.
// The energy uses the form's edges and ignores its affine datum. Throws
// GeometryError when the region beyond 2 delta is empty.
BlendResult blend_boundary(const NonlocalForm& form, std::span<const double> v_inner, std::span<const double> v_outer,
                           double delta, int N);

}  // namespace nlhomog
