#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlhomog/geometry.hpp"
#include "nlhomog/kernels.hpp"
#include "nlhomog/nonlocal_form.hpp"

namespace nlhomog {

struct CellOptions {
    AssemblyOptions assembly;
    SolverOptions solver;
};

struct CellSolve {
    std::vector<double> z;
    double value = 0.0;          // T^-d min Q
    double affine_bound = 0.0;   // T^-d Q(0), the affine test w = <z, y>
    double tail_bound = 0.0;
    FormStats stats;
    SolveReport report;
    std::vector<double> phi;     // minimizing corrector on the grid
};

// f0(z): minimum of the periodic cell energy over correctors, per unit cell.
// The grid may hold T > 1 cells; the value is normalized by T^d.
CellSolve cell_value(std::span<const double> z, const TorusGrid& grid, const KernelSpec& kernel, double R,
                     const CellOptions& opts = {});

// U(z) = T^-d Q(0) without solving.
double affine_upper_bound(std::span<const double> z, const TorusGrid& grid, const KernelSpec& kernel, double R,
                          const CellOptions& opts = {});

struct HomResult {
    Eigen::MatrixXd A;
    Eigen::VectorXd eigenvalues;  // ascending
    std::vector<CellSolve> solves;  // e_1..e_d, then e_i + e_j for i < j
    double tail_bound = 0.0;
    int n = 0;
    int cells = 1;
    double radius = 0.0;
};

// A_hom by polarization, A_ij = (f0(e_i + e_j) - f0(e_i) - f0(e_j)) / 2, from
// d + d(d-1)/2 cell solves. Throws ConsistencyError when the smallest
// eigenvalue is below -psd_tol * max(trace, tiny).
HomResult homogenized_matrix(const TorusGrid& grid, const KernelSpec& kernel, double R, const CellOptions& opts = {},
                             double psd_tol = 1e-8);

// |f(z1+z2) + f(z1-z2) - 2 f(z1) - 2 f(z2)|; zero for a quadratic form.
double quadratic_form_check(double f_z1, double f_z2, double f_sum, double f_diff);

}  // namespace nlhomog
