#include "nlhomog/cell_problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlhomog/errors.hpp"

namespace nlhomog {

namespace {

double cells_volume(const TorusGrid& grid) { return std::pow(static_cast<double>(grid.cells), grid.dim); }

std::vector<double> unit(int d, int i) {
    std::vector<double> e(d, 0.0);
    e[i] = 1.0;
    return e;
}

}  // namespace

CellSolve cell_value(std::span<const double> z, const TorusGrid& grid, const KernelSpec& kernel, double R,
                     const CellOptions& opts) {
    AssemblyOptions assembly = opts.assembly;
    assembly.periodic = true;
    const NonlocalForm form = assemble(grid, kernel, R, z, assembly);

    CellSolve out;
    out.z.assign(z.begin(), z.end());
    out.tail_bound = form.tail_bound();
    out.stats = form.stats();
    const std::vector<double> zero(grid.size(), 0.0);
    out.affine_bound = form.value(zero) / cells_volume(grid);

    auto solved = minimize(form, opts.solver);
    out.report = solved.report;
    out.value = solved.report.energy / cells_volume(grid);
    out.phi = std::move(solved.phi);
    return out;
}

double affine_upper_bound(std::span<const double> z, const TorusGrid& grid, const KernelSpec& kernel, double R,
                          const CellOptions& opts) {
    AssemblyOptions assembly = opts.assembly;
    assembly.periodic = true;
    const NonlocalForm form = assemble(grid, kernel, R, z, assembly);
    const std::vector<double> zero(grid.size(), 0.0);
    return form.value(zero) / cells_volume(grid);
}

HomResult homogenized_matrix(const TorusGrid& grid, const KernelSpec& kernel, double R, const CellOptions& opts,
                             double psd_tol) {
    const int d = grid.dim;
    HomResult out;
    out.A = Eigen::MatrixXd::Zero(d, d);
    out.n = grid.n;
    out.cells = grid.cells;
    out.radius = R;

    for (int i = 0; i < d; ++i) {
        out.solves.push_back(cell_value(unit(d, i), grid, kernel, R, opts));
        out.A(i, i) = out.solves.back().value;
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            auto z = unit(d, i);
            z[j] = 1.0;
            out.solves.push_back(cell_value(z, grid, kernel, R, opts));
            const double off = 0.5 * (out.solves.back().value - out.A(i, i) - out.A(j, j));
            out.A(i, j) = off;
            out.A(j, i) = off;
        }
    }
    for (const auto& s : out.solves) out.tail_bound = std::max(out.tail_bound, s.tail_bound);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.A, Eigen::EigenvaluesOnly);
    out.eigenvalues = eig.eigenvalues();
    const double scale = std::max(std::abs(out.A.trace()), std::numeric_limits<double>::min());
    if (out.eigenvalues(0) < -psd_tol * scale)
        throw ConsistencyError("homogenized matrix is not positive semidefinite: smallest eigenvalue " +
                               std::to_string(out.eigenvalues(0)));
    return out;
}

double quadratic_form_check(double f_z1, double f_z2, double f_sum, double f_diff) {
    return std::abs(f_sum + f_diff - 2.0 * f_z1 - 2.0 * f_z2);
}

}  // namespace nlhomog
