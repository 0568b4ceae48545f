#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nlhomog/errors.hpp"
#include "nlhomog/geometry.hpp"
#include "nlhomog/kernels.hpp"

namespace nlhomog {

// One lattice offset xi = k h of the interaction stencil.
struct StencilEntry {
    std::array<int, 3> k{0, 0, 0};
    double weight = 0.0;  // h^{2d} a(xi)
    double affine = 0.0;  // <z, xi>
};

struct AssemblyOptions {
    bool periodic = true;
    // Allowed truncated second-moment mass, relative to the stencil's own trace.
    double tail_tol = 1e-6;
    double memory_cap_mb = 4096.0;
};

struct FormStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t components = 0;
};

// Discretized nonlocal energy
//
//   Q(phi) = sum_{y in E} sum_{xi} h^{2d} a(xi) (phi(y+xi) - phi(y) + <z, xi>)^2
//
// over the points of a TorusGrid. The edge list is the product of the E-nodes
// with the stencil; edge (y, y+xi) exists when both ends lie in E. With
// `periodic` the neighbor index wraps around the torus while xi keeps its
// geometric value, so every periodic image within the truncation radius is a
// separate edge. Without it, neighbors outside the box are dropped.
//
// Fields phi are indexed by grid point; values off E are ignored. Nodes can be
// pinned, which fixes phi = 0 there (w = <z, y> for w = <z, y> + phi).
class NonlocalForm {
public:
    NonlocalForm() = default;

    const TorusGrid& grid() const { return grid_; }
    int dim() const { return grid_.dim; }
    int side() const { return grid_.side(); }
    bool periodic() const { return periodic_; }
    double radius() const { return radius_; }
    const std::vector<double>& z() const { return z_; }
    std::span<const StencilEntry> stencil() const { return stencil_; }
    // Truncated second-moment mass beyond radius().
    double tail_bound() const { return tail_bound_; }
    // h^d sum_xi a(xi) |xi|^2 over the stencil.
    double stencil_trace() const { return stencil_trace_; }

    std::span<const std::uint8_t> pinned() const { return pinned_; }
    void pin(std::span<const std::uint8_t> pinned);
    bool is_free(std::size_t i) const { return grid_.mask[i] && !pinned_[i]; }

    std::size_t node_count() const;
    std::size_t edge_count() const;
    FormStats stats() const;

    // Connected components of the E-nodes under positive-weight edges; -1 off E.
    std::vector<int> components() const;

    // Calls fn(y, x, weight, affine) for every edge, ordered by y and then by
    // lexicographic offset.
    template <class Fn>
    void for_each_edge(Fn&& fn) const;

    double value(std::span<const double> phi) const;
    // out = L phi restricted to free nodes (zero elsewhere); grad Q = 2 (L phi + r).
    void apply(std::span<const double> phi, std::span<double> out, int threads = 1) const;
    // r, the linear coefficient of Q; zero off the free nodes.
    std::vector<double> linear_term() const;
    // Entry-wise |.| version of r, used to recognize cancellation noise.
    std::vector<double> linear_term_abs() const;
    // Diagonal of L on free nodes.
    std::vector<double> diagonal() const;

    // Target index of offset s from grid point p, or -1 when it leaves a
    // non-periodic box.
    long neighbor(std::size_t p, const StencilEntry& s) const;

private:
    friend NonlocalForm assemble(const TorusGrid&, const KernelSpec&, double, std::span<const double>,
                                 const AssemblyOptions&);

    template <class RowFn>
    void for_each_row(int threads, RowFn&& fn) const;

    template <class PairFn>
    void row_pairs(std::size_t row, const StencilEntry& s, PairFn&& fn) const;

    TorusGrid grid_;
    bool periodic_ = true;
    double radius_ = 0.0;
    double tail_bound_ = 0.0;
    double stencil_trace_ = 0.0;
    std::vector<double> z_;
    std::vector<StencilEntry> stencil_;    // a(xi) > 0, 0 < |xi| <= R, lexicographic
    std::vector<StencilEntry> symmetric_;  // weight(xi) + weight(-xi), affine <z, xi>
    std::vector<double> active_;           // 1.0 on E-nodes
    std::vector<std::uint8_t> pinned_;
};

// Builds the form for affine datum z with truncation radius R. Throws
// TruncationError when the second-moment mass beyond R exceeds
// tail_tol * stencil trace and MemoryCapError when the working set would exceed
// the cap.
NonlocalForm assemble(const TorusGrid& grid, const KernelSpec& kernel, double R, std::span<const double> z,
                      const AssemblyOptions& opts = {});

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 20000;
    // 1 selects the serial reference path.
    int threads = 1;
};

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;  // relative, in the M^-1 norm of the Jacobi preconditioner
    double energy = 0.0;
    int null_space_dim = 0;
    bool converged = false;
};

struct SolveResult {
    std::vector<double> phi;
    SolveReport report;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, SolveReport report) : Error(what), report_(report) {}
    const SolveReport& report() const noexcept { return report_; }

private:
    SolveReport report_;
};

// Jacobi-preconditioned conjugate gradients for L phi = -r over the free
// nodes, starting from phi = 0. Each connected component without pinned nodes
// is shifted to zero mean. Throws ConvergenceError after max_iter iterations.
SolveResult minimize(const NonlocalForm& form, const SolverOptions& opts = {});

// Average of a corrector over the T^d integer translates of one cell:
// out(y) = T^-d sum_k phi(y + k). `grid` is the T-cell grid phi lives on; the
// result lives on the matching 1-cell grid.
std::vector<double> fold_average(std::span<const double> phi, const TorusGrid& grid);

// sum over edges of weight (v(y) - v(x))^2, the form's affine datum and pins
// ignored.
double field_energy(const NonlocalForm& form, std::span<const double> v);

// Restriction of a T-cell grid to its first cell.
TorusGrid unit_cell_of(const TorusGrid& grid);

// ---------------------------------------------------------------------------

template <class Fn>
void NonlocalForm::for_each_edge(Fn&& fn) const {
    for (std::size_t p = 0; p < grid_.size(); ++p) {
        if (!grid_.mask[p]) continue;
        for (const auto& s : stencil_) {
            const long q = neighbor(p, s);
            if (q < 0 || !grid_.mask[static_cast<std::size_t>(q)]) continue;
            fn(p, static_cast<std::size_t>(q), s.weight, s.affine);
        }
    }
}

}  // namespace nlhomog
