#include "nlhomog/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "nlhomog/errors.hpp"
#include "nlhomog/kernels.hpp"
#include "nlhomog/nonlocal_form.hpp"

namespace nlhomog {

namespace {

void append_multi(const TorusGrid& grid, std::size_t i, std::vector<int>& out) {
    std::vector<int> m(grid.dim);
    grid.multi_index(i, m);
    out.insert(out.end(), m.begin(), m.end());
}

// Pair energy sum_{|x-y| <= r} h^{2d} (f(y) - f(x))^2 over the points of `mask`
// in the (non-periodic) box of `grid`.
double pair_energy(const TorusGrid& grid, const std::vector<std::uint8_t>& mask, std::span<const double> f, double r) {
    TorusGrid g = grid;
    g.mask = mask;
    if (g.count_in_E() == 0) return 0.0;
    AssemblyOptions opts;
    opts.periodic = false;
    const std::vector<double> z(grid.dim, 0.0);
    const NonlocalForm form = assemble(g, KernelSpec::ball(grid.dim, r), r, z, opts);
    return field_energy(form, f);
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

double safe_ratio(double lhs, double rhs, const char* what) {
    if (rhs > 0.0) return lhs / rhs;
    if (lhs == 0.0) return 0.0;
    throw DegenerateInputError(std::string(what) +
                               ": right-hand side vanishes while the extension does not (interaction range too short)");
}

}  // namespace

ExtensionOperator make_extension(const Perforation& p, double tau, int n, double max_distortion) {
    p.validate();
    ExtensionOperator op;
    op.perforation = p;
    op.tau = tau;
    op.n = n;
    const TorusGrid cell = build_grid(p, n, 1);
    op.collar = collar_sets(p, tau, cell, max_distortion);

    std::vector<std::uint8_t> in_collar(cell.size(), 0);
    for (std::size_t k = 0; k < op.collar.inner.size(); ++k) {
        in_collar[op.collar.inner[k]] = 1;
        append_multi(cell, op.collar.inner[k], op.inner_local);
        append_multi(cell, op.collar.reflected[k], op.reflected_local);
        op.phi.push_back(std::clamp(1.0 - op.collar.depth[k] / tau, 0.0, 1.0));
    }
    for (std::size_t i = 0; i < cell.size(); ++i)
        if (!cell.mask[i] && !in_collar[i]) append_multi(cell, i, op.deep_local);
    return op;
}

std::vector<double> extend(std::span<const double> u, const TorusGrid& grid, const ExtensionOperator& op) {
    if (u.size() != grid.size()) throw DimensionError("field size differs from grid size");
    if (grid.n != op.n || grid.dim != op.perforation.dim)
        throw DimensionError("grid resolution or dimension differs from the extension operator's");
    const int d = grid.dim;
    std::vector<double> v(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid.mask[i]) continue;
        if (!std::isfinite(u[i])) throw std::invalid_argument("u is not finite on E");
        v[i] = u[i];
    }

    const std::size_t ninner = op.phi.size();
    const std::size_t ndeep = op.deep_local.size() / static_cast<std::size_t>(d);
    std::size_t ncells = 1;
    for (int a = 0; a < d; ++a) ncells *= static_cast<std::size_t>(grid.cells);

    std::vector<int> cell(d), m(d);
    std::vector<double> reflected(ninner);
    auto global = [&](const std::vector<int>& local, std::size_t k) {
        for (int a = 0; a < d; ++a) m[a] = cell[a] * grid.n + local[k * d + a];
        return grid.index(m);
    };
    for (std::size_t c = 0; c < ncells; ++c) {
        std::size_t rest = c;
        for (int a = 0; a < d; ++a) {
            cell[a] = static_cast<int>(rest % static_cast<std::size_t>(grid.cells));
            rest /= static_cast<std::size_t>(grid.cells);
        }
        double mean = 0.0;
        for (std::size_t k = 0; k < ninner; ++k) {
            reflected[k] = v[global(op.reflected_local, k)];
            mean += reflected[k];
        }
        mean /= static_cast<double>(ninner);
        for (std::size_t k = 0; k < ninner; ++k)
            v[global(op.inner_local, k)] = op.phi[k] * reflected[k] + (1.0 - op.phi[k]) * mean;
        for (std::size_t k = 0; k < ndeep; ++k) v[global(op.deep_local, k)] = mean;
    }
    return v;
}

double ExtensionRatios::energy_ratio() const { return safe_ratio(energy_lhs, energy_rhs, "energy ratio"); }

double ExtensionRatios::l2_ratio() const { return safe_ratio(l2_lhs, l2_rhs, "L2 ratio"); }

ExtensionRatios extension_ratios(std::span<const double> u, const TorusGrid& grid, const ExtensionOperator& op,
                                 const ExtensionWindow& window, double r, double r0) {
    const int d = grid.dim;
    if (static_cast<int>(window.origin.size()) != d) throw DimensionError("window origin needs one entry per axis");
    const auto v = extend(u, grid, op);

    std::vector<std::uint8_t> interior(grid.size(), 0);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.coords(i, x);
        bool inside = true;
        for (int a = 0; a < d && inside; ++a) {
            const double g = x[a] + window.origin[a];
            inside = g > window.margin && window.M - g > window.margin;
        }
        interior[i] = inside ? 1 : 0;
    }

    ExtensionRatios out;
    out.energy_lhs = pair_energy(grid, interior, v, r);
    out.energy_rhs = pair_energy(grid, grid.mask, u, r0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (interior[i]) out.l2_lhs += v[i] * v[i];
        if (grid.mask[i]) out.l2_rhs += u[i] * u[i];
    }
    return out;
}

double energy_ratio(std::span<const double> u, const TorusGrid& grid, const ExtensionOperator& op, double r,
                    double r0, double margin) {
    ExtensionWindow w;
    w.origin.assign(grid.dim, 0);
    w.M = grid.cells;
    w.margin = margin;
    return extension_ratios(u, grid, op, w, r, r0).energy_ratio();
}

ExtensionConstants extension_constants(const ExtensionOperator& op, const ExtensionSampling& s, double eps,
                                       int samples, Rng& rng) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
    const double cells = s.L / eps;
    const int M = static_cast<int>(std::lround(cells));
    if (std::abs(cells - M) > 1e-9 || M < 1) throw std::invalid_argument("L/eps must be a positive integer");
    if (s.n != op.n) throw DimensionError("sampling resolution differs from the extension operator's");
    const int d = op.perforation.dim;
    const double margin = s.margin > 0.0 ? s.margin : std::sqrt(static_cast<double>(d));
    const int pad = static_cast<int>(std::ceil(std::max(s.r, s.r0)));
    const int wmax = std::min(s.max_window_cells, M);
    const int C = std::min(M, wmax + 2 * pad);

    const TorusGrid crop = build_grid(op.perforation, op.n, C);

    ExtensionConstants out;
    out.eps = eps;
    out.M = M;
    out.samples = samples;
    std::vector<int> wsize(d), wstart(d);
    ExtensionWindow window;
    window.origin.resize(d);
    window.M = M;
    window.margin = margin;
    std::vector<double> u(crop.size());
    std::vector<int> m(d);
    for (int sample = 0; sample < samples; ++sample) {
        for (int a = 0; a < d; ++a) {
            wsize[a] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(wmax)));
            wstart[a] = static_cast<int>(rng.below(static_cast<std::uint64_t>(M - wsize[a] + 1)));
            window.origin[a] = std::clamp(wstart[a] - pad, 0, M - C);
        }
        for (std::size_t i = 0; i < crop.size(); ++i) {
            crop.multi_index(i, m);
            bool in_window = crop.mask[i] != 0;
            for (int a = 0; a < d && in_window; ++a) {
                const int gc = window.origin[a] + m[a] / op.n;
                in_window = gc >= wstart[a] && gc < wstart[a] + wsize[a];
            }
            u[i] = in_window ? rng.normal() : 0.0;
        }
        const auto r = extension_ratios(u, crop, op, window, s.r, s.r0);
        out.C_energy = std::max(out.C_energy, r.energy_ratio());
        out.C_L2 = std::max(out.C_L2, r.l2_ratio());
    }
    return out;
}

std::vector<double> collar_points(const ExtensionOperator& op) {
    const TorusGrid cell = build_grid(op.perforation, op.n, 1);
    std::vector<double> pts, x(cell.dim);
    for (std::size_t i : op.collar.outer) {
        cell.coords(i, x);
        pts.insert(pts.end(), x.begin(), x.end());
    }
    return pts;
}

LocalizationResult localization_constant(std::span<const double> points, int dim, double r, int samples, Rng& rng,
                                         bool with_exact) {
    if (dim < 1 || points.size() % static_cast<std::size_t>(dim) != 0)
        throw DimensionError("point coordinates must come in groups of `dim`");
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    const std::size_t N = points.size() / static_cast<std::size_t>(dim);
    if (N < 2) throw std::invalid_argument("localization needs at least two points");

    std::vector<std::pair<std::size_t, std::size_t>> near;
    UnionFind uf(N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
            double d2 = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double t = points[i * dim + a] - points[j * dim + a];
                d2 += t * t;
            }
            if (std::sqrt(d2) <= r * (1.0 + 1e-12)) {
                near.emplace_back(i, j);
                uf.unite(i, j);
            }
        }
    for (std::size_t i = 1; i < N; ++i)
        if (uf.find(i) != uf.find(0))
            throw DisconnectedError("domain is disconnected at range r=" + std::to_string(r) +
                                    "; the localization constant is infinite");

    LocalizationResult out;
    out.samples = samples;
    out.points = N;
    std::vector<double> u(N);
    for (int s = 0; s < samples; ++s) {
        for (double& v : u) v = rng.normal();
        // sum_{i<j} (u_i - u_j)^2 = N sum (u - mean)^2
        const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(N);
        double all = 0.0;
        for (double v : u) all += (v - mean) * (v - mean);
        all *= static_cast<double>(N);
        double local = 0.0;
        for (const auto& [i, j] : near) local += (u[i] - u[j]) * (u[i] - u[j]);
        out.c_r = std::max(out.c_r, all / local);
    }

    if (with_exact) {
        // On the complement of constants the all-pairs Laplacian is N I, so the
        // sharp constant is N over the algebraic connectivity.
        Eigen::MatrixXd Lr = Eigen::MatrixXd::Zero(static_cast<long>(N), static_cast<long>(N));
        for (const auto& [i, j] : near) {
            const long a = static_cast<long>(i), b = static_cast<long>(j);
            Lr(a, a) += 1.0;
            Lr(b, b) += 1.0;
            Lr(a, b) -= 1.0;
            Lr(b, a) -= 1.0;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Lr, Eigen::EigenvaluesOnly);
        out.exact = static_cast<double>(N) / eig.eigenvalues()(1);
    }
    return out;
}

}  // namespace nlhomog
