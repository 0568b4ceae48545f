#include "nlhomog/nonlocal_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "nlhomog/errors.hpp"

namespace nlhomog {

namespace {

long positive_mod(long a, long m) {
    const long r = a % m;
    return r < 0 ? r + m : r;
}

// Right-hand sides whose norm is below this fraction of the norm of their
// entry-wise absolute contributions are cancellation noise (e.g. the exact
// sum of +xi and -xi over a symmetric stencil).
constexpr double kCancellationFloor = 1e-13;

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

template <class RowFn>
void NonlocalForm::for_each_row(int threads, RowFn&& fn) const {
    const std::size_t N = static_cast<std::size_t>(side());
    std::size_t rows = 1;
    for (int a = 1; a < dim(); ++a) rows *= N;
    if (threads > 1) {
        const long nrows = static_cast<long>(rows);
#pragma omp parallel for num_threads(threads) schedule(static)
        for (long r = 0; r < nrows; ++r) fn(static_cast<std::size_t>(r));
    } else {
        for (std::size_t r = 0; r < rows; ++r) fn(r);
    }
}

template <class PairFn>
void NonlocalForm::row_pairs(std::size_t row, const StencilEntry& s, PairFn&& fn) const {
    const long N = side();
    std::size_t rest = row;
    long target = 0, mult = 1;
    for (int a = 1; a < dim(); ++a) {
        long t = static_cast<long>(rest % static_cast<std::size_t>(N)) + s.k[a];
        rest /= static_cast<std::size_t>(N);
        if (periodic_) {
            t = positive_mod(t, N);
        } else if (t < 0 || t >= N) {
            return;
        }
        target += t * mult;
        mult *= N;
    }
    const std::size_t pbase = row * static_cast<std::size_t>(N);
    const std::size_t qbase = static_cast<std::size_t>(target) * static_cast<std::size_t>(N);
    const long k0 = s.k[0];
    if (periodic_) {
        const long km = positive_mod(k0, N);
        for (long x = 0; x < N - km; ++x) fn(pbase + x, qbase + x + km);
        for (long x = N - km; x < N; ++x) fn(pbase + x, qbase + x + km - N);
    } else {
        const long lo = std::max(0L, -k0), hi = std::min(N, N - k0);
        for (long x = lo; x < hi; ++x) fn(pbase + x, qbase + x + k0);
    }
}

long NonlocalForm::neighbor(std::size_t p, const StencilEntry& s) const {
    const long N = side();
    long idx = 0, mult = 1;
    for (int a = 0; a < dim(); ++a) {
        long t = static_cast<long>(p % static_cast<std::size_t>(N)) + s.k[a];
        p /= static_cast<std::size_t>(N);
        if (periodic_) {
            t = positive_mod(t, N);
        } else if (t < 0 || t >= N) {
            return -1;
        }
        idx += t * mult;
        mult *= N;
    }
    return idx;
}

void NonlocalForm::pin(std::span<const std::uint8_t> pinned) {
    if (pinned.size() != grid_.size()) throw DimensionError("pin mask size differs from grid size");
    pinned_.assign(pinned.begin(), pinned.end());
}

std::size_t NonlocalForm::node_count() const { return grid_.count_in_E(); }

std::size_t NonlocalForm::edge_count() const {
    std::size_t total = 0;
    for_each_row(1, [&](std::size_t row) {
        for (const auto& s : stencil_)
            row_pairs(row, s, [&](std::size_t p, std::size_t q) { total += grid_.mask[p] & grid_.mask[q]; });
    });
    return total;
}

std::vector<int> NonlocalForm::components() const {
    UnionFind uf(grid_.size());
    for_each_row(1, [&](std::size_t row) {
        for (const auto& s : stencil_)
            row_pairs(row, s, [&](std::size_t p, std::size_t q) {
                if (grid_.mask[p] && grid_.mask[q]) uf.unite(p, q);
            });
    });
    std::vector<int> label(grid_.size(), -1);
    std::vector<int> root_label(grid_.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        if (!grid_.mask[i]) continue;
        const std::size_t r = uf.find(i);
        if (root_label[r] < 0) root_label[r] = next++;
        label[i] = root_label[r];
    }
    return label;
}

FormStats NonlocalForm::stats() const {
    FormStats st;
    st.nodes = node_count();
    st.edges = edge_count();
    const auto labels = components();
    st.components = labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1);
    return st;
}

double NonlocalForm::value(std::span<const double> phi) const {
    if (phi.size() != grid_.size()) throw DimensionError("field size differs from grid size");
    const std::size_t N = static_cast<std::size_t>(side());
    std::vector<double> partial(grid_.size() / N, 0.0);
    for_each_row(1, [&](std::size_t row) {
        double acc = 0.0;
        for (const auto& s : stencil_)
            row_pairs(row, s, [&](std::size_t p, std::size_t q) {
                const double diff = active_[q] * phi[q] - active_[p] * phi[p] + s.affine;
                acc += active_[p] * active_[q] * s.weight * diff * diff;
            });
        partial[row] = acc;
    });
    return std::accumulate(partial.begin(), partial.end(), 0.0);
}

void NonlocalForm::apply(std::span<const double> phi, std::span<double> out, int threads) const {
    const std::size_t N = static_cast<std::size_t>(side());
    for_each_row(threads, [&](std::size_t row) {
        double* o = out.data() + row * N;
        std::fill(o, o + N, 0.0);
        for (const auto& s : symmetric_)
            row_pairs(row, s, [&](std::size_t p, std::size_t q) {
                out[p] += s.weight * active_[q] * (phi[p] - active_[q] * phi[q]);
            });
        for (std::size_t i = row * N; i < (row + 1) * N; ++i)
            if (!is_free(i)) out[i] = 0.0;
    });
}

std::vector<double> NonlocalForm::linear_term() const {
    std::vector<double> r(grid_.size(), 0.0);
    for_each_row(1, [&](std::size_t row) {
        for (const auto& s : symmetric_)
            row_pairs(row, s, [&](std::size_t p, std::size_t q) { r[p] -= s.weight * s.affine * active_[q]; });
    });
    for (std::size_t i = 0; i < r.size(); ++i)
        if (!is_free(i)) r[i] = 0.0;
    return r;
}

std::vector<double> NonlocalForm::linear_term_abs() const {
    std::vector<double> r(grid_.size(), 0.0);
    for_each_row(1, [&](std::size_t row) {
        for (const auto& s : symmetric_)
            row_pairs(row, s,
                      [&](std::size_t p, std::size_t q) { r[p] += s.weight * std::abs(s.affine) * active_[q]; });
    });
    for (std::size_t i = 0; i < r.size(); ++i)
        if (!is_free(i)) r[i] = 0.0;
    return r;
}

std::vector<double> NonlocalForm::diagonal() const {
    std::vector<double> dg(grid_.size(), 0.0);
    for_each_row(1, [&](std::size_t row) {
        for (const auto& s : symmetric_)
            row_pairs(row, s, [&](std::size_t p, std::size_t q) { dg[p] += s.weight * active_[q]; });
    });
    for (std::size_t i = 0; i < dg.size(); ++i)
        if (!is_free(i)) dg[i] = 0.0;
    return dg;
}

NonlocalForm assemble(const TorusGrid& grid, const KernelSpec& kernel, double R, std::span<const double> z,
                      const AssemblyOptions& opts) {
    kernel.validate();
    const int d = grid.dim;
    if (kernel.dim != d) throw DimensionError("kernel and grid dimensions differ");
    if (static_cast<int>(z.size()) != d) throw DimensionError("affine datum z must have `dimension` entries");
    if (!(R > 0.0)) throw std::invalid_argument("truncation radius must be > 0");

    NonlocalForm f;
    f.grid_ = grid;
    f.periodic_ = opts.periodic;
    f.radius_ = R;
    f.z_.assign(z.begin(), z.end());

    const double h = grid.h;
    const int kmax = static_cast<int>(std::floor(R / h + 1e-9));
    const double vol2 = std::pow(h, 2 * d);
    const std::size_t S = static_cast<std::size_t>(2 * kmax + 1);
    std::size_t combos = 1;
    for (int a = 0; a < d; ++a) combos *= S;

    const double bytes = static_cast<double>(grid.size()) * (8.0 * 10.0 + 2.0) +
                         static_cast<double>(combos) * 2.0 * sizeof(StencilEntry);
    if (bytes > opts.memory_cap_mb * 1024.0 * 1024.0)
        throw MemoryCapError("form working set estimated at " + std::to_string(bytes / (1024.0 * 1024.0)) +
                             " MB exceeds memory cap of " + std::to_string(opts.memory_cap_mb) + " MB");

    std::vector<double> xi(d);
    double trace = 0.0;
    // Lexicographic order (k0 slowest) so edges come out sorted.
    for (std::size_t code = 0; code < combos; ++code) {
        StencilEntry e;
        std::size_t c = code;
        for (int a = d - 1; a >= 0; --a) {
            e.k[a] = static_cast<int>(c % S) - kmax;
            c /= S;
        }
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            xi[a] = static_cast<double>(e.k[a]) / grid.n;
            r2 += xi[a] * xi[a];
        }
        // xi = 0 pairs a point with itself and never contributes.
        if (r2 == 0.0 || std::sqrt(r2) > R * (1.0 + 1e-12)) continue;
        const double a = eval_kernel(kernel, xi);
        if (a <= 0.0) continue;
        e.weight = vol2 * a;
        for (int ax = 0; ax < d; ++ax) e.affine += z[ax] * xi[ax];
        trace += std::pow(h, d) * a * r2;
        f.stencil_.push_back(e);
    }
    f.stencil_trace_ = trace;
    f.tail_bound_ = truncation_tail(kernel, R);
    if (f.tail_bound_ > opts.tail_tol * std::max(trace, std::numeric_limits<double>::min()))
        throw TruncationError("truncation radius R=" + std::to_string(R) + " leaves second-moment mass " +
                              std::to_string(f.tail_bound_) + " > tail_tol * trace = " +
                              std::to_string(opts.tail_tol * trace));

    // Symmetrized stencil: weight(xi) + weight(-xi) on the union of offsets.
    std::map<std::array<int, 3>, StencilEntry> sym;
    for (const auto& e : f.stencil_) {
        for (int sign : {1, -1}) {
            const std::array<int, 3> k{sign * e.k[0], sign * e.k[1], sign * e.k[2]};
            auto [it, fresh] = sym.try_emplace(k);
            if (fresh) {
                it->second.k = k;
                for (int a = 0; a < d; ++a) it->second.affine += z[a] * static_cast<double>(k[a]) / grid.n;
            }
            it->second.weight += e.weight;
        }
    }
    for (const auto& [k, e] : sym) f.symmetric_.push_back(e);

    f.active_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f.active_[i] = grid.mask[i] ? 1.0 : 0.0;
    f.pinned_.assign(grid.size(), 0);
    return f;
}

SolveResult minimize(const NonlocalForm& form, const SolverOptions& opts) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("solver tolerance must be > 0");
    const std::size_t n = form.grid().size();
    const std::size_t N = static_cast<std::size_t>(form.side());
    const std::size_t rows = n / N;
    const int threads = std::max(1, opts.threads);

    // Fixed reduction order: per-row partial sums, then rows in order. The
    // parallel path reproduces the serial one bit for bit.
    std::vector<double> partial(rows);
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        auto rowdot = [&](std::size_t r) {
            double acc = 0.0;
            for (std::size_t i = r * N; i < (r + 1) * N; ++i) acc += a[i] * b[i];
            partial[r] = acc;
        };
        if (threads > 1) {
            const long nr = static_cast<long>(rows);
#pragma omp parallel for num_threads(threads) schedule(static)
            for (long r = 0; r < nr; ++r) rowdot(static_cast<std::size_t>(r));
        } else {
            for (std::size_t r = 0; r < rows; ++r) rowdot(r);
        }
        return std::accumulate(partial.begin(), partial.end(), 0.0);
    };

    SolveResult out;
    out.phi.assign(n, 0.0);
    std::vector<double> b = form.linear_term();
    for (double& v : b) v = -v;

    const auto babs = form.linear_term_abs();
    const double bnorm = std::sqrt(dot(b, b));
    const double babs_norm = std::sqrt(dot(babs, babs));

    const auto diag = form.diagonal();
    std::vector<double> inv_diag(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (diag[i] > 0.0) inv_diag[i] = 1.0 / diag[i];

    SolveReport& rep = out.report;
    if (bnorm > kCancellationFloor * babs_norm && bnorm > 0.0) {
        std::vector<double> r = b, zv(n), p(n), Ap(n);
        for (std::size_t i = 0; i < n; ++i) zv[i] = inv_diag[i] * r[i];
        p = zv;
        double rz = dot(r, zv);
        const double rz0 = rz;
        rep.residual = 1.0;
        while (rep.iterations < opts.max_iter) {
            form.apply(p, Ap, threads);
            const double pAp = dot(p, Ap);
            if (!(pAp > 0.0)) break;
            const double alpha = rz / pAp;
            for (std::size_t i = 0; i < n; ++i) {
                out.phi[i] += alpha * p[i];
                r[i] -= alpha * Ap[i];
                zv[i] = inv_diag[i] * r[i];
            }
            ++rep.iterations;
            const double rz_new = dot(r, zv);
            rep.residual = std::sqrt(std::max(rz_new, 0.0) / rz0);
            if (rep.residual <= opts.tol) break;
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = zv[i] + beta * p[i];
        }
        rep.converged = rep.residual <= opts.tol;
    } else {
        rep.converged = true;
    }

    // Null space: one constant per component without pinned nodes.
    const auto labels = form.components();
    const int ncomp = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<double> sum(ncomp, 0.0);
    std::vector<std::size_t> count(ncomp, 0);
    std::vector<std::uint8_t> anchored(ncomp, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0) continue;
        if (form.pinned()[i]) anchored[labels[i]] = 1;
        sum[labels[i]] += out.phi[i];
        ++count[labels[i]];
    }
    for (int c = 0; c < ncomp; ++c) rep.null_space_dim += anchored[c] ? 0 : 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0) {
            out.phi[i] = 0.0;
            continue;
        }
        if (!anchored[labels[i]]) out.phi[i] -= sum[labels[i]] / static_cast<double>(count[labels[i]]);
    }

    rep.energy = form.value(out.phi);
    if (!rep.converged)
        throw ConvergenceError("conjugate gradients stopped after " + std::to_string(rep.iterations) +
                                   " iterations at relative residual " + std::to_string(rep.residual),
                               rep);
    return out;
}

double field_energy(const NonlocalForm& form, std::span<const double> v) {
    const auto& grid = form.grid();
    if (v.size() != grid.size()) throw DimensionError("field size differs from grid size");
    double total = 0.0;
    form.for_each_edge([&](std::size_t y, std::size_t x, double w, double) {
        const double diff = v[x] - v[y];
        total += w * diff * diff;
    });
    return total;
}

TorusGrid unit_cell_of(const TorusGrid& grid) {
    TorusGrid g;
    g.dim = grid.dim;
    g.n = grid.n;
    g.cells = 1;
    g.h = grid.h;
    std::size_t total = 1;
    for (int a = 0; a < grid.dim; ++a) total *= static_cast<std::size_t>(grid.n);
    g.mask.resize(total);
    std::vector<int> multi(grid.dim);
    for (std::size_t i = 0; i < total; ++i) {
        g.multi_index(i, multi);
        g.mask[i] = grid.mask[grid.index(multi)];
    }
    return g;
}

std::vector<double> fold_average(std::span<const double> phi, const TorusGrid& grid) {
    if (phi.size() != grid.size()) throw DimensionError("field size differs from grid size");
    const TorusGrid cell = unit_cell_of(grid);
    std::vector<double> out(cell.size(), 0.0);
    std::vector<int> multi(grid.dim);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.multi_index(i, multi);
        for (int& m : multi) m %= grid.n;
        out[cell.index(multi)] += phi[i];
    }
    const double scale = std::pow(static_cast<double>(grid.cells), -grid.dim);
    for (double& v : out) v *= scale;
    return out;
}

}  // namespace nlhomog
