#include "nlhomog/gamma_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nlhomog/errors.hpp"

namespace nlhomog {

namespace {

// Distance from a grid point to the boundary of the box [0, side h]^d.
double boundary_distance(const TorusGrid& grid, std::size_t i, std::vector<double>& x) {
    grid.coords(i, x);
    const double L = grid.side() * grid.h;
    double dist = std::numeric_limits<double>::infinity();
    for (double c : x) dist = std::min({dist, c, L - c});
    return dist;
}

}  // namespace

std::vector<std::uint8_t> boundary_layer(const TorusGrid& grid, double delta) {
    const double width = 0.5 * delta * grid.cells;
    std::vector<std::uint8_t> mask(grid.size(), 0);
    std::vector<double> x(grid.dim);
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.mask[i] && boundary_distance(grid, i, x) < width) mask[i] = 1;
    return mask;
}

FiniteCubeResult finite_cube_value(const FiniteCubeProblem& p) {
    if (p.T < 1) throw std::invalid_argument("T must be a positive integer");
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
    if ((1.0 - p.delta) * p.T < 1.0 - 1e-12)
        throw GeometryError("boundary layer leaves an interior cube of side (1-delta)T = " +
                            std::to_string((1.0 - p.delta) * p.T) + " < 1");

    const TorusGrid grid = build_grid(p.perforation, p.n, p.T);
    AssemblyOptions assembly = p.options.assembly;
    assembly.periodic = p.periodic;
    NonlocalForm form = assemble(grid, p.kernel, p.R, p.z, assembly);

    const auto layer = boundary_layer(grid, p.delta);
    FiniteCubeResult out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid.mask[i]) continue;
        if (layer[i])
            ++out.pinned;
        else
            ++out.free;
    }
    if (out.pinned == 0) throw GeometryError("boundary layer contains no E-node; increase delta or n");
    if (out.free == 0) throw GeometryError("no E-node left inside the boundary layer");
    form.pin(layer);
    out.stats = form.stats();

    auto solved = minimize(form, p.options.solver);
    out.report = solved.report;
    out.value = solved.report.energy / std::pow(static_cast<double>(p.T), grid.dim);
    out.phi = std::move(solved.phi);
    return out;
}

DeltaRule delta_rule_from_string(const std::string& text) {
    // "1/T", "c/T" or a plain number.
    DeltaRule rule;
    const auto slash = text.find("/T");
    try {
        if (slash != std::string::npos && slash + 2 == text.size()) {
            rule.kind = DeltaRule::Kind::inverse;
            rule.scale = std::stod(text.substr(0, slash));
        } else {
            std::size_t used = 0;
            rule.kind = DeltaRule::Kind::fixed;
            rule.scale = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
        }
    } catch (const std::logic_error&) {
        throw std::invalid_argument("delta rule must be a number or of the form 'c/T', got '" + text + "'");
    }
    if (!(rule.scale > 0.0)) throw std::invalid_argument("delta rule scale must be > 0");
    return rule;
}

GammaStudy convergence_study(const FiniteCubeProblem& base, std::span<const int> T_list, const DeltaRule& rule,
                             const std::string& direction, double consistency_tol) {
    if (!std::is_sorted(T_list.begin(), T_list.end())) throw std::invalid_argument("T_list must be ascending");

    const TorusGrid cell = build_grid(base.perforation, base.n, 1);
    const double f0 = cell_value(base.z, cell, base.kernel, base.R, base.options).value;

    GammaStudy study;
    for (int T : T_list) {
        FiniteCubeProblem p = base;
        p.T = T;
        p.delta = rule(T);
        const auto r = finite_cube_value(p);
        GammaRow row;
        row.T = T;
        row.direction = direction;
        row.f_T = r.value;
        row.f_0 = f0;
        row.gap = r.value - f0;
        row.iterations = r.report.iterations;
        row.stats = r.stats;
        const double tol = consistency_tol * std::max(1.0, std::abs(f0));
        if (!study.rows.empty() && std::abs(row.gap) >= std::abs(study.rows.back().gap) && std::abs(row.gap) > tol)
            study.non_decreasing = true;
        if (row.f_T < f0 - tol) study.below_cell_value = true;
        study.rows.push_back(row);
    }
    return study;
}

BlendResult blend_boundary(const NonlocalForm& form, std::span<const double> v_inner, std::span<const double> v_outer,
                           double delta, int N) {
    const auto& grid = form.grid();
    if (v_inner.size() != grid.size() || v_outer.size() != grid.size())
        throw DimensionError("field size differs from grid size");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
    if (N < 1) throw std::invalid_argument("N must be >= 1");

    std::vector<double> dist(grid.size());
    std::vector<double> x(grid.dim);
    double deepest = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dist[i] = boundary_distance(grid, i, x);
        deepest = std::max(deepest, dist[i]);
    }
    if (deepest <= 2.0 * delta)
        throw GeometryError("delta = " + std::to_string(delta) + " leaves no point farther than 2 delta from the boundary");

    // Layer index of each point: k when delta(1 + (k-1)/N) < dist <= delta(1 + k/N), else 0.
    std::vector<int> layer(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = (dist[i] / delta - 1.0) * N;
        if (t > 0.0 && t <= N) layer[i] = std::max(1, static_cast<int>(std::ceil(t)));
    }
    std::vector<double> energy(N + 1, 0.0);
    form.for_each_edge([&](std::size_t y, std::size_t q, double w, double) {
        const double di = v_inner[q] - v_inner[y];
        const double dout = v_outer[q] - v_outer[y];
        const double e = w * (di * di + dout * dout);
        energy[layer[y]] += e;
        if (layer[q] != layer[y]) energy[layer[q]] += e;
    });

    BlendResult out;
    out.layer = 1;
    for (int k = 2; k <= N; ++k)
        if (energy[k] < energy[out.layer]) out.layer = k;

    const double start = delta * (1.0 + static_cast<double>(out.layer - 1) / N);
    out.values.resize(grid.size());
    out.cutoff.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        // The flat regions are decided by comparison so they hold exactly.
        double phi = std::clamp(N / delta * (dist[i] - start), 0.0, 1.0);
        if (dist[i] <= start) phi = 0.0;
        if (dist[i] >= start + delta / N) phi = 1.0;
        out.cutoff[i] = phi;
        out.values[i] = phi == 1.0 ? v_inner[i] : phi == 0.0 ? v_outer[i] : phi * v_inner[i] + (1.0 - phi) * v_outer[i];
    }
    return out;
}

}  // namespace nlhomog
