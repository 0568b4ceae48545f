#include "nlhomog/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "nlhomog/errors.hpp"
#include "nlhomog/random.hpp"

namespace nlhomog {

namespace {

double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double wrap_unit(double x) {
    double f = x - std::floor(x);
    return f >= 1.0 ? 0.0 : f;
}

long positive_mod(long a, long m) {
    const long r = a % m;
    return r < 0 ? r + m : r;
}

}  // namespace

std::string to_string(PerforationKind kind) {
    switch (kind) {
        case PerforationKind::none: return "none";
        case PerforationKind::ball: return "ball";
        case PerforationKind::box: return "box";
        case PerforationKind::frame: return "frame";
    }
    return "?";
}

PerforationKind perforation_kind_from_string(const std::string& name) {
    if (name == "none") return PerforationKind::none;
    if (name == "ball") return PerforationKind::ball;
    if (name == "box") return PerforationKind::box;
    if (name == "frame") return PerforationKind::frame;
    throw std::invalid_argument("unknown perforation kind '" + name + "'");
}

Perforation Perforation::none(int dim) {
    Perforation p;
    p.kind = PerforationKind::none;
    p.dim = dim;
    p.validate();
    return p;
}

Perforation Perforation::ball(std::vector<double> center, double radius) {
    Perforation p;
    p.kind = PerforationKind::ball;
    p.dim = static_cast<int>(center.size());
    p.center = std::move(center);
    p.radius = radius;
    p.validate();
    return p;
}

Perforation Perforation::box(std::vector<double> center, std::vector<double> half_sides) {
    Perforation p;
    p.kind = PerforationKind::box;
    p.dim = static_cast<int>(center.size());
    p.center = std::move(center);
    p.half_sides = std::move(half_sides);
    p.validate();
    return p;
}

Perforation Perforation::frame(int dim, double delta) {
    Perforation p;
    p.kind = PerforationKind::frame;
    p.dim = dim;
    p.delta = delta;
    p.validate();
    return p;
}

void Perforation::validate() const {
    if (dim < 1 || dim > 3) throw GeometryError("perforation dimension must be 1, 2 or 3");
    switch (kind) {
        case PerforationKind::none: return;
        case PerforationKind::ball:
            if (static_cast<int>(center.size()) != dim)
                throw GeometryError("perforation.center must have `dimension` entries");
            if (!(radius > 0.0)) throw GeometryError("perforation.radius must be > 0");
            if (radius >= 0.5) throw GeometryError("ball radius must be < 1/2 for disjoint translates");
            for (double c : center)
                if (c - radius <= 0.0 || c + radius >= 1.0)
                    throw GeometryError("ball perforation must lie strictly inside the unit cell");
            return;
        case PerforationKind::box:
            if (static_cast<int>(center.size()) != dim || static_cast<int>(half_sides.size()) != dim)
                throw GeometryError("perforation.center and perforation.half_sides need `dimension` entries");
            for (int a = 0; a < dim; ++a) {
                if (!(half_sides[a] > 0.0)) throw GeometryError("box half-sides must be > 0");
                if (center[a] - half_sides[a] <= 0.0 || center[a] + half_sides[a] >= 1.0)
                    throw GeometryError("box perforation must lie strictly inside the unit cell");
            }
            return;
        case PerforationKind::frame:
            if (!(delta > 0.0 && delta < 0.25))
                throw GeometryError("frame perforation requires 0 < delta < 1/4, got " + std::to_string(delta));
            return;
    }
}

std::vector<double> Perforation::box_center() const {
    if (kind == PerforationKind::frame) return std::vector<double>(dim, 0.5);
    return center;
}

std::vector<double> Perforation::box_half_sides() const {
    if (kind == PerforationKind::frame) return std::vector<double>(dim, 0.5 * (1.0 - delta));
    return half_sides;
}

bool Perforation::contains(std::span<const double> x) const {
    switch (kind) {
        case PerforationKind::none: return false;
        case PerforationKind::ball: return dist(x, center) <= radius;
        case PerforationKind::box:
        case PerforationKind::frame: {
            const auto c = box_center();
            const auto s = box_half_sides();
            for (int a = 0; a < dim; ++a)
                if (std::abs(x[a] - c[a]) > s[a]) return false;
            return true;
        }
    }
    return false;
}

double Perforation::distance_outside(std::span<const double> x) const {
    switch (kind) {
        case PerforationKind::none: return std::numeric_limits<double>::infinity();
        case PerforationKind::ball: return std::max(0.0, dist(x, center) - radius);
        case PerforationKind::box:
        case PerforationKind::frame: {
            const auto c = box_center();
            const auto s = box_half_sides();
            double acc = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double e = std::max(0.0, std::abs(x[a] - c[a]) - s[a]);
                acc += e * e;
            }
            return std::sqrt(acc);
        }
    }
    return 0.0;
}

double Perforation::depth_inside(std::span<const double> x) const {
    if (!contains(x)) return 0.0;
    switch (kind) {
        case PerforationKind::none: return 0.0;
        case PerforationKind::ball: return radius - dist(x, center);
        case PerforationKind::box:
        case PerforationKind::frame: {
            const auto c = box_center();
            const auto s = box_half_sides();
            double depth = std::numeric_limits<double>::infinity();
            for (int a = 0; a < dim; ++a) depth = std::min(depth, s[a] - std::abs(x[a] - c[a]));
            return depth;
        }
    }
    return 0.0;
}

std::vector<double> Perforation::reflect(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    double gauge = 0.0;
    std::vector<double> c;
    if (kind == PerforationKind::ball) {
        c = center;
        gauge = dist(x, c) / radius;
    } else if (kind == PerforationKind::box || kind == PerforationKind::frame) {
        c = box_center();
        const auto s = box_half_sides();
        for (int a = 0; a < dim; ++a) gauge = std::max(gauge, std::abs(x[a] - c[a]) / s[a]);
    } else {
        throw GeometryError("reflection needs a ball or box perforation");
    }
    if (gauge == 0.0) throw GeometryError("cannot reflect the center of the perforation");
    const double scale = (2.0 - gauge) / gauge;
    for (int a = 0; a < dim; ++a) out[a] = c[a] + (x[a] - c[a]) * scale;
    return out;
}

double Perforation::volume() const {
    switch (kind) {
        case PerforationKind::none: return 0.0;
        case PerforationKind::ball: {
            if (dim == 1) return 2.0 * radius;
            if (dim == 2) return std::numbers::pi * radius * radius;
            return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
        }
        case PerforationKind::box:
        case PerforationKind::frame: {
            double v = 1.0;
            for (double s : box_half_sides()) v *= 2.0 * s;
            return v;
        }
    }
    return 0.0;
}

bool in_E(const Perforation& p, std::span<const double> x) {
    if (p.kind == PerforationKind::none) return true;
    std::vector<double> y(x.size());
    for (std::size_t a = 0; a < x.size(); ++a) y[a] = wrap_unit(x[a]);
    return !p.contains(y);
}

std::size_t TorusGrid::index(std::span<const int> multi) const {
    std::size_t idx = 0;
    const std::size_t s = static_cast<std::size_t>(side());
    for (int a = dim - 1; a >= 0; --a) idx = idx * s + static_cast<std::size_t>(multi[a]);
    return idx;
}

void TorusGrid::multi_index(std::size_t idx, std::span<int> out) const {
    const std::size_t s = static_cast<std::size_t>(side());
    for (int a = 0; a < dim; ++a) {
        out[a] = static_cast<int>(idx % s);
        idx /= s;
    }
}

void TorusGrid::coords(std::size_t idx, std::span<double> out) const {
    const std::size_t s = static_cast<std::size_t>(side());
    for (int a = 0; a < dim; ++a) {
        out[a] = (static_cast<double>(idx % s) + 0.5) / n;
        idx /= s;
    }
}

std::size_t TorusGrid::count_in_E() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

double TorusGrid::solid_fraction() const {
    std::vector<int> multi(dim);
    std::size_t in_cell = 0, hits = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        multi_index(i, multi);
        if (std::all_of(multi.begin(), multi.end(), [&](int m) { return m < n; })) {
            ++in_cell;
            hits += mask[i];
        }
    }
    return static_cast<double>(hits) / static_cast<double>(in_cell);
}

TorusGrid build_grid(const Perforation& p, int n, int T) {
    p.validate();
    if (n < 4) throw std::invalid_argument("grid.n must be >= 4");
    if (T < 1) throw std::invalid_argument("grid.T must be >= 1");
    TorusGrid g;
    g.dim = p.dim;
    g.n = n;
    g.cells = T;
    g.h = 1.0 / n;
    std::size_t total = 1;
    for (int a = 0; a < p.dim; ++a) total *= static_cast<std::size_t>(n) * T;
    g.mask.resize(total);

    // Membership depends only on the position within a cell; evaluate one
    // cell and replicate so the mask is exactly periodic.
    std::size_t cell_total = 1;
    for (int a = 0; a < p.dim; ++a) cell_total *= static_cast<std::size_t>(n);
    std::vector<std::uint8_t> cell(cell_total);
    std::vector<double> x(p.dim);
    for (std::size_t i = 0; i < cell_total; ++i) {
        std::size_t r = i;
        for (int a = 0; a < p.dim; ++a) {
            x[a] = (static_cast<double>(r % n) + 0.5) / n;
            r /= n;
        }
        cell[i] = in_E(p, x) ? 1 : 0;
    }
    std::vector<int> multi(p.dim);
    for (std::size_t i = 0; i < total; ++i) {
        g.multi_index(i, multi);
        std::size_t ci = 0;
        for (int a = p.dim - 1; a >= 0; --a) ci = ci * n + static_cast<std::size_t>(multi[a] % n);
        g.mask[i] = cell[ci];
    }
    if (g.count_in_E() == 0) throw GeometryError("perforated set has no lattice point at this resolution");
    return g;
}

double reflection_distortion(const Perforation& p, double tau, int pairs, std::uint64_t seed) {
    const auto c = p.box_center();
    double reach = 0.0;
    if (p.kind == PerforationKind::ball) {
        reach = p.radius;
    } else {
        for (double s : p.box_half_sides()) reach = std::max(reach, s);
    }
    Rng rng(seed);
    const int d = p.dim;
    auto sample_inner = [&] {
        std::vector<double> x(d);
        while (true) {
            for (int a = 0; a < d; ++a) x[a] = rng.uniform(c[a] - reach, c[a] + reach);
            if (p.contains(x) && p.depth_inside(x) < tau) return x;
        }
    };
    double worst = 1.0;
    for (int k = 0; k < pairs; ++k) {
        const auto a = sample_inner();
        const auto b = sample_inner();
        const double dab = dist(a, b);
        if (dab == 0.0) continue;
        const double q = dist(p.reflect(a), p.reflect(b)) / dab;
        worst = std::max({worst, q, 1.0 / q});
    }
    return worst;
}

CollarSets collar_sets(const Perforation& p, double tau, const TorusGrid& grid, double max_distortion) {
    if (p.kind != PerforationKind::ball && p.kind != PerforationKind::box && p.kind != PerforationKind::frame)
        throw GeometryError("collar sets need a ball or box perforation");
    if (!(tau > 0.0)) throw GeometryError("collar depth tau must be > 0");
    if (grid.dim != p.dim) throw DimensionError("grid and perforation dimensions differ");
    const int d = p.dim;

    // The outer collar must stay inside the open cell.
    const auto c = p.box_center();
    for (int a = 0; a < d; ++a) {
        const double reach = p.kind == PerforationKind::ball ? p.radius : p.box_half_sides()[a];
        if (c[a] - reach - tau <= 0.0 || c[a] + reach + tau >= 1.0)
            throw GeometryError("collar depth tau=" + std::to_string(tau) + " escapes the unit cell");
    }
    // Reflection must keep the collar away from the center.
    if (p.kind == PerforationKind::ball && tau >= p.radius)
        throw GeometryError("collar depth tau must be smaller than the ball radius");
    for (double s : p.box_half_sides())
        if ((p.kind != PerforationKind::ball) && tau >= s)
            throw GeometryError("collar depth tau must be smaller than the box half-sides");

    CollarSets out;
    out.distortion = reflection_distortion(p, tau, 1000, 0x5eedULL);
    if (out.distortion > max_distortion)
        throw GeometryError("reflection distorts distances by " + std::to_string(out.distortion) + " > " +
                            std::to_string(max_distortion) + " at tau=" + std::to_string(tau) + "; reduce tau");

    const int n = grid.n;
    const int side = grid.side();
    std::vector<int> multi(d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.multi_index(i, multi);
        if (std::any_of(multi.begin(), multi.end(), [&](int m) { return m >= n; })) continue;
        grid.coords(i, x);
        if (grid.mask[i]) {
            if (p.distance_outside(x) < tau) out.outer.push_back(i);
        } else {
            const double depth = p.depth_inside(x);
            if (depth < tau) {
                out.inner.push_back(i);
                out.depth.push_back(depth);
            }
        }
    }
    if (out.inner.empty() || out.outer.empty())
        throw GeometryError("collar of depth tau=" + std::to_string(tau) + " is not resolved by n=" +
                            std::to_string(n));

    // Snap every reflected point to the nearest lattice point of E.
    std::vector<int> base(d), probe(d);
    std::vector<double> y(d);
    for (std::size_t k = 0; k < out.inner.size(); ++k) {
        grid.coords(out.inner[k], x);
        const auto r = p.reflect(x);
        for (int a = 0; a < d; ++a) base[a] = static_cast<int>(std::lround(r[a] * n - 0.5));
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        const int reach = 1;
        int span = 2 * reach + 1, combos = 1;
        for (int a = 0; a < d; ++a) combos *= span;
        for (int code = 0; code < combos; ++code) {
            int cc = code;
            for (int a = 0; a < d; ++a) {
                probe[a] = static_cast<int>(positive_mod(base[a] + (cc % span) - reach, side));
                y[a] = (base[a] + (cc % span) - reach + 0.5) / n;
                cc /= span;
            }
            const std::size_t j = grid.index(probe);
            if (!grid.mask[j]) continue;
            const double dj = dist(y, r);
            if (dj < best) {
                best = dj;
                best_idx = j;
            }
        }
        if (!std::isfinite(best))
            throw GeometryError("reflection of a collar point has no lattice point of E nearby");
        out.reflected.push_back(best_idx);
    }
    return out;
}

bool ShrunkDomain::base_contains(std::span<const double> x) const {
    for (std::size_t a = 0; a < lower.size(); ++a)
        if (x[a] <= lower[a] || x[a] >= upper[a]) return false;
    return true;
}

bool ShrunkDomain::contains(std::span<const double> x) const {
    for (std::size_t a = 0; a < lower.size(); ++a)
        if (x[a] - lower[a] <= margin || upper[a] - x[a] <= margin) return false;
    return true;
}

}  // namespace nlhomog
