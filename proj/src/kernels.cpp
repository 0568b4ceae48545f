#include "nlhomog/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "nlhomog/errors.hpp"

namespace nlhomog {

namespace {

// Lattice points exactly on a closed support boundary must not flicker with
// rounding of k/n.
constexpr double kBoundarySlack = 1e-12;

double norm(std::span<const double> xi) {
    double s = 0.0;
    for (double v : xi) s += v * v;
    return std::sqrt(s);
}

double unit_sphere_area(int dim) {
    switch (dim) {
        case 1: return 2.0;
        case 2: return 2.0 * std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi;
        default: throw DimensionError("dimension must be 1, 2 or 3");
    }
}

// Calls fn(center) for every cell of the uniform grid of step h covering
// [-m h, m h]^dim.
template <class Fn>
void for_each_cell(int dim, long m, double h, Fn&& fn) {
    std::vector<long> idx(dim, 0);
    std::vector<double> c(dim);
    const long side = 2 * m;
    while (true) {
        for (int a = 0; a < dim; ++a) c[a] = (static_cast<double>(idx[a] - m) + 0.5) * h;
        fn(std::span<const double>(c));
        int a = 0;
        while (a < dim && ++idx[a] == side) idx[a++] = 0;
        if (a == dim) break;
    }
}

}  // namespace

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::ball_indicator: return "ball";
        case KernelKind::power_decay: return "power";
        case KernelKind::stripe_indicator: return "stripe";
    }
    return "?";
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "ball" || name == "ball_indicator") return KernelKind::ball_indicator;
    if (name == "power" || name == "power_decay") return KernelKind::power_decay;
    if (name == "stripe" || name == "stripe_indicator") return KernelKind::stripe_indicator;
    throw std::invalid_argument("unknown kernel kind '" + name + "'");
}

KernelSpec KernelSpec::ball(int dim, double radius) {
    KernelSpec k;
    k.kind = KernelKind::ball_indicator;
    k.dim = dim;
    k.radius = radius;
    k.validate();
    return k;
}

KernelSpec KernelSpec::power(int dim, double amplitude, double exponent, double cutoff) {
    KernelSpec k;
    k.kind = KernelKind::power_decay;
    k.dim = dim;
    k.amplitude = amplitude;
    k.exponent = exponent;
    k.cutoff = cutoff;
    k.validate();
    return k;
}

KernelSpec KernelSpec::stripe(std::vector<double> center, double delta) {
    KernelSpec k;
    k.kind = KernelKind::stripe_indicator;
    k.dim = static_cast<int>(center.size());
    k.center = std::move(center);
    k.delta = delta;
    k.validate();
    return k;
}

void KernelSpec::validate() const {
    if (dim < 1 || dim > 3) throw DimensionError("kernel dimension must be 1, 2 or 3");
    switch (kind) {
        case KernelKind::ball_indicator:
            if (!(radius > 0.0)) throw std::invalid_argument("kernel.radius must be > 0");
            break;
        case KernelKind::power_decay:
            if (!(amplitude >= 0.0)) throw std::invalid_argument("kernel.amplitude must be >= 0");
            if (!(exponent > 0.0)) throw std::invalid_argument("kernel.exponent must be > 0");
            if (!(cutoff > 0.0)) throw std::invalid_argument("kernel.cutoff must be > 0");
            break;
        case KernelKind::stripe_indicator:
            if (static_cast<int>(center.size()) != dim)
                throw DimensionError("kernel.center must have `dimension` entries");
            if (!(delta > 0.0)) throw std::invalid_argument("kernel.delta must be > 0");
            break;
    }
}

double KernelSpec::support_radius() const {
    switch (kind) {
        case KernelKind::ball_indicator: return radius;
        case KernelKind::power_decay: return cutoff;
        case KernelKind::stripe_indicator: {
            double s = 0.0;
            for (double c : center) {
                const double far = std::abs(c) + 0.5 * delta;
                s += far * far;
            }
            return std::sqrt(s);
        }
    }
    return 0.0;
}

double KernelSpec::sup() const {
    return kind == KernelKind::power_decay ? amplitude : 1.0;
}

double eval_kernel(const KernelSpec& k, std::span<const double> xi) {
    if (static_cast<int>(xi.size()) != k.dim)
        throw DimensionError("eval_kernel: xi has " + std::to_string(xi.size()) +
                             " components, kernel dimension is " + std::to_string(k.dim));
    switch (k.kind) {
        case KernelKind::ball_indicator:
            return norm(xi) <= k.radius * (1.0 + kBoundarySlack) ? 1.0 : 0.0;
        case KernelKind::power_decay: {
            const double r = norm(xi);
            if (r > k.cutoff * (1.0 + kBoundarySlack)) return 0.0;
            return k.amplitude * std::pow(1.0 + r, -(k.dim + 2.0 + k.exponent));
        }
        case KernelKind::stripe_indicator: {
            const double half = 0.5 * k.delta + kBoundarySlack;
            for (int a = 0; a < k.dim; ++a)
                if (std::abs(xi[a] - k.center[a]) > half) return 0.0;
            return 1.0;
        }
    }
    return 0.0;
}

double power_tail_bound(int dim, double amplitude, double exponent, double R) {
    return amplitude * unit_sphere_area(dim) * std::pow(1.0 + R, -exponent) / exponent;
}

MomentResult second_moment_matrix(const KernelSpec& k, const QuadratureSpec& quad) {
    k.validate();
    if (!(quad.step > 0.0)) throw std::invalid_argument("quadrature step must be > 0");
    const int d = k.dim;

    MomentResult out;
    out.matrix = MomentMatrix::Zero(d, d);
    if (k.kind == KernelKind::power_decay) {
        out.tail_bound = power_tail_bound(d, k.amplitude, k.exponent, k.cutoff);
        if (out.tail_bound > quad.tail_tol)
            throw TruncationError("power-law cutoff Rmax=" + std::to_string(k.cutoff) +
                                  " neglects second-moment mass up to " +
                                  std::to_string(out.tail_bound) + " > tail_tol=" +
                                  std::to_string(quad.tail_tol));
    }

    const double h = quad.step;
    const long m = static_cast<long>(std::ceil(k.support_radius() / h - 1e-9));
    const double vol = std::pow(h, d);
    const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(d));

    // Cell corners relative to the center; a sign change of a among them marks a
    // cell cut by the support boundary.
    std::vector<std::vector<double>> corners;
    for (int mask = 0; mask < (1 << d); ++mask) {
        std::vector<double> p(d);
        for (int a = 0; a < d; ++a) p[a] = ((mask >> a) & 1 ? 0.5 : -0.5) * h;
        corners.push_back(std::move(p));
    }

    std::vector<double> p(d);
    double err = 0.0;
    for_each_cell(d, m, h, [&](std::span<const double> c) {
        const double ac = eval_kernel(k, c);
        bool straddles = false;
        for (const auto& off : corners) {
            for (int a = 0; a < d; ++a) p[a] = c[a] + off[a];
            if ((eval_kernel(k, p) == 0.0) != (ac == 0.0)) {
                straddles = true;
                break;
            }
        }
        if (ac != 0.0) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) out.matrix(i, j) += vol * ac * c[i] * c[j];
        }
        if (straddles) {
            const double r = norm(c) + half_diag;
            err += vol * k.sup() * r * r;
            return;
        }
        if (ac == 0.0) return;
        // Smooth cell: midpoint error is (h^2/24) sum_k d_kk f per unit volume;
        // second differences over half steps approximate d_kk f.
        double worst = 0.0;
        std::vector<double> fp(d * d), fm(d * d);
        for (int ax = 0; ax < d; ++ax) {
            std::copy(c.begin(), c.end(), p.begin());
            p[ax] = c[ax] + 0.5 * h;
            const double ap = eval_kernel(k, p);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) fp[i * d + j] = ap * p[i] * p[j];
            p[ax] = c[ax] - 0.5 * h;
            const double am = eval_kernel(k, p);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) fm[i * d + j] = am * p[i] * p[j];
            for (int ij = 0; ij < d * d; ++ij) {
                const double fc = ac * c[ij / d] * c[ij % d];
                worst = std::max(worst, std::abs(fp[ij] - 2.0 * fc + fm[ij]) * 4.0);
            }
        }
        err += vol * worst * d / 24.0;
    });
    out.error_estimate = err;
    return out;
}

double truncation_tail(const KernelSpec& k, double R) {
    k.validate();
    if (R >= k.support_radius()) return 0.0;
    if (k.kind == KernelKind::power_decay)
        return power_tail_bound(k.dim, k.amplitude, k.exponent, R);
    // Compact support reaching past R: integrate a |xi|^2 over |xi| > R.
    const double h = k.support_radius() / 256.0;
    const long m = 256;
    const double vol = std::pow(h, k.dim);
    double tail = 0.0;
    for_each_cell(k.dim, m, h, [&](std::span<const double> c) {
        const double r = norm(c);
        if (r > R) tail += vol * eval_kernel(k, c) * r * r;
    });
    return tail;
}

double default_truncation_radius(const KernelSpec& k, double rel_tol) {
    k.validate();
    if (k.kind != KernelKind::power_decay) return k.support_radius();
    // Trace from a coarse quadrature is enough to set the scale.
    QuadratureSpec q;
    q.step = std::min(0.125, k.cutoff / 32.0);
    q.tail_tol = std::numeric_limits<double>::infinity();
    const double trace = second_moment_matrix(k, q).matrix.trace();
    if (trace <= 0.0) return k.cutoff;
    // Solve C' (1+R)^-kappa = rel_tol * trace for R.
    const double cprime = power_tail_bound(k.dim, k.amplitude, k.exponent, 0.0);
    const double R = std::pow(cprime / (rel_tol * trace), 1.0 / k.exponent) - 1.0;
    return std::clamp(R, 0.0, k.cutoff);
}

bool check_lower_bound(const KernelSpec& k, double c, double r0, int samples) {
    k.validate();
    if (!(c > 0.0) || !(r0 > 0.0)) throw std::invalid_argument("check_lower_bound: c and r0 must be > 0");
    int s = std::max(samples, 3);
    if (s % 2 == 0) ++s;
    const int d = k.dim;
    const double step = 2.0 * r0 / (s - 1);
    std::vector<int> idx(d, 0);
    std::vector<double> xi(d);
    while (true) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            xi[a] = -r0 + idx[a] * step;
            if (idx[a] == s - 1) xi[a] = r0;
            if (2 * idx[a] == s - 1) xi[a] = 0.0;
            r2 += xi[a] * xi[a];
        }
        if (std::sqrt(r2) <= r0 * (1.0 + kBoundarySlack) && eval_kernel(k, xi) < c) return false;
        int a = 0;
        while (a < d && ++idx[a] == s) idx[a++] = 0;
        if (a == d) break;
    }
    return true;
}

}  // namespace nlhomog
