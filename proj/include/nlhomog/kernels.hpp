#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nlhomog {

enum class KernelKind { ball_indicator, power_decay, stripe_indicator };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

// A convolution kernel a(xi) on R^d.
//
//   ball_indicator    a = 1 on the closed ball |xi| <= radius
//   power_decay       a = C (1+|xi|)^-(d+2+kappa) for |xi| <= cutoff, else 0
//   stripe_indicator  a = 1 on the closed cube center + [-delta/2, delta/2]^d
struct KernelSpec {
    KernelKind kind = KernelKind::ball_indicator;
    int dim = 2;
    double radius = 1.0;
    double amplitude = 1.0;
    double exponent = 1.0;
    double cutoff = 8.0;
    std::vector<double> center;
    double delta = 0.0;

    static KernelSpec ball(int dim, double radius);
    static KernelSpec power(int dim, double amplitude, double exponent, double cutoff);
    static KernelSpec stripe(std::vector<double> center, double delta);

    // Throws DimensionError / std::invalid_argument on malformed parameters.
    void validate() const;

    // Radius of the smallest centered ball containing the support.
    double support_radius() const;

    // Upper bound of a over R^d.
    double sup() const;
};

double eval_kernel(const KernelSpec& k, std::span<const double> xi);

using MomentMatrix = Eigen::MatrixXd;

struct QuadratureSpec {
    double step = 1.0 / 128.0;
    // Largest acceptable bound on the second-moment mass neglected by the
    // power-law cutoff.
    double tail_tol = 1e-2;
};

struct MomentResult {
    MomentMatrix matrix;
    // Bound on |midpoint - exact| for every entry of the truncated kernel.
    double error_estimate = 0.0;
    // Neglected mass int_{|xi|>cutoff} C(1+|xi|)^-(d+2+kappa) |xi|^2 (zero for
    // compactly supported kinds).
    double tail_bound = 0.0;
};

// Midpoint rule for A_ij = int a(xi) xi_i xi_j dxi over [-R, R]^d, R the
// support radius. Throws TruncationError when tail_bound > quad.tail_tol.
MomentResult second_moment_matrix(const KernelSpec& k, const QuadratureSpec& quad);

// Analytic bound on int_{|xi|>R} C(1+|xi|)^-(d+2+kappa) |xi|^2 dxi, i.e.
// C |S^{d-1}| (1+R)^-kappa / kappa.
double power_tail_bound(int dim, double amplitude, double exponent, double R);

// Second-moment mass of k outside the ball of radius R (trace of the
// neglected part of the moment matrix). Zero once R covers the support.
double truncation_tail(const KernelSpec& k, double R);

// Smallest radius whose truncation tail is below rel_tol * trace(A); for
// compactly supported kernels this is the support radius.
double default_truncation_radius(const KernelSpec& k, double rel_tol);

// Deterministic grid sampling of the hypothesis a(xi) >= c on |xi| <= r0.
// `samples` grid points per axis (rounded up to odd so the axes and the
// points +-r0 e_i are sampled).
bool check_lower_bound(const KernelSpec& k, double c, double r0, int samples);

}  // namespace nlhomog
