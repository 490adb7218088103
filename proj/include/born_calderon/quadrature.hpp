#pragma once

#include "born_calderon/geometry.hpp"

#include <functional>
#include <span>
#include <vector>

namespace bc {

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on the three-term recurrence).
GaussRule gauss_legendre(int n);
/// n-point Gauss-Legendre rule mapped to [a, b].
GaussRule gauss_legendre(int n, double a, double b);
/// n-point Gauss rule on [0, b] for the weight r^2 (Golub-Welsch on the
/// Jacobi (0,2) recurrence); exact for polynomials of degree 2n-1.
GaussRule gauss_radial_r2(int n, double b = 1.0);

/// Gauss-Legendre panels of n nodes on the intervals cut by `breaks`.
/// `breaks` must be increasing; the first and last entries are the endpoints.
GaussRule composite_gauss(std::span<const double> breaks, int n);

/// Product rule: Gauss-Legendre in cos θ times trapezoid in φ.
struct SphereRule {
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    int exactness_degree = 0;
};

SphereRule make_sphere_rule(int degree);

struct BallRule {
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    int radial_order = 0;
    int angular_degree = 0;
};

/// Ball rule on B_R (R = last break, default 1). The panel [0, b_1] uses the
/// r^2-weighted Gauss rule with `radial_order` nodes; later panels use
/// Gauss-Legendre with radial_order+1 nodes times r^2.
BallRule make_ball_rule(int radial_order, int angular_degree, std::span<const double> breaks = {});

/// A bounded function on the ball with its declared radial discontinuities.
struct BallFunction {
    std::function<double(const Vec3&)> eval;
    /// Radii in (0, support_radius) across which the function may jump.
    std::vector<double> radial_breaks;
    double support_radius = 1.0;
};

/// Breakpoints 0 < b_1 < ... < support_radius used for the ball rule.
std::vector<double> ball_breaks(const BallFunction& q);

cplx fourier_transform(const BallFunction& q, const Vec3& xi, const BallRule& rule);

struct OracleOptions {
    int initial_radial_order = 12;
    int initial_angular_degree = 16;
    int max_doublings = 4;
    double tolerance = 1e-9;
};

struct OracleResult {
    cplx value;
    int radial_order = 0;
    int angular_degree = 0;
    /// |difference| between the last two refinements.
    double last_change = 0.0;
    bool converged = false;
};

/// q̂(ξ) = ∫_B q(x) e^{-i x·ξ} dx with refinement by doubling both orders
/// until two successive values differ by less than the tolerance.
OracleResult fourier_oracle(const BallFunction& q, const Vec3& xi, const OracleOptions& options = {});

} // namespace bc
