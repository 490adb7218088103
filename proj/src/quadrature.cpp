#include "born_calderon/quadrature.hpp"

#include "born_calderon/errors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace bc {

GaussRule gauss_legendre(int n)
{
    if (n < 1) {
        throw DomainError("Gauss-Legendre rule needs n >= 1");
    }
    if (n == 1) {
        return {{0.0}, {2.0}};
    }
    GaussRule rule;
    rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
    rule.weights.assign(static_cast<std::size_t>(n), 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // Derivative at the converged node for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    }
    return rule;
}

GaussRule gauss_legendre(int n, double a, double b)
{
    GaussRule rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

GaussRule gauss_radial_r2(int n, double b)
{
    if (n < 1) {
        throw DomainError("radial Gauss rule needs n >= 1");
    }
    // Jacobi weight (1-x)^0 (1+x)^2 on [-1, 1].
    constexpr double alpha = 0.0;
    constexpr double beta = 2.0;
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int j = 0; j < n; ++j) {
        const double s = 2.0 * j + alpha + beta;
        diag[j] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
        if (j + 1 < n) {
            const double k = j + 1.0;
            const double t = 2.0 * k + alpha + beta;
            sub[j] = std::sqrt(4.0 * k * (k + alpha) * (k + beta) * (k + alpha + beta) / (t * t * (t + 1.0) * (t - 1.0)));
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("Golub-Welsch eigen-decomposition failed");
    }
    const double mu0 = 8.0 / 3.0;
    GaussRule rule;
    for (int j = 0; j < n; ++j) {
        const double x = solver.eigenvalues()[j];
        const double v0 = solver.eigenvectors()(0, j);
        // r = b (1+x)/2, r^2 dr = b^3 (1+x)^2 dx / 8
        rule.nodes.push_back(0.5 * b * (1.0 + x));
        rule.weights.push_back(mu0 * v0 * v0 * b * b * b / 8.0);
    }
    return rule;
}

GaussRule composite_gauss(std::span<const double> breaks, int n)
{
    GaussRule out;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        if (!(breaks[p + 1] > breaks[p])) {
            continue;
        }
        const GaussRule g = gauss_legendre(n, breaks[p], breaks[p + 1]);
        out.nodes.insert(out.nodes.end(), g.nodes.begin(), g.nodes.end());
        out.weights.insert(out.weights.end(), g.weights.begin(), g.weights.end());
    }
    return out;
}

SphereRule make_sphere_rule(int degree)
{
    if (degree < 0) {
        throw DomainError("sphere rule degree must be non-negative");
    }
    const int nt = (degree + 2) / 2;
    const int np = degree + 1;
    const GaussRule g = gauss_legendre(nt);
    SphereRule rule;
    rule.exactness_degree = degree;
    rule.nodes.reserve(static_cast<std::size_t>(nt * np));
    rule.weights.reserve(static_cast<std::size_t>(nt * np));
    for (int i = 0; i < nt; ++i) {
        const double t = g.nodes[static_cast<std::size_t>(i)];
        const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
        for (int j = 0; j < np; ++j) {
            const double phi = 2 * pi * j / np;
            rule.nodes.emplace_back(s * std::cos(phi), s * std::sin(phi), t);
            rule.weights.push_back(g.weights[static_cast<std::size_t>(i)] * 2 * pi / np);
        }
    }
    return rule;
}

BallRule make_ball_rule(int radial_order, int angular_degree, std::span<const double> breaks)
{
    if (radial_order < 1) {
        throw DomainError("ball rule needs radial_order >= 1");
    }
    std::vector<double> b(breaks.begin(), breaks.end());
    if (b.empty()) {
        b = {1.0};
    }
    if (b.front() <= 0.0) {
        b.erase(b.begin());
    }
    const SphereRule sphere = make_sphere_rule(angular_degree);
    std::vector<double> radii;
    std::vector<double> rw;
    const GaussRule first = gauss_radial_r2(radial_order, b.front());
    radii = first.nodes;
    rw = first.weights;
    for (std::size_t p = 0; p + 1 < b.size(); ++p) {
        const GaussRule g = gauss_legendre(radial_order + 1, b[p], b[p + 1]);
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            radii.push_back(g.nodes[i]);
            rw.push_back(g.weights[i] * g.nodes[i] * g.nodes[i]);
        }
    }
    BallRule rule;
    rule.radial_order = radial_order;
    rule.angular_degree = angular_degree;
    rule.nodes.reserve(radii.size() * sphere.nodes.size());
    rule.weights.reserve(radii.size() * sphere.nodes.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        for (std::size_t j = 0; j < sphere.nodes.size(); ++j) {
            rule.nodes.push_back(radii[i] * sphere.nodes[j]);
            rule.weights.push_back(rw[i] * sphere.weights[j]);
        }
    }
    return rule;
}

std::vector<double> ball_breaks(const BallFunction& q)
{
    if (!(q.support_radius > 0.0) || q.support_radius > 1.0 + 1e-14) {
        throw DomainError("support radius must lie in (0, 1]");
    }
    std::vector<double> b;
    for (double r : q.radial_breaks) {
        if (r > 0.0 && r < q.support_radius) {
            b.push_back(r);
        }
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    b.push_back(q.support_radius);
    return b;
}

cplx fourier_transform(const BallFunction& q, const Vec3& xi, const BallRule& rule)
{
    // Fixed summation order keeps the result reproducible.
    cplx sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = q.eval(rule.nodes[i]);
        if (v != 0.0) {
            sum += rule.weights[i] * v * std::polar(1.0, -rule.nodes[i].dot(xi));
        }
    }
    return sum;
}

OracleResult fourier_oracle(const BallFunction& q, const Vec3& xi, const OracleOptions& options)
{
    const std::vector<double> breaks = ball_breaks(q);
    const int boost = static_cast<int>(std::ceil(xi.norm() * q.support_radius));
    int nr = options.initial_radial_order + boost / 2;
    int na = options.initial_angular_degree + boost;
    OracleResult res;
    cplx prev = fourier_transform(q, xi, make_ball_rule(nr, na, breaks));
    for (int it = 0; it < options.max_doublings; ++it) {
        nr *= 2;
        na *= 2;
        const cplx cur = fourier_transform(q, xi, make_ball_rule(nr, na, breaks));
        res.value = cur;
        res.radial_order = nr;
        res.angular_degree = na;
        res.last_change = std::abs(cur - prev);
        if (res.last_change < options.tolerance) {
            res.converged = true;
            return res;
        }
        prev = cur;
    }
    return res;
}

} // namespace bc
