#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace bc {

/// Barycentric weights for Lagrange interpolation on arbitrary distinct nodes.
std::vector<double> barycentric_weights(std::span<const double> nodes);

/// Value at x of the polynomial interpolating `values` at `nodes`.
template <class T>
T barycentric_eval(std::span<const double> nodes, std::span<const double> weights, std::span<const T> values, double x)
{
    T num{};
    double den = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double diff = x - nodes[j];
        if (diff == 0.0) {
            return values[j];
        }
        const double c = weights[j] / diff;
        num += c * values[j];
        den += c;
    }
    return num / den;
}

/// Interpolation matrix from `nodes` to `targets`.
Eigen::MatrixXd interpolation_matrix(std::span<const double> nodes, std::span<const double> targets);

/// S(i, j) = ∫_{-1}^{x_i} ℓ_j(x) dx for the n-point Gauss-Legendre nodes x_i on
/// [-1, 1] and their Lagrange basis ℓ_j. Cached per n; thread-safe.
const Eigen::MatrixXd& gauss_integration_matrix(int n);

/// Chebyshev-Lobatto points cos(π j / n), j = 0..n, in increasing order.
std::vector<double> chebyshev_lobatto(int n);
/// First-derivative matrix on the increasing Chebyshev-Lobatto points of [-1, 1].
Eigen::MatrixXd chebyshev_derivative(int n);

/// Splits [a, b] at the interior `cuts` and then uniformly so no piece is
/// wider than `max_width`. Returns the increasing list of endpoints.
std::vector<double> panel_endpoints(double a, double b, std::span<const double> cuts, double max_width);

} // namespace bc
