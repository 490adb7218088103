#include "born_calderon/panels.hpp"

#include "born_calderon/errors.hpp"
#include "born_calderon/geometry.hpp"
#include "born_calderon/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace bc {

std::vector<double> barycentric_weights(std::span<const double> nodes)
{
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            if (k != j) {
                w[j] /= (nodes[j] - nodes[k]);
            }
        }
    }
    // Rescale to avoid overflow for many nodes.
    double m = 0.0;
    for (double v : w) {
        m = std::max(m, std::abs(v));
    }
    for (double& v : w) {
        v /= m;
    }
    return w;
}

Eigen::MatrixXd interpolation_matrix(std::span<const double> nodes, std::span<const double> targets)
{
    const std::vector<double> w = barycentric_weights(nodes);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(targets.size()),
                                              static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double x = targets[i];
        const auto hit = std::find(nodes.begin(), nodes.end(), x);
        if (hit != nodes.end()) {
            m(static_cast<Eigen::Index>(i), hit - nodes.begin()) = 1.0;
            continue;
        }
        double den = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double c = w[j] / (x - nodes[j]);
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
            den += c;
        }
        m.row(static_cast<Eigen::Index>(i)) /= den;
    }
    return m;
}

const Eigen::MatrixXd& gauss_integration_matrix(int n)
{
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<Eigen::MatrixXd>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) {
        const GaussRule g = gauss_legendre(n);
        auto s = std::make_unique<Eigen::MatrixXd>(n, n);
        for (int i = 0; i < n; ++i) {
            const GaussRule sub = gauss_legendre(n, -1.0, g.nodes[static_cast<std::size_t>(i)]);
            const Eigen::MatrixXd interp = interpolation_matrix(g.nodes, sub.nodes);
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int q = 0; q < n; ++q) {
                    acc += sub.weights[static_cast<std::size_t>(q)] * interp(q, j);
                }
                (*s)(i, j) = acc;
            }
        }
        slot = std::move(s);
    }
    return *slot;
}

std::vector<double> chebyshev_lobatto(int n)
{
    std::vector<double> x(static_cast<std::size_t>(n + 1));
    for (int j = 0; j <= n; ++j) {
        x[static_cast<std::size_t>(j)] = -std::cos(pi * j / n);
    }
    return x;
}

Eigen::MatrixXd chebyshev_derivative(int n)
{
    const std::vector<double> x = chebyshev_lobatto(n);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, n + 1);
    auto c = [n](int j) { return (j == 0 || j == n) ? 2.0 : 1.0; };
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            if (i != j) {
                const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
                d(i, j) = c(i) / c(j) * sign / (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]);
            }
        }
    }
    // Diagonal by the negative-sum trick.
    for (int i = 0; i <= n; ++i) {
        d(i, i) = -d.row(i).sum();
    }
    return d;
}

std::vector<double> panel_endpoints(double a, double b, std::span<const double> cuts, double max_width)
{
    if (!(b > a) || !(max_width > 0)) {
        throw DomainError("invalid panel interval");
    }
    std::vector<double> c{a};
    std::vector<double> sorted(cuts.begin(), cuts.end());
    std::sort(sorted.begin(), sorted.end());
    for (double v : sorted) {
        if (v > a + 1e-14 && v < b - 1e-14 && v > c.back() + 1e-14) {
            c.push_back(v);
        }
    }
    c.push_back(b);
    std::vector<double> out{a};
    for (std::size_t p = 0; p + 1 < c.size(); ++p) {
        const int pieces = std::max(1, static_cast<int>(std::ceil((c[p + 1] - c[p]) / max_width - 1e-12)));
        for (int j = 1; j <= pieces; ++j) {
            out.push_back(j == pieces ? c[p + 1] : c[p] + (c[p + 1] - c[p]) * j / pieces);
        }
    }
    return out;
}

} // namespace bc
