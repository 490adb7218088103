#include "born_calderon/born_radial.hpp"

#include "born_calderon/errors.hpp"
#include "born_calderon/panels.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>
#include <limits>

namespace bc {

long double log_born_coefficient(int k, double s, int d)
{
    if (s == 0.0) {
        return k == 0 ? static_cast<long double>(std::log(2.0) + 0.5 * d * std::log(pi) - log_gamma(0.5 * d))
                      : -std::numeric_limits<long double>::infinity();
    }
    return std::log(2.0L) + 0.5L * d * std::log(static_cast<long double>(pi))
        + 2.0L * k * std::log(0.5L * static_cast<long double>(s)) - std::lgamma(k + 1.0L)
        - std::lgamma(static_cast<long double>(k) + 0.5L * d);
}

long double born_coefficient(int k, double s, int d)
{
    const long double mag = std::exp(log_born_coefficient(k, s, d));
    return (k % 2 == 0) ? mag : -mag;
}

namespace {

int resolve_kmax(int requested, std::size_t available)
{
    const int have = static_cast<int>(available) - 1;
    if (have < 0) {
        throw DomainError("empty coefficient list");
    }
    if (requested < 0) {
        return have;
    }
    if (requested > have) {
        throw DomainError("kmax exceeds the supplied data");
    }
    return requested;
}

SeriesValue sum_series(const std::function<long double(int)>& coefficient, double s, int d, int kmax)
{
    SeriesValue out;
    out.kmax = kmax;
    long double sum = 0.0L;
    long double last = 0.0L;
    for (int k = 0; k <= kmax; ++k) {
        const long double c = coefficient(k);
        if (c == 0.0L) {
            last = 0.0L;
            continue;
        }
        last = born_coefficient(k, s, d) * c;
        sum += last;
    }
    out.value = static_cast<double>(sum);
    out.last_term = static_cast<double>(std::abs(last));
    out.truncation_warning = std::abs(last) > 1e-12L * std::abs(sum);
    return out;
}

} // namespace

SeriesValue born_hat_radial(const DtnSpectrum& spectrum, double s, int kmax)
{
    if (s < 0.0) {
        throw DomainError("|ξ| must be non-negative");
    }
    const int K = resolve_kmax(kmax, spectrum.eigenvalues.size());
    const int d = spectrum.dimension;
    SeriesValue out = sum_series(
        [&](int k) { return static_cast<long double>(spectrum.eigenvalues[static_cast<std::size_t>(k)]) - k; }, s, d,
        K);
    if (spectrum.alpha && spectrum.sup_norm) {
        // |λ_k - k| <= |σ_{k,1}| + residual bound, summed over the next 60 degrees.
        const double a = *spectrum.alpha;
        const double m = *spectrum.sup_norm;
        long double tail = 0.0L;
        for (int k = K + 1; k <= K + 60; ++k) {
            const double kap = kappa(k, d);
            const double bound = std::pow(a, d + 2.0 * k) * m / (2.0 * k + d)
                + std::pow(a, d + 2.0 + 2.0 * k) * m * m / (2.0 * kap * kap * kap);
            tail += std::exp(log_born_coefficient(k, s, d)) * bound;
        }
        out.tail_estimate = static_cast<double>(tail);
    }
    return out;
}

SeriesValue fourier_from_moments(std::span<const double> sigma1, double s, int dimension, int kmax)
{
    if (s < 0.0) {
        throw DomainError("|ξ| must be non-negative");
    }
    const int K = resolve_kmax(kmax, sigma1.size());
    return sum_series([&](int k) { return static_cast<long double>(sigma1[static_cast<std::size_t>(k)]); }, s,
                      dimension, K);
}

SeriesValue born_minus_fourier(const DtnSpectrum& spectrum, std::span<const double> sigma1, double s, int kmax)
{
    const int K = resolve_kmax(kmax, std::min(spectrum.eigenvalues.size(), sigma1.size()));
    return sum_series(
        [&](int k) {
            const auto i = static_cast<std::size_t>(k);
            return static_cast<long double>(spectrum.eigenvalues[i]) - k - static_cast<long double>(sigma1[i]);
        },
        s, spectrum.dimension, K);
}

ZetaPair zeta_pair(const CVec3& zeta1, const CVec3& zeta2)
{
    return {zeta1, zeta2, bilinear(zeta1, zeta2)};
}

ZetaPair exact_zeta_pair(const Frame& frame, double s, double h)
{
    if (!(h > 0.0) || s < 0.0) {
        throw DomainError("exact_zeta_pair needs h > 0 and s >= 0");
    }
    if (!(h * s < 2.0)) {
        throw DomainError("exact_zeta_pair needs h*s < 2");
    }
    const double c = std::sqrt(1.0 + 0.25 * h * h * s * s);
    const Vec3 e1 = frame.eta1();
    const Vec3 e2 = frame.eta2();
    const Vec3 w = frame.omega();
    const Vec3 im1 = e2 - 0.5 * h * s * w;
    const Vec3 im2 = -(e2 + 0.5 * h * s * w);
    ZetaPair p;
    for (int i = 0; i < 3; ++i) {
        p.zeta1[i] = cplx(c * e1[i], im1[i]);
        p.zeta2[i] = cplx(-c * e1[i], im2[i]);
    }
    p.product = cplx(-0.5 * h * h * s * s, 0.0);
    return p;
}

cplx scattering_transform(const DtnSpectrum& spectrum, const ZetaPair& zeta, double h, int kmax)
{
    if (!(h > 0.0)) {
        throw DomainError("h must be positive");
    }
    const int K = resolve_kmax(kmax, spectrum.eigenvalues.size());
    const int d = spectrum.dimension;
    const std::complex<long double> z = std::complex<long double>(zeta.product)
        / (2.0L * static_cast<long double>(h) * h);
    std::complex<long double> sum = 0.0L;
    std::complex<long double> power = 1.0L;
    for (int k = 0; k <= K; ++k) {
        if (k > 0) {
            power *= z;
        }
        const long double lc = static_cast<long double>(log_c_k(k, d)) - 2.0L * std::lgamma(k + 1.0L);
        const long double dl = static_cast<long double>(spectrum.eigenvalues[static_cast<std::size_t>(k)]) - k;
        sum += std::exp(lc) * dl * power;
    }
    return {static_cast<double>(sum.real()), static_cast<double>(sum.imag())};
}

double scattering_transform_radial(const DtnSpectrum& spectrum, double s, double h, int kmax)
{
    const Frame e3 = Frame::from_direction(Vec3::UnitZ());
    return scattering_transform(spectrum, exact_zeta_pair(e3, s, h), h, kmax).real();
}

double radial_fourier_transform(const RadialPotential& q, double s)
{
    if (q.dimension() != 3) {
        throw DomainError("radial_fourier_transform is three-dimensional");
    }
    if (q.alpha() <= 0.0) {
        return 0.0;
    }
    const double width = std::min(0.25, s > 0 ? 2.0 / s : 0.25);
    const std::vector<double> ends = panel_endpoints(q.inner_radius(), q.alpha(), q.panel_ends(), width);
    const GaussRule g = composite_gauss(ends, 24);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double r = g.nodes[i];
        // sin(sr)/s -> r at s = 0
        const double k = s > 0 ? std::sin(s * r) / s : r;
        sum += g.weights[i] * q(r) * r * k;
    }
    return 4 * pi * sum;
}

namespace {

RadialReconstruction reconstruct_impl(const std::vector<double>& s_nodes, const std::vector<double>& s_weights,
                                      const std::vector<double>& qhat, double band_limit,
                                      std::span<const double> r_grid)
{
    RadialReconstruction out;
    out.band_limit = band_limit;
    out.r.assign(r_grid.begin(), r_grid.end());
    out.q.assign(r_grid.size(), 0.0);
    for (std::size_t j = 0; j < r_grid.size(); ++j) {
        const double r = r_grid[j];
        long double sum = 0.0L;
        for (std::size_t i = 0; i < s_nodes.size(); ++i) {
            const double s = s_nodes[i];
            const double kernel = r > 0.0 ? s * std::sin(s * r) / (2 * pi * pi * r) : s * s / (2 * pi * pi);
            sum += static_cast<long double>(s_weights[i]) * kernel * qhat[i];
        }
        out.q[j] = static_cast<double>(sum);
    }
    double spacing = 0.0;
    for (std::size_t j = 0; j + 1 < r_grid.size(); ++j) {
        spacing = std::max(spacing, std::abs(r_grid[j + 1] - r_grid[j]));
    }
    if (spacing > pi / band_limit) {
        out.warnings.push_back("aliasing: r-grid spacing " + std::to_string(spacing) + " exceeds pi/band_limit "
                               + std::to_string(pi / band_limit));
    }
    return out;
}

GaussRule band_rule(double band_limit, std::span<const double> r_grid)
{
    double rmax = 1.0;
    for (double r : r_grid) {
        rmax = std::max(rmax, std::abs(r));
    }
    const std::vector<double> none;
    return composite_gauss(panel_endpoints(0.0, band_limit, none, std::min(0.5, 1.0 / rmax)), 20);
}

} // namespace

RadialReconstruction reconstruct_radial(const std::function<double(double)>& born_hat, double band_limit,
                                        std::span<const double> r_grid)
{
    if (!(band_limit > 0.0)) {
        throw DomainError("band limit must be positive");
    }
    const GaussRule g = band_rule(band_limit, r_grid);
    std::vector<double> qhat(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        qhat[i] = born_hat(g.nodes[i]);
    }
    return reconstruct_impl(g.nodes, g.weights, qhat, band_limit, r_grid);
}

RadialReconstruction reconstruct_radial(std::span<const double> values, double ds, double band_limit,
                                        std::span<const double> r_grid)
{
    if (!(ds > 0.0) || values.size() < 4) {
        throw DomainError("sampled reconstruction needs at least 4 uniform samples");
    }
    if ((values.size() - 1) * ds < band_limit * (1 - 1e-12)) {
        throw DomainError("samples do not cover [0, band_limit]");
    }
    // q̂ is even in s, so its derivative vanishes at 0.
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(values.begin(), values.end(), 0.0, ds, 0.0);
    const GaussRule g = band_rule(band_limit, r_grid);
    std::vector<double> qhat(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        qhat[i] = spline(g.nodes[i]);
    }
    return reconstruct_impl(g.nodes, g.weights, qhat, band_limit, r_grid);
}

} // namespace bc
