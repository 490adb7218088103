#include "born_calderon/born3d.hpp"

#include "born_calderon/errors.hpp"
#include "born_calderon/parallel.hpp"
#include "born_calderon/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bc {

namespace {

// (-i)^n
cplx minus_i_power(int n)
{
    switch (((n % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, -1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, 1.0};
    }
}

cplx i_power(int n) { return minus_i_power(-n); }

void check_entries(const TriangularTable& entries, int kmax)
{
    if (kmax < 0 || kmax > entries.kmax)
        throw DomainError("kmax " + std::to_string(kmax) + " outside the table (K = " + std::to_string(entries.kmax) +
                          ")");
}

} // namespace

BornEvaluation born_series_3d(const TriangularTable& entries, const Vec3& omega, const Vec3& xi, int kmax,
                              std::optional<TailModel> tail)
{
    if (kmax < 0) kmax = entries.kmax;
    check_entries(entries, kmax);
    const double s = xi.norm();
    if (s > 0.0 && (xi / s - omega).norm() > 1e-12)
        throw DomainError("table direction does not match xi/|xi|");

    BornEvaluation out;
    out.xi = xi;
    out.kmax = kmax;
    out.term_magnitudes = TriangularTable(kmax);
    out.diagonal_sums.assign(static_cast<std::size_t>(2 * kmax + 1), cplx(0.0));
    const double log_s = s > 0.0 ? std::log(s) : 0.0;

    for (int d = 0; d <= 2 * kmax; ++d) {
        cplx diag = 0.0;
        for (int k = std::max(0, d - kmax); 2 * k <= d; ++k) {
            const int ell = d - k;
            double scale = 0.0;
            if (d == 0)
                scale = std::exp(log_mu_kl(0, 0));
            else if (s > 0.0)
                scale = std::exp(log_mu_kl(k, ell) + d * log_s);
            const cplx term = minus_i_power(d) * scale * entries(k, ell);
            out.term_magnitudes(k, ell) = std::abs(term);
            diag += term;
        }
        out.diagonal_sums[static_cast<std::size_t>(d)] = diag;
        out.value += diag;
    }

    double last = 0.0;
    for (int k = 0; k <= kmax; ++k) last = std::max(last, out.term_magnitudes(k, kmax).real());
    out.truncation_warning = kmax > 0 && last > 1e-12 * std::abs(out.value);
    if (tail) out.tail_bound = moment_series_tail(*tail, s, kmax);
    return out;
}

BornEvaluation averaged_born_hat(const MatrixElementTable& table, const Vec3& xi, int kmax,
                                 std::optional<TailModel> tail)
{
    return born_series_3d(table.entries, table.omega, xi, kmax, tail);
}

BornEvaluation fourier_via_moments_3d(const MomentTable3D& moments, const Vec3& xi, int kmax,
                                      std::optional<TailModel> tail)
{
    return born_series_3d(moments.entries, moments.omega, xi, kmax, tail);
}

double moment_series_tail(const TailModel& model, double s, int kmax)
{
    if (model.sup_norm == 0.0 || model.alpha == 0.0) return 0.0;
    if (s == 0.0) return 0.0;
    const double log_s = std::log(s);
    const double log_a = std::log(model.alpha);
    const double log_q = std::log(model.sup_norm);
    double total = 0.0;
    for (int ell = kmax + 1; ell <= kmax + 400; ++ell) {
        double shell = 0.0;
        for (int k = 0; k <= ell; ++k) {
            const int p = k + ell;
            shell += std::exp(log_mu_kl(k, ell) + p * log_s + log_q + (p + 3) * log_a - std::log(p + 3.0));
        }
        total += shell;
        if (ell > kmax + 2 && shell < 1e-17 * total) break;
    }
    return total;
}

KmaxChoice select_kmax(const TailModel& model, double s, double tolerance, int cap)
{
    KmaxChoice choice;
    for (int K = 0; K <= cap; ++K) {
        choice.kmax = K;
        choice.tail = moment_series_tail(model, s, K);
        if (choice.tail < tolerance) return choice;
    }
    choice.capped = true;
    return choice;
}

std::pair<CVec3, CVec3> zeta_pair_e3(double s, double h)
{
    if (!(h > 0.0) || !(s >= 0.0) || !(h * s < 1.0))
        throw DomainError("zeta pair needs h > 0, s >= 0 and h s < 1");
    const cplx I(0.0, 1.0);
    const double root = std::sqrt(1.0 - h * h * s * s);
    CVec3 z1(-1.0, -I * root, -I * h * s);
    CVec3 z2(1.0, I, 0.0);
    return {z1, z2};
}

std::pair<CVec3, CVec3> zeta_pair_frame(const Frame& frame, double s, double h)
{
    auto [a, b] = zeta_pair_e3(s, h);
    const Eigen::Matrix3cd back = frame.rotation().transpose().cast<cplx>();
    return {back * a, back * b};
}

cplx taylor_angular_coeff(int k, int ell, double h, double s)
{
    if (k < 0 || ell < k) throw DomainError("taylor_angular_coeff needs 0 <= k <= l");
    const CVec3 z1 = zeta_pair_e3(s, h).first;
    const SphereRule rule = make_sphere_rule(std::max(2 * ell, 1));
    cplx sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const Vec3& x = rule.nodes[i];
        const cplx t = z1.x() * x.x() + z1.y() * x.y() + z1.z() * x.z();
        sum += rule.weights[i] * std::pow(t, ell) * sph_harm({ell, k}, x);
    }
    return sum;
}

cplx taylor_angular_limit(int k, int ell, double s)
{
    if (k < 0 || ell < k) throw DomainError("taylor_angular_limit needs 0 <= k <= l");
    const double log_mag = 0.5 * log_c_k(ell, 3) +
                           0.5 * (log_factorial(2 * ell) - log_factorial(ell + k) - log_factorial(ell - k));
    const int p = ell + k;
    const double mag = p == 0 ? std::exp(log_mag) : std::exp(log_mag + p * std::log(0.5 * s));
    const double sign = ell % 2 == 0 ? 1.0 : -1.0;
    return sign * i_power(p) * mag;
}

cplx scattering_pairing(const TriangularTable& gamma, double s, double h)
{
    if (!(h * s < 1.0)) throw DomainError("scattering_pairing needs h s < 1");
    const double log_h = std::log(h);
    cplx total = 0.0;
    for (int ell = 0; ell <= gamma.kmax; ++ell) {
        for (int k = 0; k <= ell; ++k) {
            const cplx g = gamma(k, ell);
            if (g == cplx(0.0)) continue;
            const double sign = k % 2 == 0 ? 1.0 : -1.0;
            const double scale = std::exp(0.5 * log_c_k(k, 3) - log_factorial(k) - log_factorial(ell) -
                                          (k + ell) * log_h);
            total += sign * scale * g * taylor_angular_coeff(k, ell, h, s);
        }
    }
    return total;
}

cplx scattering_pairing_limit(const TriangularTable& gamma, double s)
{
    return born_series_3d(gamma, Vec3::UnitZ(), s * Vec3::UnitZ()).value;
}

std::size_t FourierGrid::index(int i, int j, int l) const
{
    const std::size_t m = static_cast<std::size_t>(2 * n + 1);
    return (static_cast<std::size_t>(i + n) * m + static_cast<std::size_t>(j + n)) * m +
           static_cast<std::size_t>(l + n);
}

FourierGrid sample_fourier_grid(const std::function<cplx(const Vec3&)>& qhat, double spacing, double band_limit)
{
    if (!(spacing > 0.0) || !(band_limit >= 0.0)) throw DomainError("grid needs spacing > 0 and band_limit >= 0");
    FourierGrid grid;
    grid.spacing = spacing;
    grid.band_limit = band_limit;
    grid.n = static_cast<int>(std::floor(band_limit / spacing + 1e-12));
    const int m = 2 * grid.n + 1;
    grid.values.assign(static_cast<std::size_t>(m) * m * m, cplx(0.0));
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t a) {
        const int i = static_cast<int>(a) - grid.n;
        for (int j = -grid.n; j <= grid.n; ++j)
            for (int l = -grid.n; l <= grid.n; ++l) {
                const Vec3 xi = grid.node(i, j, l);
                if (xi.norm() <= band_limit) grid.values[grid.index(i, j, l)] = qhat(xi);
            }
    });
    return grid;
}

Reconstruction3D reconstruct_3d(const FourierGrid& grid, std::span<const Vec3> points)
{
    const int m = 2 * grid.n + 1;
    if (grid.values.size() != static_cast<std::size_t>(m) * m * m)
        throw DomainError("Fourier grid has the wrong number of samples");

    Reconstruction3D out;
    out.points.assign(points.begin(), points.end());
    out.values.assign(points.size(), cplx(0.0));

    double reach = 1.0;
    for (const Vec3& x : points) reach = std::max(reach, x.cwiseAbs().maxCoeff());
    if (grid.spacing * (1.0 + reach) >= 2.0 * std::numbers::pi)
        out.warnings.push_back("aliasing: grid spacing " + std::to_string(grid.spacing) +
                               " too coarse for the unit-ball support");
    if (grid.n > 0 && grid.spacing * grid.n < grid.band_limit - grid.spacing)
        out.warnings.push_back("grid does not reach the band limit");

    const double norm = std::pow(grid.spacing / (2.0 * std::numbers::pi), 3);
    const double cut2 = grid.band_limit * grid.band_limit;

    parallel_for(points.size(), [&](std::size_t p) {
        const Vec3& x = points[p];
        std::vector<cplx> e1(static_cast<std::size_t>(m)), e2(e1.size()), e3(e1.size());
        for (int i = -grid.n; i <= grid.n; ++i) {
            const double t = grid.spacing * i;
            const auto u = static_cast<std::size_t>(i + grid.n);
            e1[u] = std::polar(1.0, x.x() * t);
            e2[u] = std::polar(1.0, x.y() * t);
            e3[u] = std::polar(1.0, x.z() * t);
        }
        cplx sum = 0.0;
        for (int i = -grid.n; i <= grid.n; ++i) {
            cplx si = 0.0;
            for (int j = -grid.n; j <= grid.n; ++j) {
                cplx sj = 0.0;
                for (int l = -grid.n; l <= grid.n; ++l) {
                    const double r2 = grid.spacing * grid.spacing * (double(i) * i + double(j) * j + double(l) * l);
                    if (r2 > cut2) continue;
                    sj += grid.values[grid.index(i, j, l)] * e3[static_cast<std::size_t>(l + grid.n)];
                }
                si += sj * e2[static_cast<std::size_t>(j + grid.n)];
            }
            sum += si * e1[static_cast<std::size_t>(i + grid.n)];
        }
        out.values[p] = norm * sum;
    });

    for (const cplx& v : out.values) out.max_imag = std::max(out.max_imag, std::abs(v.imag()));
    return out;
}

} // namespace bc
