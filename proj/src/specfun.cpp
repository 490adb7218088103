#include "born_calderon/specfun.hpp"

#include "born_calderon/errors.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <string>

namespace bc {

namespace {

constexpr int factorial_table_size = 1001;

const std::array<double, factorial_table_size>& factorial_table()
{
    static const auto table = [] {
        std::array<double, factorial_table_size> t{};
        long double acc = 0.0L;
        t[0] = 0.0;
        for (int n = 1; n < factorial_table_size; ++n) {
            acc += std::log(static_cast<long double>(n));
            t[n] = static_cast<double>(acc);
        }
        return t;
    }();
    return table;
}

void check_t(double t)
{
    if (!(std::abs(t) <= 1.0)) {
        throw DomainError("Legendre argument outside [-1,1]: " + std::to_string(t));
    }
}

} // namespace

void SphericalIndex::validate() const
{
    if (ell < 0 || std::abs(m) > ell) {
        throw DomainError("invalid spherical index (" + std::to_string(ell) + "," + std::to_string(m) + ")");
    }
}

double log_gamma(double x)
{
    if (!(x > 0)) {
        throw DomainError("log_gamma needs a positive argument");
    }
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double log_factorial(int n)
{
    if (n < 0) {
        throw DomainError("negative factorial argument");
    }
    if (n < factorial_table_size) {
        return factorial_table()[static_cast<std::size_t>(n)];
    }
    return log_gamma(n + 1.0);
}

double legendre(int ell, double t)
{
    if (ell < 0) {
        throw DomainError("negative Legendre degree");
    }
    check_t(t);
    if (ell == 0) {
        return 1.0;
    }
    double p0 = 1.0;
    double p1 = t;
    for (int n = 2; n <= ell; ++n) {
        const double p2 = ((2 * n - 1) * t * p1 - (n - 1) * p0) / n;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

double assoc_legendre(int ell, int m, double t)
{
    SphericalIndex{ell, m}.validate();
    check_t(t);
    if (m < 0) {
        const int mm = -m;
        const double ratio = std::exp(log_factorial(ell - mm) - log_factorial(ell + mm));
        return ((mm % 2 == 0) ? 1.0 : -1.0) * ratio * assoc_legendre(ell, mm, t);
    }
    const double s = std::sqrt(std::max(0.0, (1.0 - t) * (1.0 + t)));
    double pmm = 1.0;
    for (int j = 1; j <= m; ++j) {
        pmm *= (2 * j - 1) * s;
    }
    if (ell == m) {
        return pmm;
    }
    double p0 = pmm;
    double p1 = (2 * m + 1) * t * pmm;
    for (int n = m + 2; n <= ell; ++n) {
        const double p2 = ((2 * n - 1) * t * p1 - (n + m - 1) * p0) / (n - m);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

double normalized_assoc_legendre(int ell, int m, double t)
{
    if (m < 0 || m > ell) {
        throw DomainError("normalized_assoc_legendre needs 0 <= m <= ell");
    }
    check_t(t);
    const double s = std::sqrt(std::max(0.0, (1.0 - t) * (1.0 + t)));
    double pmm = 1.0 / std::sqrt(4 * pi);
    for (int j = 1; j <= m; ++j) {
        pmm *= std::sqrt((2.0 * j + 1.0) / (2.0 * j)) * s;
    }
    if (ell == m) {
        return pmm;
    }
    double p0 = pmm;
    double p1 = std::sqrt(2.0 * m + 3.0) * t * pmm;
    for (int n = m + 2; n <= ell; ++n) {
        const double a = std::sqrt((4.0 * n * n - 1.0) / (static_cast<double>(n) * n - static_cast<double>(m) * m));
        const double b = std::sqrt(((n - 1.0) * (n - 1.0) - static_cast<double>(m) * m) / (4.0 * (n - 1.0) * (n - 1.0) - 1.0));
        const double p2 = a * (t * p1 - b * p0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

cplx sph_harm(SphericalIndex idx, double theta, double phi)
{
    idx.validate();
    const int am = std::abs(idx.m);
    const double p = normalized_assoc_legendre(idx.ell, am, std::cos(theta));
    const cplx phase = std::polar(1.0, am * phi);
    const cplx y = ((am % 2 == 0) ? 1.0 : -1.0) * p * phase;
    if (idx.m >= 0) {
        return y;
    }
    return ((am % 2 == 0) ? 1.0 : -1.0) * std::conj(y);
}

cplx sph_harm(SphericalIndex idx, const Vec3& x)
{
    const auto a = to_angles(x);
    return sph_harm(idx, a.theta, a.phi);
}

void sph_harm_all(int lmax, const Vec3& x, std::vector<cplx>& out)
{
    out.assign(static_cast<std::size_t>(sh_count(lmax)), cplx{});
    const double r = x.norm();
    if (!(r > 0)) {
        throw DomainError("sph_harm_all at the origin");
    }
    const double t = std::clamp(x.z() / r, -1.0, 1.0);
    const double rho = std::hypot(x.x(), x.y());
    const double s = rho / r;
    const cplx eiphi = rho > 0 ? cplx(x.x() / rho, x.y() / rho) : cplx(1.0, 0.0);

    // Column recurrences in ell for each m, starting from the sectoral value.
    double pmm = 1.0 / std::sqrt(4 * pi);
    cplx phase = 1.0;
    for (int m = 0; m <= lmax; ++m) {
        if (m > 0) {
            pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
            phase *= eiphi;
        }
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        double p0 = 0.0;
        double p1 = pmm;
        for (int n = m; n <= lmax; ++n) {
            double p = 0.0;
            if (n == m) {
                p = pmm;
            } else if (n == m + 1) {
                p = std::sqrt(2.0 * m + 3.0) * t * pmm;
            } else {
                const double a = std::sqrt((4.0 * n * n - 1.0) / (static_cast<double>(n) * n - static_cast<double>(m) * m));
                const double b = std::sqrt(((n - 1.0) * (n - 1.0) - static_cast<double>(m) * m) / (4.0 * (n - 1.0) * (n - 1.0) - 1.0));
                p = a * (t * p1 - b * p0);
            }
            if (n > m) {
                p0 = p1;
                p1 = p;
            }
            const cplx y = sign * p * phase;
            out[static_cast<std::size_t>(n * n + n + m)] = y;
            if (m > 0) {
                out[static_cast<std::size_t>(n * n + n - m)] = sign * std::conj(y);
            }
        }
    }
}

std::vector<cplx> sph_harm_all(int lmax, const Vec3& x)
{
    std::vector<cplx> out;
    sph_harm_all(lmax, x, out);
    return out;
}

Frame Frame::from_direction(const Vec3& omega)
{
    const double n = omega.norm();
    if (!(n > 0) || std::abs(n - 1.0) > 1e-10) {
        throw DomainError("frame direction must be a unit vector");
    }
    const Vec3 w = omega / n;
    const Vec3 e3 = Vec3::UnitZ();
    Mat3 p = Mat3::Identity();
    const Vec3 axis = w.cross(e3);
    const double an = axis.norm();
    if (an < 1e-14) {
        if (w.z() < 0) {
            p = axis_rotation(Vec3::UnitX(), pi);
        }
    } else {
        p = axis_rotation(axis / an, std::acos(std::clamp(w.dot(e3), -1.0, 1.0)));
    }
    return Frame(w, p);
}

Frame Frame::from_rotation(const Mat3& rotation)
{
    const double orth = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (orth > 1e-12 || std::abs(rotation.determinant() - 1.0) > 1e-12) {
        throw DomainError("frame rotation is not proper orthogonal");
    }
    const Vec3 omega = rotation.transpose() * Vec3::UnitZ();
    return Frame(omega, rotation);
}

Frame Frame::twisted(double t) const
{
    return Frame(omega_, axis_rotation(Vec3::UnitZ(), t) * rotation_);
}

cplx sph_harm_rotated(SphericalIndex idx, const Frame& frame, const Vec3& x)
{
    return sph_harm(idx, Vec3(frame.rotation() * x));
}

double ladder_coeff(Ladder direction, int ell, int m)
{
    SphericalIndex{ell, m}.validate();
    const int target = direction == Ladder::raise ? m + 1 : m - 1;
    if (std::abs(target) > ell) {
        return 0.0;
    }
    if (direction == Ladder::raise) {
        return std::sqrt(static_cast<double>(ell - m) * (ell + m + 1));
    }
    return std::sqrt(static_cast<double>(ell + m) * (ell - m + 1));
}

double log_c_k(int k, int d)
{
    if (k < 0 || d < 2) {
        throw DomainError("c_k needs k >= 0 and d >= 2");
    }
    return std::log(2.0) + 0.5 * d * std::log(pi) + log_factorial(k) - log_gamma(k + 0.5 * d);
}

double c_k(int k, int d)
{
    const double lv = log_c_k(k, d);
    if (lv > std::log(DBL_MAX)) {
        throw OverflowError("c_k overflows for k=" + std::to_string(k));
    }
    return std::exp(lv);
}

double log_mu_kl(int k, int ell)
{
    if (k < 0 || ell < k) {
        throw DomainError("mu_kl needs 0 <= k <= ell");
    }
    return std::log(4 * pi) - 0.5 * std::log((2.0 * k + 1.0) * (2.0 * ell + 1.0))
        - 0.5 * (log_factorial(2 * k) + log_factorial(ell - k) + log_factorial(k + ell));
}

double mu_kl(int k, int ell)
{
    return std::exp(log_mu_kl(k, ell));
}

namespace {

// Σ_j (-1)^j (t/2)^{2j} / (j! Γ(j+ν+1)), the entire part of J_ν.
long double bessel_entire_part(double nu, double t, int max_terms)
{
    const long double x = 0.25L * static_cast<long double>(t) * t;
    long double term = 1.0L / std::exp(static_cast<long double>(log_gamma(nu + 1.0)));
    long double sum = term;
    for (int j = 0; j < max_terms; ++j) {
        const long double ratio = x / ((j + 1.0L) * (j + 1.0L + nu));
        term *= -ratio;
        sum += term;
        // Once the ratio is below 1 and decreasing, the tail is dominated by a
        // geometric series.
        const long double next_ratio = x / ((j + 2.0L) * (j + 2.0L + nu));
        if (next_ratio < 1.0L) {
            const long double tail = std::abs(term) * next_ratio / (1.0L - next_ratio);
            if (tail <= 1e-17L * std::abs(sum) || tail < 1e-300L) {
                return sum;
            }
        }
    }
    throw AccuracyError("Bessel series did not reach its tail target within the term cap");
}

} // namespace

double bessel_j(double nu, double t, int max_terms)
{
    if (nu < 0 || t < 0) {
        throw DomainError("bessel_j needs nu >= 0 and t >= 0");
    }
    if (t == 0) {
        return nu == 0 ? 1.0 : 0.0;
    }
    const long double lead = std::pow(0.5L * static_cast<long double>(t), static_cast<long double>(nu));
    return static_cast<double>(lead * bessel_entire_part(nu, t, max_terms));
}

double spherical_bessel_j(int n, double t, int max_terms)
{
    if (n < 0 || t < 0) {
        throw DomainError("spherical_bessel_j needs n >= 0 and t >= 0");
    }
    if (t == 0) {
        return n == 0 ? 1.0 : 0.0;
    }
    // j_n(t) = (√π/2) (t/2)^n Σ_j (-1)^j (t/2)^{2j} / (j! Γ(j+n+3/2))
    const long double lead = std::pow(0.5L * static_cast<long double>(t), static_cast<long double>(n));
    const long double root_pi = std::sqrt(static_cast<long double>(pi));
    return static_cast<double>(0.5L * root_pi * lead * bessel_entire_part(n + 0.5, t, max_terms));
}

ZetaVector::ZetaVector(const CVec3& v, double tol) : v_(v)
{
    const double n2 = v.squaredNorm();
    if (!(n2 > 0)) {
        throw DomainError("zeta vector must be nonzero");
    }
    if (std::abs(bilinear(v, v)) > tol * n2) {
        throw DomainError("zeta vector is not isotropic");
    }
}

ZetaVector ZetaVector::from_orthonormal(const Vec3& a, const Vec3& b, double scale)
{
    CVec3 v;
    for (int i = 0; i < 3; ++i) {
        v[i] = scale * cplx(a[i], b[i]);
    }
    return ZetaVector(v);
}

cplx ZetaVector::dot(const ZetaVector& other) const
{
    return bilinear(v_, other.v_);
}

cplx ZetaVector::dot(const Vec3& x) const
{
    return v_.x() * x.x() + v_.y() * x.y() + v_.z() * x.z();
}

} // namespace bc
