#include <doctest.h>

#include "born_calderon/errors.hpp"
#include "born_calderon/quadrature.hpp"
#include "born_calderon/specfun.hpp"

#include <cmath>
#include <random>

using namespace bc;

namespace {

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i) {
        f *= i;
    }
    return f;
}

// 2^{-l} Σ_s (-1)^s (2l-2s)! / (s! (l-s)! (l-2s)!) t^{l-2s}
double legendre_closed_form(int l, double t)
{
    double sum = 0.0;
    for (int s = 0; 2 * s <= l; ++s) {
        const double c = factorial(2 * l - 2 * s) / (factorial(s) * factorial(l - s) * factorial(l - 2 * s));
        sum += ((s % 2 == 0) ? 1.0 : -1.0) * c * std::pow(t, l - 2 * s);
    }
    return sum / std::pow(2.0, l);
}

Vec3 random_unit(std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    Vec3 v(n(rng), n(rng), n(rng));
    return v.normalized();
}

} // namespace

TEST_CASE("legendre values")
{
    CHECK(legendre(5, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(legendre(0, 0.37) == 1.0);
    CHECK(legendre(2, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK_THROWS_AS(legendre(2, 1.5), DomainError);
    for (int l = 0; l <= 12; ++l) {
        for (double t = -1.0; t <= 1.0; t += 0.125) {
            CHECK(std::abs(legendre(l, t) - legendre_closed_form(l, t)) < 1e-13);
        }
    }
}

TEST_CASE("associated legendre")
{
    for (double t : {-0.9, -0.3, 0.0, 0.45, 0.8}) {
        CHECK(assoc_legendre(3, 0, t) == doctest::Approx(legendre(3, t)).epsilon(1e-14));
    }
    CHECK(assoc_legendre(1, 1, 0.6) == doctest::Approx(0.8).epsilon(1e-15));
    // Sectoral functions are proportional to (1-t^2)^{l/2}.
    for (int l = 1; l <= 8; ++l) {
        const double c = assoc_legendre(l, l, 0.0);
        for (double t : {-0.7, 0.2, 0.9}) {
            CHECK(assoc_legendre(l, l, t) == doctest::Approx(c * std::pow(1 - t * t, 0.5 * l)).epsilon(1e-12));
        }
    }
    // P_2^2 = 3(1-t^2), P_2^1 = 3 t sqrt(1-t^2) without the Condon-Shortley phase.
    CHECK(assoc_legendre(2, 2, 0.3) == doctest::Approx(3 * (1 - 0.09)).epsilon(1e-14));
    CHECK(assoc_legendre(2, 1, 0.3) == doctest::Approx(0.9 * std::sqrt(1 - 0.09)).epsilon(1e-14));
    // Negative order: P_l^{-m} = (-1)^m (l-m)!/(l+m)! P_l^m.
    CHECK(assoc_legendre(2, -1, 0.3) == doctest::Approx(-assoc_legendre(2, 1, 0.3) / 6.0).epsilon(1e-14));
    CHECK(assoc_legendre(3, -2, -0.4) == doctest::Approx(assoc_legendre(3, 2, -0.4) / 120.0).epsilon(1e-14));
    CHECK_THROWS_AS(assoc_legendre(2, 3, 0.1), DomainError);
}

TEST_CASE("spherical harmonics")
{
    CHECK(std::abs(sph_harm({0, 0}, 1.1, 4.0) - cplx(1.0 / (2 * std::sqrt(pi)), 0.0)) < 1e-15);
    // Y_{1,1} = -sqrt(3/8π) sinθ e^{iφ}; Y_{1,0} = sqrt(3/4π) cosθ.
    const double th = 0.7;
    const double ph = 2.3;
    CHECK(std::abs(sph_harm({1, 1}, th, ph) - (-std::sqrt(3 / (8 * pi)) * std::sin(th) * std::polar(1.0, ph))) < 1e-15);
    CHECK(std::abs(sph_harm({1, 0}, th, ph) - std::sqrt(3 / (4 * pi)) * std::cos(th)) < 1e-15);
    // The general-degree formula through assoc_legendre.
    for (int l = 0; l <= 6; ++l) {
        for (int m = -l; m <= l; ++m) {
            const double norm = std::sqrt((2 * l + 1) / (4 * pi) * factorial(l - m) / factorial(l + m));
            const cplx expect = ((m % 2 == 0) ? 1.0 : -1.0) * norm * assoc_legendre(l, m, std::cos(th))
                * std::polar(1.0, m * ph);
            CHECK(std::abs(sph_harm({l, m}, th, ph) - expect) < 1e-13);
        }
    }

    std::mt19937_64 rng(7);
    std::vector<cplx> all;
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 x = random_unit(rng);
        sph_harm_all(6, x, all);
        for (int l = 0; l <= 6; ++l) {
            for (int m = -l; m <= l; ++m) {
                const cplx y = sph_harm({l, m}, x);
                const cplx ym = sph_harm({l, -m}, x);
                CHECK(std::abs(std::conj(y) - ((m % 2 == 0) ? 1.0 : -1.0) * ym) < 1e-13);
                CHECK(std::abs(all[static_cast<std::size_t>(SphericalIndex{l, m}.flat())] - y) < 1e-13);
            }
        }
    }
}

TEST_CASE("orthonormality on the sphere")
{
    const SphereRule rule = make_sphere_rule(20);
    std::vector<std::vector<cplx>> vals;
    for (const auto& x : rule.nodes) {
        vals.push_back(sph_harm_all(10, x));
    }
    const int n = sh_count(10);
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            cplx s = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                s += rule.weights[i] * std::conj(vals[i][static_cast<std::size_t>(a)]) * vals[i][static_cast<std::size_t>(b)];
            }
            worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
        }
    }
    CHECK(worst < 1e-11);
}

TEST_CASE("frames and rotated harmonics")
{
    const Frame id = Frame::from_direction(Vec3::UnitZ());
    CHECK((id.rotation() - Mat3::Identity()).norm() < 1e-15);
    const Frame down = Frame::from_direction(-Vec3::UnitZ());
    CHECK((down.rotation() * (-Vec3::UnitZ()) - Vec3::UnitZ()).norm() < 1e-14);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 w = random_unit(rng);
        const Frame f = Frame::from_direction(w);
        CHECK((f.rotation() * w - Vec3::UnitZ()).norm() < 1e-12);
        CHECK(std::abs(f.rotation().determinant() - 1.0) < 1e-12);
        CHECK(std::abs(f.eta1().cross(f.eta2()).dot(w) - 1.0) < 1e-12);
        const double t = 0.9 * trial - 2.0;
        const Frame g = f.twisted(t);
        CHECK((g.omega() - w).norm() < 1e-14);
        for (int l = 0; l <= 4; ++l) {
            for (int m = -l; m <= l; ++m) {
                const Vec3 x = random_unit(rng);
                const cplx a = sph_harm_rotated({l, m}, f, x);
                const cplx b = sph_harm_rotated({l, m}, g, x);
                // Same ω: harmonics differ only by a unimodular phase.
                CHECK(std::abs(b - std::polar(1.0, m * t) * a) < 1e-12);
                CHECK(std::abs(std::abs(a) - std::abs(sph_harm({l, m}, Vec3(f.rotation() * x)))) < 1e-14);
            }
        }
    }
    const Vec3 x = random_unit(rng);
    CHECK(std::abs(sph_harm_rotated({3, 2}, id, x) - sph_harm({3, 2}, x)) < 1e-15);
    CHECK_THROWS_AS(Frame::from_rotation(2.0 * Mat3::Identity()), DomainError);
}

TEST_CASE("ladder coefficients")
{
    CHECK(ladder_coeff(Ladder::lower, 1, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK(ladder_coeff(Ladder::raise, 1, 1) == 0.0);
    for (int l = 0; l <= 6; ++l) {
        for (int k = 0; k <= l; ++k) {
            double prod = 1.0;
            for (int m = l; m > -k; --m) {
                prod *= ladder_coeff(Ladder::lower, l, m);
            }
            const double expect = std::sqrt(factorial(l + k) * factorial(2 * l) / factorial(l - k));
            CHECK(prod == doctest::Approx(expect).epsilon(1e-13));
        }
    }
    // Ladder action checked against the angular-momentum operators at a point:
    // L+ Y = e^{iφ}(∂θ + i cotθ ∂φ) Y, by finite differences.
    const double th = 1.1;
    const double ph = 0.4;
    const double h = 1e-5;
    for (int l = 1; l <= 4; ++l) {
        for (int m = -l; m < l; ++m) {
            const cplx dth = (sph_harm({l, m}, th + h, ph) - sph_harm({l, m}, th - h, ph)) / (2 * h);
            const cplx y = sph_harm({l, m}, th, ph);
            const cplx lp = std::polar(1.0, ph) * (dth + cplx(0, 1) * (1 / std::tan(th)) * cplx(0, m) * y);
            CHECK(std::abs(lp - ladder_coeff(Ladder::raise, l, m) * sph_harm({l, m + 1}, th, ph)) < 1e-8);
        }
    }
}

TEST_CASE("c_k and mu_kl")
{
    CHECK(c_k(0, 3) == doctest::Approx(4 * pi).epsilon(1e-15));
    CHECK(c_k(0, 2) == doctest::Approx(2 * pi).epsilon(1e-15));
    for (int d : {3, 4, 5}) {
        for (int k = 1; k <= 30; ++k) {
            const double lhs = log_c_k(k, d);
            const double rhs = log_c_k(k - 1, d) + std::log(k / (k + 0.5 * (d - 2)));
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
        }
    }
    CHECK(c_k(400, 3) == doctest::Approx(std::exp(log_c_k(400, 3))));

    CHECK(mu_kl(0, 0) == doctest::Approx(4 * pi).epsilon(1e-15));
    for (int k = 0; k <= 20; ++k) {
        const double lhs = 2 * k * std::log(2.0) + log_factorial(k) + log_gamma(k + 0.5);
        const double rhs = 0.5 * std::log(pi) + log_factorial(2 * k);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
        // Diagonal: μ_{k,k} = 4π / ((2k+1)(2k)!).
        CHECK(mu_kl(k, k) == doctest::Approx(4 * pi / ((2 * k + 1) * factorial(2 * k))).epsilon(1e-12));
    }
    for (int k = 0; k <= 10; ++k) {
        for (int l = k + 1; l <= 40; ++l) {
            CHECK(mu_kl(k, l) > 0.0);
            CHECK(mu_kl(k, l) < mu_kl(k, l - 1));
        }
    }
    // μ from the product form with c_k and c_l.
    for (int k = 0; k <= 6; ++k) {
        for (int l = k; l <= 8; ++l) {
            const double alt = std::sqrt(c_k(l, 3) * c_k(k, 3)) / (factorial(k) * factorial(l))
                * std::sqrt(factorial(2 * l) / (factorial(l + k) * factorial(l - k))) * std::pow(2.0, -l - k);
            CHECK(mu_kl(k, l) == doctest::Approx(alt).epsilon(1e-13));
        }
    }
}

TEST_CASE("bessel series")
{
    CHECK(std::abs(spherical_bessel_j(0, 2.0) - std::sin(2.0) / 2.0) < 1e-12);
    CHECK(spherical_bessel_j(0, 0.0) == 1.0);
    CHECK(spherical_bessel_j(3, 0.0) == 0.0);
    CHECK(std::abs(bessel_j(0.5, 1.3) - std::sqrt(2 / (pi * 1.3)) * std::sin(1.3)) < 1e-14);
    // j_1(t) = sin t / t^2 - cos t / t
    CHECK(std::abs(spherical_bessel_j(1, 3.7) - (std::sin(3.7) / (3.7 * 3.7) - std::cos(3.7) / 3.7)) < 1e-13);
    // Independent reference: std::cyl_bessel_j from the C++17 special functions.
    for (double nu : {0.0, 1.0, 2.5, 7.0}) {
        for (double t : {0.1, 1.0, 5.0, 12.0}) {
            CHECK(std::abs(bessel_j(nu, t) - std::cyl_bessel_j(nu, t)) < 1e-12);
        }
    }
    CHECK_THROWS_AS(bessel_j(0.0, 50.0, 5), AccuracyError);
}

TEST_CASE("zeta vectors")
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        const Frame f = Frame::from_direction(random_unit(rng));
        const ZetaVector z = ZetaVector::from_orthonormal(f.eta1(), f.eta2(), 1.7);
        CHECK(std::abs(z.dot(z)) < 1e-14);
        CHECK(z.norm() == doctest::Approx(1.7 * std::sqrt(2.0)));
    }
    CHECK_THROWS_AS(ZetaVector(CVec3(1, 0, 0)), DomainError);
}
