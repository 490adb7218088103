#include <doctest.h>

#include "born_calderon/errors.hpp"
#include "born_calderon/panels.hpp"
#include "born_calderon/radial_dtn.hpp"
#include "born_calderon/specfun.hpp"
#include "corpus.hpp"

#include <cmath>

using namespace bc;

namespace {

// Modified spherical Bessel function i_k(x) from its (positive) power series.
double mod_sph_bessel(int k, double x)
{
    double term = std::pow(0.5 * x, k) / std::exp(log_gamma(k + 1.5));
    double sum = term;
    for (int j = 1; j < 200; ++j) {
        term *= 0.25 * x * x / (j * (j + k + 0.5));
        sum += term;
        if (term < 1e-18 * sum) {
            break;
        }
    }
    return 0.5 * std::sqrt(pi) * sum;
}

double constant_ball_lambda(double c, int k)
{
    if (c > 0) {
        const double x = std::sqrt(c);
        return k + x * mod_sph_bessel(k + 1, x) / mod_sph_bessel(k, x);
    }
    const double x = std::sqrt(-c);
    return k - x * spherical_bessel_j(k + 1, x) / spherical_bessel_j(k, x);
}

// σ_{k,3} by the r-space triple integral with the half-line kernel
// K(r,s) = (min/max)^κ - (rs)^κ and the (1/(2κ))^2 normalisation.
double sigma_k3_rspace(const RadialPotential& q, int k)
{
    const double kap = kappa(k, q.dimension());
    std::vector<double> ends = q.panel_ends();
    ends.insert(ends.begin(), q.inner_radius());
    const GaussRule outer = composite_gauss(ends, 40);
    auto kernel = [kap](double r, double s) {
        const double lo = std::min(r, s);
        const double hi = std::max(r, s);
        return std::pow(lo / hi, kap) - std::pow(r * s, kap);
    };
    double total = 0.0;
    for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
        const double r = outer.nodes[i];
        std::vector<double> cuts = ends;
        cuts.push_back(r);
        std::sort(cuts.begin(), cuts.end());
        const GaussRule inner = composite_gauss(cuts, 40);
        double b = 0.0;
        for (std::size_t j = 0; j < inner.nodes.size(); ++j) {
            const double s = inner.nodes[j];
            b += inner.weights[j] * q(s) * std::pow(s, kap + 1) * kernel(s, r);
        }
        total += outer.weights[i] * r * q(r) * b * b;
    }
    return total / (4 * kap * kap);
}

} // namespace

TEST_CASE("zero potential")
{
    const RadialPotential z = RadialPotential::zero();
    for (int k = 0; k <= 20; ++k) {
        CHECK(std::abs(solve_radial_channel(z, k).lambda - k) < 1e-10);
        CHECK(sigma_k1(z, k) == 0.0);
        for (int n = 2; n <= 4; ++n) {
            CHECK(sigma_kn(z, k, n) == 0.0);
        }
    }
    const SeriesEigenvalue s = eigenvalue_series(z, 3, 8);
    CHECK(s.lambda == 3.0);
}

TEST_CASE("constant potential closed forms")
{
    const RadialPotential c4 = RadialPotential::constant_ball(4.0, 1.0);
    CHECK(std::abs(solve_radial_channel(c4, 0).lambda - (2.0 / std::tanh(2.0) - 1.0)) < 1e-10);
    for (double c : {4.0, 0.5, -2.0}) {
        const RadialPotential q = RadialPotential::constant_ball(c, 1.0);
        for (int k = 0; k <= 15; ++k) {
            CHECK(std::abs(solve_radial_channel(q, k).lambda - constant_ball_lambda(c, k)) < 1e-10);
        }
    }
    // b_0(r) = sinh(2r) / (r sinh 2).
    const RadialChannelSolution sol = solve_radial_channel(c4, 0);
    for (double r : {0.1, 0.37, 0.5, 0.93}) {
        CHECK(std::abs(sol.b_at(r) - std::sinh(2 * r) / (r * std::sinh(2.0))) < 1e-7);
    }
}

TEST_CASE("resonance is reported")
{
    const RadialPotential q = RadialPotential::constant_ball(-pi * pi, 1.0);
    CHECK_THROWS_AS(solve_radial_channel(q, 0), ResonanceError);
}

TEST_CASE("first moments")
{
    const RadialPotential q = RadialPotential::constant_ball(3.0, 0.6);
    for (int k = 0; k <= 30; ++k) {
        const double exact = 3.0 * std::pow(0.6, 2 * k + 3) / (2 * k + 3);
        CHECK(std::abs(sigma_k1(q, k) - exact) <= 1e-13 * exact);
    }
    for (const auto& [name, p] : radial_corpus()) {
        for (int k = 0; k <= 12; ++k) {
            CHECK(std::abs(sigma_k1(p, k)) <= sigma_k1_bound(p, k) * (1 + 1e-12));
        }
    }
    // Ball-rule route to the same moment: (1/|S^2|) ∫_B q |x|^{2k} dx.
    const BallFunction f = q.as_ball_function();
    const BallRule rule = make_ball_rule(14, 2, ball_breaks(f));
    for (int k = 0; k <= 8; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            s += rule.weights[i] * f.eval(rule.nodes[i]) * std::pow(rule.nodes[i].squaredNorm(), k);
        }
        CHECK(std::abs(s / (4 * pi) - sigma_k1(q, k)) < 1e-13);
    }
}

TEST_CASE("higher moments: independent routes")
{
    for (const auto& [name, q] : radial_corpus()) {
        for (int k : {0, 1, 3, 8}) {
            const std::vector<double> terms = sigma_terms(q, k, 3);
            INFO(name << " k=" << k);
            CHECK(std::abs(terms[0] - sigma_k1(q, k)) == 0.0);
            CHECK(std::abs(terms[1] - sigma_k2_direct(q, k)) < 1e-9);
            CHECK(std::abs(terms[2] - sigma_k3_rspace(q, k)) < 1e-9);
        }
    }
}

TEST_CASE("sigma bounds and operator norm monitor")
{
    for (const auto& [name, q] : radial_corpus()) {
        for (int k = 0; k <= 12; ++k) {
            const std::vector<double> terms = sigma_terms(q, k, 8);
            for (int n = 2; n <= 8; ++n) {
                INFO(name << " k=" << k << " n=" << n);
                CHECK(std::abs(terms[static_cast<std::size_t>(n - 1)]) <= sigma_kn_bound(q, k, n) * (1 + 1e-10));
            }
        }
        for (int k : {0, 2, 6}) {
            INFO(name << " k=" << k);
            CHECK(estimate_resolvent_norm(q, k) <= contraction_bound(q, k) + 1e-8);
        }
    }
}

TEST_CASE("series against the ODE")
{
    for (const auto& [name, q] : radial_corpus()) {
        for (int k = 0; k <= 14; ++k) {
            const double lam = solve_radial_channel(q, k).lambda;
            INFO(name << " k=" << k);
            CHECK(std::abs(lam - k - sigma_k1(q, k)) <= first_order_residual_bound(q, k) * (1 + 1e-10));
            if (contraction_bound(q, k) < 1.0) {
                const SeriesEigenvalue s = eigenvalue_series(q, k, 8);
                CHECK(std::abs(s.lambda - lam) <= s.tail_bound + 1e-8);
            } else {
                CHECK_THROWS_AS(eigenvalue_series(q, k, 8), ConvergenceError);
            }
        }
    }
    // Monotonicity: q >= 0 gives λ_k >= k.
    for (const auto& q : {RadialPotential::constant_ball(5.0, 0.7), RadialPotential::annulus(3.0, 0.3, 0.8)}) {
        for (int k = 0; k <= 10; ++k) {
            CHECK(solve_radial_channel(q, k).lambda >= k);
        }
    }
}

TEST_CASE("threshold is strict")
{
    // α^2 ‖q‖ / κ^2 = 1 exactly at k = 2 for d = 3: ‖q‖ = 6.25, α = 1.
    const RadialPotential q = RadialPotential::constant_ball(6.25, 1.0);
    CHECK(contraction_bound(q, 2) == 1.0);
    CHECK_THROWS_AS(eigenvalue_series(q, 2), ConvergenceError);
    CHECK_NOTHROW(eigenvalue_series(q, 3));
}

TEST_CASE("spectrum and moment table")
{
    const RadialPotential q = RadialPotential::constant_ball(5.0, 0.7);
    const DtnSpectrum ode = compute_spectrum(q, 6, DtnSpectrum::Method::ode);
    CHECK(ode.kmax() == 6);
    CHECK_THROWS_AS(compute_spectrum(q, 6, DtnSpectrum::Method::series), ConvergenceError);
    const RadialMomentTable t = radial_moment_table(q, 4, 3);
    CHECK(t.sigma.size() == 5);
    CHECK(t.kappa[2] == 2.5);
    CHECK(t.sigma[2][0] == doctest::Approx(sigma_k1(q, 2)));
}

TEST_CASE("conductivity helper")
{
    RadialConductivity one{[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
    const RadialPotential z = potential_from_radial_conductivity(one, 3);
    CHECK(z.alpha() == 0.0);
    CHECK(z(0.3) == 0.0);

    // φ(r) = A exp(-1/((r-a)(b-r))) on (a,b); γ = (1+φ)^2.
    const double a = 0.2;
    const double b = 0.8;
    const double amp = 0.3;
    auto phi = [=](double r) {
        if (r <= a || r >= b) {
            return std::array<double, 3>{0, 0, 0};
        }
        const double g = (r - a) * (b - r);
        const double dg = (b - r) - (r - a);
        const double d2g = -2.0;
        const double e = amp * std::exp(-1.0 / g);
        // ψ = -1/g, ψ' = g'/g^2, ψ'' = g''/g^2 - 2 g'^2/g^3
        const double p1 = dg / (g * g);
        const double p2 = d2g / (g * g) - 2 * dg * dg / (g * g * g);
        return std::array<double, 3>{e, e * p1, e * (p2 + p1 * p1)};
    };
    RadialConductivity gam{[=](double r) { return std::pow(1 + phi(r)[0], 2); },
                           [=](double r) { return 2 * (1 + phi(r)[0]) * phi(r)[1]; },
                           [=](double r) {
                               const auto p = phi(r);
                               return 2 * p[1] * p[1] + 2 * (1 + p[0]) * p[2];
                           }};
    const RadialPotential q = potential_from_radial_conductivity(gam, 3);
    for (double r : {0.25, 0.4, 0.55, 0.7}) {
        const auto p = phi(r);
        CHECK(std::abs(q(r) - (p[2] + 2 * p[1] / r) / (1 + p[0])) < 1e-12);
    }
    CHECK(q.alpha() <= 0.801);
    CHECK(q.alpha() >= 0.79);
    for (int k = 0; k <= 5; ++k) {
        CHECK_NOTHROW(solve_radial_channel(q, k));
    }
    RadialConductivity bad{[](double r) { return r - 0.5; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
    CHECK_THROWS_AS(potential_from_radial_conductivity(bad, 3), DomainError);
}
