#include "born_calderon/selfcheck.hpp"

#include "born_calderon/born3d.hpp"
#include "born_calderon/born_radial.hpp"
#include "born_calderon/dtn3d.hpp"
#include "born_calderon/errors.hpp"
#include "born_calderon/gaunt.hpp"
#include "born_calderon/quadrature.hpp"
#include "born_calderon/radial_dtn.hpp"
#include "born_calderon/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace bc {

namespace {

std::vector<std::pair<std::string, RadialPotential>> radial_corpus()
{
    return {
        {"step", RadialPotential::constant_ball(5.0, 0.7)},
        {"ball", RadialPotential::constant_ball(2.0, 0.9)},
        {"annulus", RadialPotential::annulus(3.0, 0.3, 0.8)},
        {"two steps", RadialPotential::piecewise_constant({0.0, 0.4, 0.75}, {-1.5, 2.5})},
        {"gaussian", RadialPotential::gaussian_trunc(4.0, 0.35, 0.85)},
    };
}

// 1_{B_alpha}(1 + Re Y_{1,1}).
PotentialSH indicator_re_y11(double alpha)
{
    const double sup = 1.0 + std::sqrt(3.0 / (8.0 * pi));
    return PotentialSH::from_profiles(1,
                                      {{{0, 0}, [](double) { return cplx(2.0 * std::sqrt(pi), 0.0); }},
                                       {{1, 1}, [](double) { return cplx(0.5, 0.0); }},
                                       {{1, -1}, [](double) { return cplx(-0.5, 0.0); }}},
                                      alpha, sup);
}

// Smooth real potential with all (l, m) up to `degree`, profiles (1 - (r/α)²)².
PotentialSH smooth_mixed(int degree, double amplitude, double alpha)
{
    std::vector<std::pair<SphericalIndex, PotentialSH::Basis>> profiles;
    double sup = 0.0;
    const auto shape = [alpha](double r) {
        const double t = 1.0 - (r / alpha) * (r / alpha);
        return t > 0.0 ? t * t : 0.0;
    };
    for (int l = 0; l <= degree; ++l) {
        for (int m = 0; m <= l; ++m) {
            cplx a = (l == 0 ? 2.0 * std::sqrt(pi) : 0.6 / (l + 1)) * amplitude * std::polar(1.0, 0.7 * l + 1.3 * m);
            if (m == 0) a = a.real();
            sup += std::abs(a) * std::sqrt((2 * l + 1) / (4 * pi)) * (m == 0 ? 1.0 : 2.0);
            profiles.push_back({{l, m}, [a, shape](double r) { return a * shape(r); }});
            if (m > 0) {
                const cplx b = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(a);
                profiles.push_back({{l, -m}, [b, shape](double r) { return b * shape(r); }});
            }
        }
    }
    return PotentialSH::from_profiles(degree, profiles, alpha, sup);
}

double indicator_hat(double alpha, double s)
{
    if (s == 0.0) return 4.0 * pi * alpha * alpha * alpha / 3.0;
    return 4.0 * pi * (std::sin(alpha * s) - alpha * s * std::cos(alpha * s)) / (s * s * s);
}

std::string fmt(const char* format, double a, double b = 0.0)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, format, a, b);
    return buf;
}

CriterionResult make(int id, std::string name, double measured, double threshold, std::string detail = {})
{
    return {id, std::move(name), measured <= threshold, measured, threshold, std::move(detail)};
}

// ---------------------------------------------------------------------------

CriterionResult radial_series_vs_ode(Suite)
{
    const RadialPotential q = RadialPotential::constant_ball(5.0, 0.7);
    double worst = 0.0;
    for (int k = 2; k <= 12; ++k) {
        const SeriesEigenvalue s = eigenvalue_series(q, k, 8);
        const double lam = solve_radial_channel(q, k).lambda;
        worst = std::max(worst, std::abs(s.lambda - lam) / (s.tail_bound + 1e-8));
    }
    return make(1, "radial series vs ODE (5*1[0,0.7], k=2..12, N=8)", worst, 1.0,
                "|series - ode| / (tail bound + 1e-8)");
}

CriterionResult radial_bounds(Suite suite)
{
    const int kmax = suite == Suite::full ? 12 : 6;
    double worst = 0.0;
    int violations = 0;
    int checked = 0;
    for (const auto& [name, q] : radial_corpus()) {
        for (int k = 0; k <= kmax; ++k) {
            const std::vector<double> terms = sigma_terms(q, k, 8);
            for (int n = 2; n <= 8; ++n) {
                const double r = std::abs(terms[static_cast<std::size_t>(n - 1)]) / sigma_kn_bound(q, k, n);
                worst = std::max(worst, r);
                violations += r > 1.0 + 1e-10;
                ++checked;
            }
            const double lam = solve_radial_channel(q, k).lambda;
            const double r = std::abs(lam - k - sigma_k1(q, k)) / first_order_residual_bound(q, k);
            worst = std::max(worst, r);
            violations += r > 1.0 + 1e-10;
            ++checked;
        }
    }
    CriterionResult out = make(2, "radial moment and eigenvalue bounds (5 potentials)", worst, 1.0 + 1e-10,
                               std::to_string(violations) + " violations in " + std::to_string(checked) +
                                   " checks; metric = value / bound");
    out.passed = violations == 0;
    return out;
}

CriterionResult exact_h_identity(Suite suite)
{
    auto corpus = radial_corpus();
    if (suite == Suite::fast) corpus.erase(corpus.begin() + 2, corpus.end());
    double worst = 0.0;
    for (const auto& [name, q] : corpus) {
        const DtnSpectrum spec = compute_spectrum(q, 40, DtnSpectrum::Method::ode);
        for (double s : {0.5, 2.0, 5.0, 10.0}) {
            const double a = scattering_transform_radial(spec, s, 0.1);
            const double b = scattering_transform_radial(spec, s, 0.05);
            worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
        }
    }
    return make(3, "exact-h scattering transform, h=0.1 vs h=0.05", worst, 1e-12, "relative difference");
}

CriterionResult fourier_from_moments_indicator(Suite)
{
    const RadialPotential q = RadialPotential::constant_ball(1.0, 0.8);
    std::vector<double> sigma;
    for (int k = 0; k <= 40; ++k) sigma.push_back(sigma_k1(q, k));
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double s = 0.1 * i;
        worst = std::max(worst, std::abs(fourier_from_moments(sigma, s, 3, 40).value - indicator_hat(0.8, s)));
    }
    return make(4, "Fourier from moments, 1_{B_0.8}, kmax=40, |xi|<=20", worst, 1e-8, "absolute error");
}

CriterionResult exponential_pairing(Suite suite)
{
    const int pairs = suite == Suite::full ? 20 : 5;
    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> scale(0.5, 1.5);
    auto random_zeta = [&] {
        Vec3 a(gauss(rng), gauss(rng), gauss(rng));
        a.normalize();
        Vec3 b(gauss(rng), gauss(rng), gauss(rng));
        b = (b - b.dot(a) * a).normalized();
        return CVec3(scale(rng) * (a.cast<cplx>() + cplx(0.0, 1.0) * b.cast<cplx>()));
    };
    double worst = 0.0;
    int drawn = 0;
    for (int p = 0; p < pairs; ++p) {
        CVec3 z1, z2;
        do {
            z1 = random_zeta();
            z2 = random_zeta();
            ++drawn;
        } while (std::abs(bilinear(z1, z2)) < 0.5 * z1.norm() * z2.norm());
        for (int k = 0; k <= 10; ++k) {
            const SphereRule rule = make_sphere_rule(std::max(2 * k, 1));
            cplx sum = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const CVec3 x = rule.nodes[i].cast<cplx>();
                sum += rule.weights[i] * std::pow(bilinear(z1, x), k) * std::pow(bilinear(z2, x), k);
            }
            const cplx expect = c_k(k, 3) * std::pow(bilinear(z1, z2) / 2.0, k);
            worst = std::max(worst, std::abs(sum - expect) / std::abs(expect));
        }
    }
    return make(5, "sphere pairing of (z1.x)^k (z2.x)^k, k<=10", worst, 1e-10,
                std::to_string(pairs) + " random pairs (" + std::to_string(drawn) +
                    " drawn, |z1.z2| >= |z1||z2|/2); relative error");
}

CriterionResult gaunt_special(Suite suite)
{
    const int L = suite == Suite::full ? 8 : 5;
    double worst = 0.0;
    for (int l = 0; l <= L; ++l) {
        for (int k = 0; k <= l; ++k) {
            for (int n = l - k; n <= l + k; ++n) {
                const double norm = std::sqrt((2.0 * l + 1) * (2.0 * k + 1) / (4 * pi * (2.0 * n + 1)));
                const double g00 = gaunt_numeric(l, 0, k, 0, n, 0);
                worst = std::max(worst, std::abs(g00 - norm * cg_00(l, k, n) * cg_00(l, k, n)));
                const double gkm = gaunt_numeric(l, k, k, -k, n, 0);
                worst = std::max(worst, std::abs(gkm - norm * cg_km(l, k, n) * cg_00(l, k, n)));
            }
            const ProductExpansion pe = product_expansion(k, l);
            for (int i = 0; i <= 12; ++i) {
                for (int j = 0; j < 8; ++j) {
                    const Vec3 x = from_angles(pi * i / 12.0, 2 * pi * j / 8.0 + 0.1);
                    const cplx lhs = std::conj(sph_harm({l, k}, x)) * sph_harm({k, k}, x);
                    worst = std::max(worst, std::abs(lhs - pe.evaluate(x)));
                }
            }
        }
    }
    return make(6, "special Clebsch-Gordan values and product expansion, degrees<=" + std::to_string(L), worst,
                1e-10, "absolute error vs quadrature Gaunt integrals and pointwise products");
}

CriterionResult radial_consistency_3d(Suite suite)
{
    const int K = suite == Suite::full ? 8 : 4;
    std::vector<RadialPotential> qs = {RadialPotential::piecewise_constant({0.0, 0.4, 0.75}, {-1.5, 2.5}),
                                       RadialPotential::annulus(3.0, 0.3, 0.8)};
    if (suite == Suite::fast) qs.pop_back();
    const Frame f = Frame::from_direction(Vec3(0.3, -0.5, 0.81).normalized());
    double off = 0.0;
    double diag = 0.0;
    for (const RadialPotential& q : qs) {
        const MatrixElementTable t = matrix_element_table(PotentialSH::from_radial(q), f, K);
        for (int k = 0; k <= K; ++k) {
            diag = std::max(diag, std::abs(t.entries(k, k) - (solve_radial_channel(q, k).lambda - k)));
            for (int l = k + 1; l <= K; ++l) off = std::max(off, std::abs(t.entries(k, l)));
        }
    }
    CriterionResult r = make(7, "3D channels on radial potentials, k<=" + std::to_string(K), diag, 1e-6,
                             "diagonal error vs radial ODE; max off-diagonal " + fmt("%.3e (limit 1e-8)", off));
    r.passed = diag <= 1e-6 && off <= 1e-8;
    return r;
}

CriterionResult fourier_moments_3d(Suite suite)
{
    const PotentialSH q = indicator_re_y11(0.8);
    const BallFunction qb = q.as_ball_function();
    std::vector<Vec3> dirs = {Vec3(0.0, 0.0, 1.0), Vec3(1.0, 2.0, -0.5).normalized(),
                              Vec3(-0.6, 0.3, 0.2).normalized()};
    if (suite == Suite::fast) dirs.resize(1);
    double worst = 0.0;
    for (const Vec3& w : dirs) {
        const MomentTable3D m = moment_table_3d(q, Frame::from_direction(w), 25);
        for (double s : {1.0, 3.0, 6.0}) {
            const cplx ref = fourier_oracle(qb, s * w).value;
            worst = std::max(worst, std::abs(fourier_via_moments_3d(m, s * w, 25).value - ref) / std::abs(ref));
        }
    }
    return make(8, "3D Fourier from moments, 1_{B_0.8}(1+Re Y11), kmax=25", worst, 1e-3,
                "relative error vs quadrature oracle; directions: " + std::to_string(dirs.size()));
}

CriterionResult linearization_scaling(Suite suite)
{
    const bool full = suite == Suite::full;
    const int degree = full ? 3 : 2;
    const int kmax = full ? 4 : 2;
    const int lmax = full ? 6 : 3;
    const PotentialSH q = smooth_mixed(degree, 0.25, 0.8);
    const Frame f = Frame::from_direction(Vec3(0.6, -0.3, 0.74).normalized());
    const MomentTable3D m = moment_table_3d(q, f, lmax);
    std::vector<TriangularTable> res;
    for (double eps : {1.0, 0.5, 0.25}) {
        const MatrixElementTable t = matrix_element_table(q.scaled(eps), f, lmax);
        TriangularTable r(lmax);
        for (int k = 0; k <= lmax; ++k)
            for (int l = k; l <= lmax; ++l) r(k, l) = std::abs(t.entries(k, l) - eps * m.entries(k, l));
        res.push_back(r);
    }
    double worst = 0.0;
    for (int k = 0; k <= kmax; ++k) {
        for (int l = k; l <= lmax; ++l) {
            for (int i = 0; i < 2; ++i) {
                const double ratio = res[i](k, l).real() / res[i + 1](k, l).real();
                worst = std::max(worst, std::abs(ratio / 4.0 - 1.0));
            }
        }
    }
    return make(9,
                "linearization residual scales as eps^2, (k,l)<=(" + std::to_string(kmax) + "," +
                    std::to_string(lmax) + ")",
                worst, 0.1, "max |ratio/4 - 1| over eps in {1, 1/2, 1/4}; smooth degree-" + std::to_string(degree) +
                                " potential");
}

CriterionResult equivariance(Suite suite)
{
    const int K = suite == Suite::full ? 4 : 2;
    const PotentialSH q = smooth_mixed(suite == Suite::full ? 3 : 2, 0.5, 0.8);
    const Frame f = Frame::from_direction(Vec3(-0.2, 0.7, 0.4).normalized());
    const MatrixElementTable t = matrix_element_table(q, f, K);
    const MatrixElementTable t2 = matrix_element_table(q, f.twisted(0.9), K);

    // Second route: D-N blocks of the unrotated potential, contracted with the
    // expansions of Y^ω_{l,k} in the standard basis (sphere quadrature).
    const ChannelSystem sys(q, default_lmax(q, K));
    auto expansion = [&](int l, int k) {
        const SphereRule rule = make_sphere_rule(2 * l + 2);
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(2 * l + 1);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const cplx y = sph_harm_rotated({l, k}, f, rule.nodes[i]);
            for (int n = -l; n <= l; ++n) a(n + l) += rule.weights[i] * y * std::conj(sph_harm({l, n}, rule.nodes[i]));
        }
        return a;
    };
    double rot = 0.0;
    double frame = 0.0;
    for (int k = 0; k <= K; ++k) {
        const Eigen::VectorXcd b = expansion(k, k);
        for (int l = k; l <= K; ++l) {
            const Eigen::MatrixXcd B = dtn_block(sys, k, l);
            const cplx lam = (expansion(l, k).adjoint() * B * b)(0, 0) - (l == k ? double(k) : 0.0);
            rot = std::max(rot, std::abs(lam - t.entries(k, l)));
            frame = std::max(frame, std::abs(t.entries(k, l) - t2.entries(k, l)));
        }
    }
    CriterionResult r = make(10, "rotation equivariance and frame independence, k<=l<=" + std::to_string(K), rot, 1e-7,
                             "rotated vs standard-basis route; twisted frame gap " + fmt("%.3e (limit 1e-8)", frame));
    r.passed = rot <= 1e-7 && frame <= 1e-8;
    return r;
}

CriterionResult taylor_limit(Suite)
{
    const double s = 2.0;
    const std::vector<double> hs = {0.1, 0.05, 0.025};
    double worst_extrap = 0.0;
    double min_order = 1e300;
    for (auto [k, l] : std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {1, 3}, {2, 2}}) {
        const cplx c = taylor_angular_limit(k, l, s);
        std::vector<cplx> ratio;
        for (double h : hs) ratio.push_back(taylor_angular_coeff(k, l, h, s) / std::pow(h, k + l));
        const double d01 = std::abs(ratio[0] - ratio[1]);
        const double d12 = std::abs(ratio[1] - ratio[2]);
        if (d01 < 1e-13 * std::abs(c)) {
            // h-independent: the ratio already equals the constant
            worst_extrap = std::max(worst_extrap, std::abs(ratio[2] - c) / std::abs(c));
            continue;
        }
        const double p = std::log2(d01 / d12);
        min_order = std::min(min_order, p);
        const double factor = std::pow(2.0, std::round(p));
        const cplx extrap = (factor * ratio[2] - ratio[1]) / (factor - 1.0);
        worst_extrap = std::max(worst_extrap, std::abs(extrap - c) / std::abs(c));
    }
    CriterionResult r = make(11, "Taylor angular coefficient limit, h in {0.1, 0.05, 0.025}", worst_extrap, 1e-4,
                             "relative error of the Richardson limit; observed order " +
                                 fmt("%.3f (needs >= 0.9)", min_order));
    r.passed = worst_extrap <= 1e-4 && min_order >= 0.9;
    return r;
}

CriterionResult averaged_radial_reduction(Suite)
{
    const RadialPotential q = RadialPotential::piecewise_constant({0.0, 0.4, 0.75}, {-1.5, 2.5});
    const int K = 30;
    const Frame f = Frame::from_direction(Vec3(0.3, -0.4, 0.8).normalized());
    const MatrixElementTable t = matrix_element_table(PotentialSH::from_radial(q), f, K);
    const DtnSpectrum spec = compute_spectrum(q, K, DtnSpectrum::Method::ode);
    double worst = 0.0;
    for (int i = 0; i <= 40; ++i) {
        const double s = 0.25 * i;
        worst = std::max(worst, std::abs(averaged_born_hat(t, s * f.omega()).value - born_hat_radial(spec, s).value));
    }
    return make(12, "averaged Born transform on a radial potential, |xi|<=10", worst, 1e-7,
                "absolute difference to the radial Born series");
}

CriterionResult reconstruction(Suite)
{
    const RadialPotential q = RadialPotential::bump(3.0, 0.8);
    std::vector<double> r;
    for (int i = 0; i <= 400; ++i) r.push_back(i / 400.0);
    std::vector<double> errors;
    for (double band : {10.0, 20.0, 30.0}) {
        const RadialReconstruction rec =
            reconstruct_radial([&](double s) { return radial_fourier_transform(q, s); }, band, r);
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
            const double e0 = (rec.q[i] - q(r[i])) * r[i];
            const double e1 = (rec.q[i + 1] - q(r[i + 1])) * r[i + 1];
            sum += 0.5 * (e0 * e0 + e1 * e1) * (r[i + 1] - r[i]);
        }
        errors.push_back(std::sqrt(4.0 * pi * sum));
    }
    double worst = 0.0;
    for (std::size_t i = 1; i < errors.size(); ++i) worst = std::max(worst, errors[i] / errors[i - 1]);
    CriterionResult res = make(13, "band-limited reconstruction of a bump, Xi in {10, 20, 30}", worst, 1.0,
                               "max ratio of successive L2 errors (" + fmt("%.3e, ", errors[0]) +
                                   fmt("%.3e, ", errors[1]) + fmt("%.3e)", errors[2]));
    res.passed = worst < 1.0;
    return res;
}

} // namespace

Suite parse_suite(const std::string& name)
{
    if (name == "fast") return Suite::fast;
    if (name == "full") return Suite::full;
    throw DomainError("unknown suite \"" + name + "\" (fast or full)");
}

std::vector<CriterionResult> run_selfcheck(Suite suite, const std::function<void(const CriterionResult&)>& on_result)
{
    using Check = CriterionResult (*)(Suite);
    static const std::vector<std::pair<std::string, Check>> checks = {
        {"radial series vs ODE", radial_series_vs_ode},
        {"radial bounds", radial_bounds},
        {"exact-h identity", exact_h_identity},
        {"Fourier from moments", fourier_from_moments_indicator},
        {"exponential pairing", exponential_pairing},
        {"special Clebsch-Gordan values", gaunt_special},
        {"3D radial consistency", radial_consistency_3d},
        {"3D Fourier from moments", fourier_moments_3d},
        {"linearization scaling", linearization_scaling},
        {"equivariance", equivariance},
        {"Taylor angular limit", taylor_limit},
        {"averaged Born radial reduction", averaged_radial_reduction},
        {"band-limited reconstruction", reconstruction},
    };
    std::vector<CriterionResult> out;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        CriterionResult r;
        try {
            r = checks[i].second(suite);
        } catch (const std::exception& e) {
            r = {static_cast<int>(i + 1), checks[i].first, false, std::nan(""), 0.0,
                 std::string("exception: ") + e.what()};
        }
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_criterion(const CriterionResult& r)
{
    char head[64];
    std::snprintf(head, sizeof head, "%s [%02d] ", r.passed ? "PASS" : "FAIL", r.id);
    char nums[96];
    std::snprintf(nums, sizeof nums, ": measured=%.3e limit=%.3e", r.measured, r.threshold);
    std::string line = head + r.name + nums;
    if (!r.detail.empty()) line += " (" + r.detail + ")";
    return line;
}

} // namespace bc
