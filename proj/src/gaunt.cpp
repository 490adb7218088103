#include "born_calderon/gaunt.hpp"

#include "born_calderon/errors.hpp"
#include "born_calderon/quadrature.hpp"
#include "born_calderon/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace bc {

namespace {

bool triangle(int a, int b, int c)
{
    return a >= 0 && b >= 0 && c >= std::abs(a - b) && c <= a + b;
}

double lf(int n)
{
    return log_factorial(n);
}

} // namespace

double cg_km(int ell, int k, int n)
{
    if (k < 0 || ell < k || !triangle(ell, k, n)) {
        return 0.0;
    }
    const double lv = 0.5 * (lf(2 * k) + lf(ell + n - k) + lf(k + ell) - lf(k + ell + n + 1) - lf(k - ell + n)
                             - lf(k + ell - n) - lf(ell - k));
    return std::sqrt(2.0 * n + 1.0) * std::exp(lv);
}

double cg_00(int ell, int k, int n)
{
    if (!triangle(ell, k, n) || (ell + k + n) % 2 != 0) {
        return 0.0;
    }
    const int g = (ell + k + n) / 2;
    const double lv = 0.5 * (lf(ell + n - k) + lf(k - ell + n) + lf(k + ell - n) - lf(k + ell + n + 1)) + lf(g)
        - lf(g - k) - lf(g - ell) - lf(g - n);
    const double sign = (((k + ell - n) / 2) % 2 == 0) ? 1.0 : -1.0;
    return sign * std::sqrt(2.0 * n + 1.0) * std::exp(lv);
}

double gaunt_numeric(int l1, int m1, int l2, int m2, int l, int m)
{
    SphericalIndex{l1, m1}.validate();
    SphericalIndex{l2, m2}.validate();
    SphericalIndex{l, m}.validate();
    const SphereRule rule = make_sphere_rule(l1 + l2 + l);
    cplx sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const Vec3& x = rule.nodes[i];
        sum += rule.weights[i] * std::conj(sph_harm({l, m}, x)) * sph_harm({l1, m1}, x) * sph_harm({l2, m2}, x);
    }
    return sum.real();
}

double ProductExpansion::evaluate(const Vec3& unit_x) const
{
    const double t = std::clamp(unit_x.z() / unit_x.norm(), -1.0, 1.0);
    double s = 0.0;
    for (const auto& term : terms) {
        s += term.coeff * legendre(term.n, t);
    }
    return s;
}

ProductExpansion product_expansion(int k, int ell)
{
    if (k < 0 || ell < k) {
        throw DomainError("product_expansion needs 0 <= k <= ell");
    }
    ProductExpansion pe;
    pe.k = k;
    pe.ell = ell;
    for (int n = ell - k; n <= ell + k; n += 2) {
        const int g = (ell + k + n) / 2;
        const double log_f = lf(g) - lf(g - k) - lf(g - ell) - lf(g - n);
        const double log_g = log_f + lf(ell + n - k) - lf(k + ell + n + 1)
            + 0.5 * std::log((2.0 * k + 1.0) * (2.0 * ell + 1.0)) + 0.5 * (lf(k + ell) + lf(2 * k) - lf(ell - k));
        const double sign = ((g + k - n) % 2 == 0) ? 1.0 : -1.0;
        pe.terms.push_back({n, sign * (2.0 * n + 1.0) / (4 * pi) * std::exp(log_g)});
    }
    return pe;
}

GauntTable::GauntTable(int channel_degree, int potential_degree) : lc_(channel_degree), lq_(potential_degree)
{
    if (lc_ < 0 || lq_ < 0) {
        throw DomainError("Gaunt table degrees must be non-negative");
    }
    const std::size_t total = static_cast<std::size_t>(sh_count(lc_)) * static_cast<std::size_t>(sh_count(lq_))
        * static_cast<std::size_t>(lc_ + 1);
    values_.assign(total, 0.0);

    struct Entry {
        std::size_t slot;
        int a;
        int b;
        int c;
    };
    std::vector<Entry> entries;
    for (int l = 0; l <= lc_; ++l) {
        for (int n = -l; n <= l; ++n) {
            for (int lambda = 0; lambda <= lq_; ++lambda) {
                for (int mu = -lambda; mu <= lambda; ++mu) {
                    const int np = n - mu;
                    for (int lp = std::abs(l - lambda); lp <= std::min(lc_, l + lambda); ++lp) {
                        if ((l + lambda + lp) % 2 != 0 || std::abs(np) > lp) {
                            continue;
                        }
                        entries.push_back({slot(l, n, lambda, mu, lp), SphericalIndex{l, n}.flat(),
                                           SphericalIndex{lambda, mu}.flat(), SphericalIndex{lp, np}.flat()});
                    }
                }
            }
        }
    }
    const int lmax = std::max(lc_, lq_);
    const SphereRule rule = make_sphere_rule(2 * lc_ + lq_);
    std::vector<cplx> y;
    std::vector<cplx> acc(entries.size(), cplx{});
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sph_harm_all(lmax, rule.nodes[i], y);
        const double w = rule.weights[i];
        for (std::size_t e = 0; e < entries.size(); ++e) {
            const auto& en = entries[e];
            acc[e] += w * std::conj(y[static_cast<std::size_t>(en.a)]) * y[static_cast<std::size_t>(en.b)]
                * y[static_cast<std::size_t>(en.c)];
        }
    }
    for (std::size_t e = 0; e < entries.size(); ++e) {
        values_[entries[e].slot] = acc[e].real();
    }
}

std::size_t GauntTable::slot(int l, int n, int lambda, int mu, int lp) const
{
    const auto a = static_cast<std::size_t>(SphericalIndex{l, n}.flat());
    const auto b = static_cast<std::size_t>(SphericalIndex{lambda, mu}.flat());
    return (a * static_cast<std::size_t>(sh_count(lq_)) + b) * static_cast<std::size_t>(lc_ + 1)
        + static_cast<std::size_t>(lp);
}

double GauntTable::operator()(int l, int n, int lambda, int mu, int lp, int np) const
{
    if (l < 0 || l > lc_ || lp < 0 || lp > lc_ || lambda < 0 || lambda > lq_ || std::abs(n) > l
        || std::abs(mu) > lambda || std::abs(np) > lp || n != mu + np) {
        return 0.0;
    }
    return values_[slot(l, n, lambda, mu, lp)];
}

} // namespace bc
