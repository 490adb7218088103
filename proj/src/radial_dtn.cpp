#include "born_calderon/radial_dtn.hpp"

#include "born_calderon/errors.hpp"
#include "born_calderon/panels.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <memory>

namespace bc {

RadialPotential::RadialPotential(Profile profile, std::vector<double> breaks, double alpha, double sup_norm,
                                 int dimension, double inner_radius)
    : profile_(std::move(profile)), alpha_(alpha), sup_norm_(sup_norm), dim_(dimension), inner_(inner_radius)
{
    if (dimension < 2) {
        throw DomainError("dimension must be at least 2");
    }
    if (!(alpha >= 0.0) || alpha > 1.0) {
        throw DomainError("support radius alpha must lie in [0, 1]");
    }
    if (!(sup_norm >= 0.0)) {
        throw DomainError("sup norm bound must be non-negative");
    }
    if (!(inner_radius >= 0.0) || inner_radius > alpha) {
        throw DomainError("inner radius must lie in [0, alpha]");
    }
    for (double b : breaks) {
        if (b > inner_ + 1e-15 && b < alpha_ - 1e-15) {
            breaks_.push_back(b);
        }
    }
    std::sort(breaks_.begin(), breaks_.end());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
}

RadialPotential RadialPotential::zero(int dimension)
{
    return RadialPotential([](double) { return 0.0; }, {}, 0.0, 0.0, dimension);
}

RadialPotential RadialPotential::constant_ball(double c, double alpha, int dimension)
{
    return RadialPotential([c](double) { return c; }, {}, alpha, std::abs(c), dimension);
}

RadialPotential RadialPotential::annulus(double c, double r_inner, double r_outer, int dimension)
{
    if (!(r_inner >= 0.0) || !(r_outer > r_inner)) {
        throw DomainError("annulus needs 0 <= r_inner < r_outer");
    }
    return RadialPotential([c](double) { return c; }, {}, r_outer, std::abs(c), dimension, r_inner);
}

RadialPotential RadialPotential::piecewise_constant(std::vector<double> breaks, std::vector<double> values,
                                                    int dimension)
{
    if (breaks.size() != values.size() + 1 || values.empty()) {
        throw DomainError("piecewise_constant needs len(breaks) == len(values) + 1");
    }
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) {
            throw DomainError("piecewise_constant breaks must increase");
        }
    }
    if (breaks.front() < 0.0 || breaks.back() > 1.0) {
        throw DomainError("piecewise_constant breaks must lie in [0, 1]");
    }
    double sup = 0.0;
    for (double v : values) {
        sup = std::max(sup, std::abs(v));
    }
    // Trailing zero pieces shrink the support.
    std::size_t last = values.size();
    while (last > 0 && values[last - 1] == 0.0) {
        --last;
    }
    if (last == 0) {
        return zero(dimension);
    }
    const double alpha = breaks[last];
    auto b = std::make_shared<std::vector<double>>(breaks);
    auto v = std::make_shared<std::vector<double>>(values);
    auto profile = [b, v](double r) {
        if (r < b->front() || r >= b->back()) {
            return 0.0;
        }
        const auto it = std::upper_bound(b->begin(), b->end(), r);
        return (*v)[static_cast<std::size_t>(it - b->begin() - 1)];
    };
    std::vector<double> interior(breaks.begin() + 1, breaks.begin() + static_cast<std::ptrdiff_t>(last));
    return RadialPotential(profile, interior, alpha, sup, dimension, breaks.front());
}

RadialPotential RadialPotential::gaussian_trunc(double amplitude, double width, double alpha, int dimension)
{
    if (!(width > 0.0)) {
        throw DomainError("gaussian width must be positive");
    }
    return RadialPotential([amplitude, width](double r) { return amplitude * std::exp(-r * r / (width * width)); },
                           {}, alpha, std::abs(amplitude), dimension);
}

RadialPotential RadialPotential::bump(double amplitude, double alpha, int dimension)
{
    if (!(alpha > 0.0)) {
        throw DomainError("bump radius must be positive");
    }
    return RadialPotential(
        [amplitude, alpha](double r) {
            const double x = r / alpha;
            if (x >= 1.0) {
                return 0.0;
            }
            return amplitude * std::exp(1.0 - 1.0 / (1.0 - x * x));
        },
        {}, alpha, std::abs(amplitude), dimension);
}

double RadialPotential::operator()(double r) const
{
    if (r > alpha_ || r < inner_) {
        return 0.0;
    }
    return profile_(r);
}

std::vector<double> RadialPotential::panel_ends() const
{
    std::vector<double> e;
    if (inner_ > 0.0) {
        e.push_back(inner_);
    }
    e.insert(e.end(), breaks_.begin(), breaks_.end());
    e.push_back(alpha_);
    return e;
}

RadialPotential RadialPotential::scaled(double factor) const
{
    Profile p = profile_;
    return RadialPotential([p, factor](double r) { return factor * p(r); }, breaks_, alpha_,
                           std::abs(factor) * sup_norm_, dim_, inner_);
}

BallFunction RadialPotential::as_ball_function() const
{
    if (dim_ != 3) {
        throw DomainError("ball functions are three-dimensional");
    }
    BallFunction f;
    const RadialPotential self = *this;
    f.eval = [self](const Vec3& x) { return self(x.norm()); };
    f.radial_breaks = breaks_;
    if (inner_ > 0.0) {
        f.radial_breaks.push_back(inner_);
    }
    f.support_radius = alpha_ > 0.0 ? alpha_ : 1.0;
    return f;
}

// ---------------------------------------------------------------------------
// Direct ODE route.

double RadialChannelSolution::b_at(double radius) const
{
    if (r.empty()) {
        throw DomainError("empty channel solution");
    }
    if (radius <= r.front()) {
        // b ~ r^k near the origin.
        return r.front() > 0 ? b.front() * std::pow(radius / r.front(), k) : b.front();
    }
    if (radius >= r.back()) {
        return b.back();
    }
    const auto it = std::upper_bound(r.begin(), r.end(), radius);
    const std::size_t i = static_cast<std::size_t>(it - r.begin()) - 1;
    const double h = r[i + 1] - r[i];
    const double s = (radius - r[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * b[i] + h10 * h * db[i] + h01 * b[i + 1] + h11 * h * db[i + 1];
}

RadialChannelSolution solve_radial_channel(const RadialPotential& q, int k, const OdeOptions& options)
{
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2>;
    if (k < 0) {
        throw DomainError("channel degree must be non-negative");
    }
    const int d = q.dimension();
    const double coeff = 2.0 * k + d - 1.0;
    const double eps = options.start_radius;

    // f'' = q f - (2k+d-1)/r f', the equation for b = r^k f.
    auto rhs = [&q, coeff](const State& y, State& dy, double r) {
        dy[0] = y[1];
        dy[1] = q(r) * y[0] - coeff / r * y[1];
    };

    std::vector<double> ends{eps};
    for (double e : q.panel_ends()) {
        if (e > eps && e < 1.0) {
            ends.push_back(e);
        }
    }
    ends.push_back(1.0);
    std::sort(ends.begin(), ends.end());
    ends.erase(std::unique(ends.begin(), ends.end()), ends.end());

    const double q_eps = q(eps);
    State y{1.0 + q_eps * eps * eps / (2.0 * (2.0 * k + d)), q_eps * eps / (2.0 * k + d)};

    std::vector<double> rs;
    std::vector<double> fs;
    std::vector<double> dfs;
    double fmax = std::abs(y[0]);
    auto observer = [&](const State& s, double r) {
        if (!rs.empty() && r <= rs.back()) {
            return;
        }
        rs.push_back(r);
        fs.push_back(s[0]);
        dfs.push_back(s[1]);
        fmax = std::max(fmax, std::abs(s[0]));
    };

    try {
        for (std::size_t p = 0; p + 1 < ends.size(); ++p) {
            const double a = ends[p];
            const double b = ends[p + 1];
            auto stepper = odeint::make_controlled(options.tolerance, options.tolerance,
                                                   odeint::runge_kutta_fehlberg78<State>());
            const double dt0 = std::min(b - a, a / (4.0 * coeff + 4.0));
            // The right-hand side is evaluated strictly inside each panel, so
            // the one-sided limits at jumps are respected.
            auto rhs_panel = [&](const State& s, State& ds, double r) {
                const double rr = std::clamp(r, a + 1e-15 * a, b - 1e-15 * b);
                rhs(s, ds, rr);
            };
            odeint::integrate_adaptive(stepper, rhs_panel, y, a, b, dt0, observer);
        }
    } catch (const std::exception& e) {
        throw StiffnessError(std::string("radial ODE step control failed: ") + e.what());
    }

    const double f1 = y[0];
    const double df1 = y[1];
    if (!std::isfinite(f1) || std::abs(f1) < 1e-12 * fmax) {
        throw ResonanceError("0 is (numerically) a Dirichlet eigenvalue of -Δ+q in channel k=" + std::to_string(k));
    }
    RadialChannelSolution sol;
    sol.k = k;
    sol.lambda = k + df1 / f1;
    sol.r = rs;
    sol.b.resize(rs.size());
    sol.db.resize(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const double rk = std::pow(rs[i], k);
        const double rk1 = k > 0 ? std::pow(rs[i], k - 1) : 0.0;
        sol.b[i] = rk * fs[i] / f1;
        sol.db[i] = (k * rk1 * fs[i] + rk * dfs[i]) / f1;
    }
    if (sol.r.empty() || sol.r.back() < 1.0) {
        sol.r.push_back(1.0);
        sol.b.push_back(1.0);
        sol.db.push_back(sol.lambda);
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Moments.

namespace {

int radial_nodes(int k, int d)
{
    return std::max(24, k + d + 12);
}

} // namespace

double sigma_k1(const RadialPotential& q, int k)
{
    if (k < 0) {
        throw DomainError("degree must be non-negative");
    }
    if (q.alpha() <= 0.0 || q.sup_norm() == 0.0) {
        return 0.0;
    }
    const int d = q.dimension();
    const std::vector<double> cuts = q.panel_ends();
    const std::vector<double> ends = panel_endpoints(q.inner_radius(), q.alpha(), cuts, 0.25);
    const GaussRule g = composite_gauss(ends, radial_nodes(k, d));
    const int p = 2 * k + d - 1;
    double s = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        s += g.weights[i] * q(g.nodes[i]) * std::pow(g.nodes[i], p);
    }
    return s;
}

double sigma_k2_direct(const RadialPotential& q, int k)
{
    const int d = q.dimension();
    const double kap = kappa(k, d);
    if (!(kap > 0.0)) {
        throw DomainError("the double-integral form needs k + (d-2)/2 > 0");
    }
    if (q.alpha() <= 0.0 || q.sup_norm() == 0.0) {
        return 0.0;
    }
    const int m = radial_nodes(k, d);
    const std::vector<double> ends = panel_endpoints(q.inner_radius(), q.alpha(), q.panel_ends(), 0.25);
    const Eigen::MatrixXd& S = gauss_integration_matrix(m);
    const GaussRule ref = gauss_legendre(m);
    const int p = 2 * k + d - 1;
    double inner_before = 0.0;
    double outer = 0.0;
    double first = 0.0;
    Eigen::VectorXd f(m);
    for (std::size_t pan = 0; pan + 1 < ends.size(); ++pan) {
        const double a = ends[pan];
        const double b = ends[pan + 1];
        const double half = 0.5 * (b - a);
        std::vector<double> r(static_cast<std::size_t>(m));
        std::vector<double> qv(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            r[static_cast<std::size_t>(i)] = 0.5 * (a + b) + half * ref.nodes[static_cast<std::size_t>(i)];
            qv[static_cast<std::size_t>(i)] = q(r[static_cast<std::size_t>(i)]);
            f[i] = qv[static_cast<std::size_t>(i)] * std::pow(r[static_cast<std::size_t>(i)], p);
        }
        const Eigen::VectorXd partial = half * (S * f);
        double full = 0.0;
        for (int i = 0; i < m; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            const double w = half * ref.weights[iu];
            full += w * f[i];
            outer += w * qv[iu] * r[iu] * (inner_before + partial[i]);
        }
        first += full;
        inner_before += full;
    }
    return (0.5 * first * first - outer) / kap;
}

namespace {

constexpr int liouville_nodes = 20;

/// Nyström discretization of V R(κ) on composite Gauss panels in t = -log r.
class LiouvilleGrid {
public:
    LiouvilleGrid(const RadialPotential& q, int k)
    {
        const int d = q.dimension();
        kap_ = kappa(k, d);
        if (q.alpha() <= 0.0 || q.sup_norm() == 0.0) {
            return;
        }
        t_lo_ = -std::log(q.alpha());
        // Tail relative to the natural scale e^{-2(κ+1) t_lo} of the integrands.
        const double decay = 2.0 * (kap_ + 1.0);
        double t_hi = t_lo_ + 37.0 / decay;
        tail_bound_ = q.sup_norm() * std::exp(-decay * t_hi) / decay;
        if (q.inner_radius() > 0.0) {
            const double t_in = -std::log(q.inner_radius());
            if (t_in <= t_hi) {
                t_hi = t_in;
                tail_bound_ = 0.0;
            }
        }
        if (!(tail_bound_ < 1e-12) || t_hi > 400.0) {
            throw TruncationError("Liouville tail bound not achievable");
        }
        std::vector<double> cuts;
        for (double b : q.breaks()) {
            cuts.push_back(-std::log(b));
        }
        const double width = kap_ > 0.0 ? std::min(0.5, 2.0 / kap_) : 0.5;
        ends_ = panel_endpoints(t_lo_, t_hi, cuts, width);
        const GaussRule ref = gauss_legendre(liouville_nodes);
        for (std::size_t p = 0; p + 1 < ends_.size(); ++p) {
            const double a = ends_[p];
            const double b = ends_[p + 1];
            for (int i = 0; i < liouville_nodes; ++i) {
                const auto iu = static_cast<std::size_t>(i);
                const double t = 0.5 * (a + b) + 0.5 * (b - a) * ref.nodes[iu];
                t_.push_back(t);
                w_.push_back(0.5 * (b - a) * ref.weights[iu]);
                const double r = std::exp(-t);
                v_.push_back(r * r * q(r));
                e_.push_back(std::exp(-kap_ * t));
                if (kap_ > 0.0) {
                    // Shifted by t_lo so φ1(s) φ2(t) is unchanged but never overflows.
                    phi1_.push_back(std::exp(kap_ * (t - t_lo_)) * (-std::expm1(-2.0 * kap_ * t)) / (2.0 * kap_));
                    phi2_.push_back(std::exp(-kap_ * (t - t_lo_)));
                } else {
                    phi1_.push_back(t);
                    phi2_.push_back(1.0);
                }
            }
        }
    }

    [[nodiscard]] bool empty() const { return t_.empty(); }
    [[nodiscard]] std::size_t size() const { return t_.size(); }

    /// R(κ) f at the nodes.
    [[nodiscard]] std::vector<double> resolvent(const std::vector<double>& f) const
    {
        const int m = liouville_nodes;
        const std::size_t np = ends_.size() - 1;
        const Eigen::MatrixXd& S = gauss_integration_matrix(m);
        std::vector<double> full2(np, 0.0);
        for (std::size_t p = 0; p < np; ++p) {
            for (int i = 0; i < m; ++i) {
                const std::size_t j = p * static_cast<std::size_t>(m) + static_cast<std::size_t>(i);
                full2[p] += w_[j] * phi2_[j] * f[j];
            }
        }
        std::vector<double> after(np + 1, 0.0);
        for (std::size_t p = np; p-- > 0;) {
            after[p] = after[p + 1] + full2[p];
        }
        std::vector<double> out(f.size(), 0.0);
        double before = 0.0;
        Eigen::VectorXd f1(m);
        Eigen::VectorXd f2(m);
        for (std::size_t p = 0; p < np; ++p) {
            const double half = 0.5 * (ends_[p + 1] - ends_[p]);
            const std::size_t base = p * static_cast<std::size_t>(m);
            double full1 = 0.0;
            for (int i = 0; i < m; ++i) {
                const std::size_t j = base + static_cast<std::size_t>(i);
                f1[i] = phi1_[j] * f[j];
                f2[i] = phi2_[j] * f[j];
                full1 += w_[j] * f1[i];
            }
            const Eigen::VectorXd p1 = half * (S * f1);
            const Eigen::VectorXd p2 = half * (S * f2);
            for (int i = 0; i < m; ++i) {
                const std::size_t j = base + static_cast<std::size_t>(i);
                const double a = before + p1[i];
                const double b = after[p + 1] + (full2[p] - p2[i]);
                out[j] = phi2_[j] * a + phi1_[j] * b;
            }
            before += full1;
        }
        return out;
    }

    /// σ_1 ... σ_count in the Liouville discretization.
    [[nodiscard]] std::vector<double> sigmas(int count) const
    {
        std::vector<double> out(static_cast<std::size_t>(count), 0.0);
        if (empty()) {
            return out;
        }
        std::vector<double> g(size());
        for (std::size_t j = 0; j < size(); ++j) {
            g[j] = v_[j] * e_[j];
        }
        for (int n = 1; n <= count; ++n) {
            if (n > 1) {
                const std::vector<double> rg = resolvent(g);
                for (std::size_t j = 0; j < size(); ++j) {
                    g[j] = -v_[j] * rg[j];
                }
            }
            double s = 0.0;
            for (std::size_t j = 0; j < size(); ++j) {
                s += w_[j] * e_[j] * g[j];
            }
            out[static_cast<std::size_t>(n - 1)] = s;
        }
        return out;
    }

    [[nodiscard]] double operator_norm() const
    {
        if (empty()) {
            return 0.0;
        }
        const auto n = static_cast<Eigen::Index>(size());
        Eigen::MatrixXd m(n, n);
        std::vector<double> unit(size(), 0.0);
        for (Eigen::Index c = 0; c < n; ++c) {
            unit[static_cast<std::size_t>(c)] = 1.0;
            const std::vector<double> rc = resolvent(unit);
            unit[static_cast<std::size_t>(c)] = 0.0;
            for (Eigen::Index r = 0; r < n; ++r) {
                const auto ru = static_cast<std::size_t>(r);
                const auto cu = static_cast<std::size_t>(c);
                // W^{1/2} (V R) W^{-1/2}
                m(r, c) = std::sqrt(w_[ru]) * v_[ru] * rc[ru] / std::sqrt(w_[cu]);
            }
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
        return svd.singularValues()[0];
    }

private:
    double kap_ = 0.0;
    double t_lo_ = 0.0;
    double tail_bound_ = 0.0;
    std::vector<double> ends_;
    std::vector<double> t_;
    std::vector<double> w_;
    std::vector<double> v_;
    std::vector<double> e_;
    std::vector<double> phi1_;
    std::vector<double> phi2_;
};

} // namespace

std::vector<double> sigma_terms(const RadialPotential& q, int k, int count)
{
    if (k < 0 || count < 1) {
        throw DomainError("sigma_terms needs k >= 0 and count >= 1");
    }
    std::vector<double> out = LiouvilleGrid(q, k).sigmas(count);
    out[0] = sigma_k1(q, k);
    return out;
}

double sigma_kn(const RadialPotential& q, int k, int n)
{
    if (n < 1) {
        throw DomainError("sigma_kn needs n >= 1");
    }
    return sigma_terms(q, k, n).back();
}

double sigma_kn_bound(const RadialPotential& q, int k, int n)
{
    const int d = q.dimension();
    const double kap = kappa(k, d);
    return std::pow(q.alpha(), 2.0 * (k + n) + d - 2) * std::pow(q.sup_norm(), n) / (2.0 * std::pow(kap, 2 * n - 1));
}

double sigma_k1_bound(const RadialPotential& q, int k)
{
    const int d = q.dimension();
    return std::pow(q.alpha(), d + 2.0 * k) * q.sup_norm() / (2.0 * k + d);
}

double first_order_residual_bound(const RadialPotential& q, int k)
{
    const int d = q.dimension();
    const double kap = kappa(k, d);
    return std::pow(q.alpha(), d + 2.0 + 2.0 * k) * q.sup_norm() * q.sup_norm() / (2.0 * kap * kap * kap);
}

double contraction_bound(const RadialPotential& q, int k)
{
    const double kap = kappa(k, q.dimension());
    return q.alpha() * q.alpha() * q.sup_norm() / (kap * kap);
}

double estimate_resolvent_norm(const RadialPotential& q, int k)
{
    return LiouvilleGrid(q, k).operator_norm();
}

SeriesEigenvalue eigenvalue_series(const RadialPotential& q, int k, int count)
{
    if (count < 1) {
        throw DomainError("series needs at least one term");
    }
    const double rho = contraction_bound(q, k);
    if (!(rho < 1.0)) {
        throw ConvergenceError("contraction bound " + std::to_string(rho) + " >= 1 at k=" + std::to_string(k));
    }
    SeriesEigenvalue out;
    out.terms = sigma_terms(q, k, count);
    out.lambda = k;
    for (double s : out.terms) {
        out.lambda += s;
    }
    // Σ_{n>N} bound_n is geometric with ratio ρ.
    if (q.sup_norm() > 0.0 && q.alpha() > 0.0) {
        out.tail_bound = sigma_kn_bound(q, k, count + 1) / (1.0 - rho);
    }
    return out;
}

DtnSpectrum compute_spectrum(const RadialPotential& q, int kmax, DtnSpectrum::Method method, int series_terms)
{
    if (kmax < 0) {
        throw DomainError("kmax must be non-negative");
    }
    DtnSpectrum s;
    s.method = method;
    s.dimension = q.dimension();
    s.alpha = q.alpha();
    s.sup_norm = q.sup_norm();
    s.eigenvalues.resize(static_cast<std::size_t>(kmax + 1));
    for (int k = 0; k <= kmax; ++k) {
        s.eigenvalues[static_cast<std::size_t>(k)] = method == DtnSpectrum::Method::ode
            ? solve_radial_channel(q, k).lambda
            : eigenvalue_series(q, k, series_terms).lambda;
    }
    return s;
}

RadialMomentTable radial_moment_table(const RadialPotential& q, int kmax, int nmax)
{
    RadialMomentTable t;
    t.dimension = q.dimension();
    for (int k = 0; k <= kmax; ++k) {
        t.kappa.push_back(kappa(k, q.dimension()));
        t.sigma.push_back(sigma_terms(q, k, nmax));
    }
    return t;
}

RadialPotential potential_from_radial_conductivity(const RadialConductivity& gamma, int dimension,
                                                   std::vector<double> breaks)
{
    const int d = dimension;
    auto q0 = [gamma, d](double r) {
        const double g = gamma.gamma(r);
        const double g1 = gamma.dgamma(r);
        const double g2 = gamma.d2gamma(r);
        // s = √γ: s'/s = γ'/(2γ), s''/s = γ''/(2γ) - γ'^2/(4γ^2).
        const double s1 = g1 / (2.0 * g);
        const double s2 = g2 / (2.0 * g) - g1 * g1 / (4.0 * g * g);
        if (r < 1e-8) {
            return d * s2;
        }
        return s2 + (d - 1) / r * s1;
    };
    constexpr int samples = 4000;
    double sup = 0.0;
    double alpha = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double r = static_cast<double>(i) / samples;
        const double g = gamma.gamma(r);
        if (!(g > 0.0)) {
            throw DomainError("conductivity is not positive at r=" + std::to_string(r));
        }
        const double v = std::abs(q0(r));
        sup = std::max(sup, v);
        if (v != 0.0) {
            alpha = std::min(1.0, static_cast<double>(i + 1) / samples);
        }
    }
    return RadialPotential(q0, std::move(breaks), alpha, 1.01 * sup, dimension);
}

std::string to_string(DtnSpectrum::Method m)
{
    return m == DtnSpectrum::Method::ode ? "ode" : "series";
}

} // namespace bc
