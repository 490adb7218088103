#pragma once

#include "born_calderon/quadrature.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bc {

/// Radial potential q(x) = q0(|x|) on the unit ball of R^d.
class RadialPotential {
public:
    using Profile = std::function<double(double)>;

    /// `breaks` lists radii in (0, alpha) where q0 may jump; q0 is taken as 0
    /// for r > alpha and for r < inner_radius.
    RadialPotential(Profile profile, std::vector<double> breaks, double alpha, double sup_norm, int dimension,
                    double inner_radius = 0.0);

    static RadialPotential zero(int dimension = 3);
    static RadialPotential constant_ball(double c, double alpha, int dimension = 3);
    static RadialPotential annulus(double c, double r_inner, double r_outer, int dimension = 3);
    /// values[i] on [breaks[i], breaks[i+1]); breaks[0] >= 0.
    static RadialPotential piecewise_constant(std::vector<double> breaks, std::vector<double> values,
                                              int dimension = 3);
    /// amplitude * exp(-r^2 / width^2) on [0, alpha].
    static RadialPotential gaussian_trunc(double amplitude, double width, double alpha, int dimension = 3);
    /// amplitude * exp(1 - 1/(1 - (r/alpha)^2)) on [0, alpha): smooth, compactly supported.
    static RadialPotential bump(double amplitude, double alpha, int dimension = 3);

    [[nodiscard]] double operator()(double r) const;
    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] double sup_norm() const { return sup_norm_; }
    [[nodiscard]] int dimension() const { return dim_; }
    [[nodiscard]] double inner_radius() const { return inner_; }
    /// Interior jump radii, sorted, strictly inside (inner_radius, alpha).
    [[nodiscard]] const std::vector<double>& breaks() const { return breaks_; }
    /// inner_radius (if > 0), interior breaks and alpha: the radial panel ends.
    [[nodiscard]] std::vector<double> panel_ends() const;

    [[nodiscard]] RadialPotential scaled(double factor) const;
    /// The potential as a function on the 3-ball (requires dimension 3).
    [[nodiscard]] BallFunction as_ball_function() const;

private:
    Profile profile_;
    std::vector<double> breaks_;
    double alpha_;
    double sup_norm_;
    int dim_;
    double inner_;
};

/// κ_d = k + (d-2)/2.
inline double kappa(int k, int d)
{
    return k + 0.5 * (d - 2);
}

struct OdeOptions {
    double start_radius = 1e-6;
    double tolerance = 1e-13;
};

/// Solution of the radial channel equation normalized by b_k(1) = 1.
struct RadialChannelSolution {
    int k = 0;
    double lambda = 0.0;
    std::vector<double> r;
    std::vector<double> b;
    std::vector<double> db;

    /// Cubic Hermite interpolation of the stored samples.
    [[nodiscard]] double b_at(double radius) const;
};

/// λ_k = b_k'(1) for b_k'' + (d-1)/r b_k' - k(k+d-2)/r^2 b_k = q0 b_k, regular at 0.
RadialChannelSolution solve_radial_channel(const RadialPotential& q, int k, const OdeOptions& options = {});

/// σ_{k,1} = ∫_0^1 q0(r) r^{2k+d-1} dr.
double sigma_k1(const RadialPotential& q, int k);
/// σ_{k,2} from the double integral over 0 < s < r < α.
double sigma_k2_direct(const RadialPotential& q, int k);
/// σ_{k,n} by n-1 applications of V R(κ) on the Liouville half-line.
double sigma_kn(const RadialPotential& q, int k, int n);
/// σ_{k,1}, ..., σ_{k,N}.
std::vector<double> sigma_terms(const RadialPotential& q, int k, int count);

/// α^{2(k+n)+d-2} ‖q‖^n / (2 κ^{2n-1}).
double sigma_kn_bound(const RadialPotential& q, int k, int n);
/// α^d ‖q‖ α^{2k} / (2k+d).
double sigma_k1_bound(const RadialPotential& q, int k);
/// α^{d+2} ‖q‖^2 α^{2k} / (2 κ^3).
double first_order_residual_bound(const RadialPotential& q, int k);
/// α^2 ‖q‖ / κ^2, the bound on ‖V R(κ)‖ over L^2([-log α, ∞)).
double contraction_bound(const RadialPotential& q, int k);

/// L^2 operator norm of the discretized V R(κ) (power iteration).
double estimate_resolvent_norm(const RadialPotential& q, int k);

struct SeriesEigenvalue {
    double lambda = 0.0;
    std::vector<double> terms;
    double tail_bound = 0.0;
};

/// k + Σ_{n<=N} σ_{k,n}. Throws ConvergenceError unless contraction_bound < 1.
SeriesEigenvalue eigenvalue_series(const RadialPotential& q, int k, int count = 8);

struct DtnSpectrum {
    enum class Method { ode, series };

    Method method = Method::ode;
    int dimension = 3;
    /// λ_k for k = 0..size-1.
    std::vector<double> eigenvalues;
    std::optional<double> alpha;
    std::optional<double> sup_norm;

    [[nodiscard]] int kmax() const { return static_cast<int>(eigenvalues.size()) - 1; }
};

DtnSpectrum compute_spectrum(const RadialPotential& q, int kmax, DtnSpectrum::Method method, int series_terms = 8);

struct RadialMomentTable {
    int dimension = 3;
    std::vector<double> kappa;
    /// sigma[k][n-1] = σ_{k,n}.
    std::vector<std::vector<double>> sigma;
};

RadialMomentTable radial_moment_table(const RadialPotential& q, int kmax, int nmax);

struct RadialConductivity {
    std::function<double(double)> gamma;
    std::function<double(double)> dgamma;
    std::function<double(double)> d2gamma;
};

/// q0 = s''/s + (d-1)/r s'/s with s = √γ. α is the smallest radius beyond which
/// q is exactly zero on a 4000-point scan; the sup norm is the scanned maximum with a
/// 1% margin. Throws DomainError if γ <= 0 at a sample.
RadialPotential potential_from_radial_conductivity(const RadialConductivity& gamma, int dimension,
                                                   std::vector<double> breaks = {});

std::string to_string(DtnSpectrum::Method m);

} // namespace bc
