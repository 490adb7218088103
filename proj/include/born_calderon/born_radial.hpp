#pragma once

#include "born_calderon/radial_dtn.hpp"
#include "born_calderon/specfun.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bc {

/// A truncated series value with its diagnostics.
struct SeriesValue {
    double value = 0.0;
    /// Magnitude of the last included term.
    double last_term = 0.0;
    /// Estimated magnitude of the omitted terms (0 if no estimate is available).
    double tail_estimate = 0.0;
    int kmax = 0;
    /// Last term exceeds 1e-12 of the running sum in magnitude.
    bool truncation_warning = false;
};

/// log |a_k| for a_k = 2 π^{d/2} (-1)^k (s/2)^{2k} / (k! Γ(k+d/2)).
long double log_born_coefficient(int k, double s, int d);
/// a_k with its sign.
long double born_coefficient(int k, double s, int d);

/// q̂_exp(s) = Σ_{k<=kmax} a_k (λ_k - k). kmax < 0 uses the whole spectrum.
SeriesValue born_hat_radial(const DtnSpectrum& spectrum, double s, int kmax = -1);

/// q̂(s) = Σ_{k<=kmax} a_k σ_{k,1}, with sigma1[k] = σ_{k,1}.
SeriesValue fourier_from_moments(std::span<const double> sigma1, double s, int dimension, int kmax = -1);

/// Σ_k a_k (λ_k - k - σ_{k,1}), i.e. q̂_exp - q̂ term by term.
SeriesValue born_minus_fourier(const DtnSpectrum& spectrum, std::span<const double> sigma1, double s, int kmax = -1);

struct ZetaPair {
    CVec3 zeta1;
    CVec3 zeta2;
    /// ζ1·ζ2, kept in closed form when the constructor knows it.
    cplx product;
};

/// Pair with the product evaluated numerically.
ZetaPair zeta_pair(const CVec3& zeta1, const CVec3& zeta2);

/// ζ1 = c η1 + i(η2 - (hs/2) ω), ζ2 = -c η1 - i(η2 + (hs/2) ω), c = sqrt(1 + h²s²/4):
/// both in the null variety and ζ1 + ζ2 = -i h s ω exactly, with ζ1·ζ2 = -h²s²/2. Requires h s < 2.
ZetaPair exact_zeta_pair(const Frame& frame, double s, double h);

/// ⟨e_{ζ1/h}, (Λ_q - Λ_0) e_{ζ2/h}⟩ for a radial q, summed over degrees:
/// Σ_k c_k (λ_k - k) / (k!)² (ζ1·ζ2 / (2h²))^k.
cplx scattering_transform(const DtnSpectrum& spectrum, const ZetaPair& zeta, double h, int kmax = -1);

/// The pairing above along e3 with the exact pair; real for a radial q.
double scattering_transform_radial(const DtnSpectrum& spectrum, double s, double h, int kmax = -1);

/// (4π/s) ∫ q0(r) r sin(sr) dr, the Fourier transform of a radial q in R^3.
double radial_fourier_transform(const RadialPotential& q, double s);

struct RadialReconstruction {
    std::vector<double> r;
    std::vector<double> q;
    double band_limit = 0.0;
    std::vector<std::string> warnings;
};

/// Band-limited inverse (1/(2π² r)) ∫_0^Ξ s sin(sr) q̂(s) ds (d = 3) at each radius.
RadialReconstruction reconstruct_radial(const std::function<double(double)>& born_hat, double band_limit,
                                        std::span<const double> r_grid);

/// Same, from samples values[i] = q̂(i ds), interpolated by a cubic B-spline.
RadialReconstruction reconstruct_radial(std::span<const double> values, double ds, double band_limit,
                                        std::span<const double> r_grid);

} // namespace bc
