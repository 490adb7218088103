#pragma once

#include "born_calderon/dtn3d.hpp"
#include "born_calderon/specfun.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bc {

/// Support radius and sup norm used for a-priori tail bounds.
struct TailModel {
    double alpha = 1.0;
    double sup_norm = 0.0;
};

struct BornEvaluation {
    Vec3 xi = Vec3::Zero();
    cplx value = 0.0;
    int kmax = 0;
    /// |(-i)^{l+k} μ_{k,l} |ξ|^{l+k} entry(k, l)|.
    TriangularTable term_magnitudes;
    /// Sums along the diagonals l + k = const, index l + k.
    std::vector<cplx> diagonal_sums;
    /// Bound on the omitted terms (l > kmax) when a tail model is supplied.
    std::optional<double> tail_bound;
    /// Largest term with l = kmax exceeds 1e-12 of |value|.
    bool truncation_warning = false;
};

/// Σ_{k<=l<=K} (-i)^{l+k} μ_{k,l} s^{l+k} entry(k, l), accumulated along diagonals.
BornEvaluation born_series_3d(const TriangularTable& entries, const Vec3& omega, const Vec3& xi, int kmax = -1,
                              std::optional<TailModel> tail = std::nullopt);

/// Averaged Born transform from a matrix element table (entries λ_{k,l;ω} - k δ_{k,l}).
/// Requires table.omega = ξ/|ξ| (any table for ξ = 0).
BornEvaluation averaged_born_hat(const MatrixElementTable& table, const Vec3& xi, int kmax = -1,
                                 std::optional<TailModel> tail = std::nullopt);

/// Fourier transform from the moment table, same series.
BornEvaluation fourier_via_moments_3d(const MomentTable3D& moments, const Vec3& xi, int kmax = -1,
                                      std::optional<TailModel> tail = std::nullopt);

/// Σ_{l>K} Σ_{k<=l} μ_{k,l} s^{l+k} ‖q‖ α^{k+l+3}/(k+l+3): the moment-series tail.
double moment_series_tail(const TailModel& model, double s, int kmax);

struct KmaxChoice {
    int kmax = 0;
    double tail = 0.0;
    /// The cap was reached before the tail fell below the tolerance.
    bool capped = false;
};

/// Smallest K with moment_series_tail < tolerance, capped.
KmaxChoice select_kmax(const TailModel& model, double s, double tolerance, int cap = 60);

/// ζ̃1 = -e1 - i sqrt(1 - h²s²) e2 - i h s e3, ζ̃2 = e1 + i e2. Requires h s < 1.
std::pair<CVec3, CVec3> zeta_pair_e3(double s, double h);

/// ζ1 = -η1 - i sqrt(1 - h²s²) η2 - i h s ω, ζ2 = η1 + i η2 for a frame {η1, η2, ω}.
std::pair<CVec3, CVec3> zeta_pair_frame(const Frame& frame, double s, double h);

/// ∫ (ζ̃1·x)^l Y_{l,k}(x) dS by a sphere rule exact in degree 2l. Requires h s < 1.
cplx taylor_angular_coeff(int k, int ell, double h, double s);

/// (-1)^l i^{l+k} c_l^{1/2} sqrt((2l)!/((l+k)!(l-k)!)) (s/2)^{l+k}: the h^{l+k} coefficient.
cplx taylor_angular_limit(int k, int ell, double s);

/// ⟨e_{ζ̃1/h}, A e_{ζ̃2/h}⟩ for the operator with A Y_{k,k} = Σ_l γ(k, l) Y_{l,k}
/// (k <= K_A) that commutes with L3. Only the degree-l term of e_{ζ̃1/h}
/// pairs with Y_{l,k}, so the expansion is exact at order K_A.
cplx scattering_pairing(const TriangularTable& gamma, double s, double h);

/// Σ_{k<=l<=K_A} (-i)^{l+k} μ_{k,l} s^{l+k} γ(k, l), the h -> 0 limit of the pairing.
cplx scattering_pairing_limit(const TriangularTable& gamma, double s);

/// Samples of q̂ on the cube grid ξ = spacing (i, j, l), |i|,|j|,|l| <= n,
/// flattened with i slowest; entries with |ξ| > band_limit are ignored.
struct FourierGrid {
    double spacing = 1.0;
    int n = 0;
    double band_limit = 0.0;
    std::vector<cplx> values;

    [[nodiscard]] Vec3 node(int i, int j, int l) const { return spacing * Vec3(i, j, l); }
    [[nodiscard]] std::size_t index(int i, int j, int l) const;
};

/// Fills a grid from a transform q̂(ξ).
FourierGrid sample_fourier_grid(const std::function<cplx(const Vec3&)>& qhat, double spacing, double band_limit);

struct Reconstruction3D {
    std::vector<Vec3> points;
    std::vector<cplx> values;
    /// max |Im q| over the points.
    double max_imag = 0.0;
    std::vector<std::string> warnings;
};

/// (2π)^{-3} Σ_{|ξ|<=Ξ} q̂(ξ) e^{i x·ξ} spacing³ at each point.
Reconstruction3D reconstruct_3d(const FourierGrid& grid, std::span<const Vec3> points);

} // namespace bc
