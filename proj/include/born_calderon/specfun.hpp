#pragma once

#include "born_calderon/geometry.hpp"

#include <vector>

namespace bc {

/// Degree and order of a spherical harmonic; |m| <= ell.
struct SphericalIndex {
    int ell = 0;
    int m = 0;

    /// Throws DomainError unless ell >= 0 and |m| <= ell.
    void validate() const;
    /// Position of (ell, m) in the flat ordering ell*ell + ell + m.
    [[nodiscard]] int flat() const { return ell * ell + ell + m; }

    friend bool operator==(const SphericalIndex&, const SphericalIndex&) = default;
};

inline int sh_count(int lmax) { return (lmax + 1) * (lmax + 1); }

// ---------------------------------------------------------------------------
// Factorials and Gamma in log space.

/// log(n!) from a table built once (n <= 1000) and lgamma beyond.
double log_factorial(int n);
/// log Γ(x) for x > 0; reentrant.
double log_gamma(double x);

// ---------------------------------------------------------------------------
// Legendre functions.

/// P_ell(t) by the three-term recurrence. Throws DomainError for |t| > 1.
double legendre(int ell, double t);

/// P_ell^m(t) = (1-t^2)^{m/2} d^m/dt^m P_ell(t) for m >= 0 (no Condon-Shortley
/// phase; the phase lives in the spherical harmonic). Negative orders use
/// P_ell^{-m} = (-1)^m (ell-m)!/(ell+m)! P_ell^m.
double assoc_legendre(int ell, int m, double t);

/// sqrt((2l+1)/(4π) (l-m)!/(l+m)!) P_l^m(t) for 0 <= m <= l, stable for large l.
double normalized_assoc_legendre(int ell, int m, double t);

// ---------------------------------------------------------------------------
// Spherical harmonics (Condon-Shortley phase, orthonormal on S^2).

cplx sph_harm(SphericalIndex idx, double theta, double phi);
/// Y at the direction of a nonzero vector.
cplx sph_harm(SphericalIndex idx, const Vec3& x);

/// All Y_{l,m}, l <= lmax, at the direction of x, in flat ordering.
void sph_harm_all(int lmax, const Vec3& x, std::vector<cplx>& out);
std::vector<cplx> sph_harm_all(int lmax, const Vec3& x);

/// Orthonormal frame adapted to a direction ω: a proper rotation P with P ω = e3.
class Frame {
public:
    /// Deterministic frame: rotation by arccos(ω·e3) about ω×e3, identity for
    /// ω = e3 and a half turn about e1 for ω = -e3.
    static Frame from_direction(const Vec3& omega);
    /// Validates orthogonality and det = +1 to 1e-12; ω = Pᵀ e3.
    static Frame from_rotation(const Mat3& rotation);

    /// Another admissible frame for the same ω: P' = R_z(t) P.
    [[nodiscard]] Frame twisted(double t) const;

    [[nodiscard]] const Vec3& omega() const { return omega_; }
    [[nodiscard]] const Mat3& rotation() const { return rotation_; }
    /// η1 = Pᵀ e1, η2 = Pᵀ e2; {η1, η2, ω} is positively oriented.
    [[nodiscard]] Vec3 eta1() const { return rotation_.row(0).transpose(); }
    [[nodiscard]] Vec3 eta2() const { return rotation_.row(1).transpose(); }

private:
    Frame(const Vec3& omega, const Mat3& rotation) : omega_(omega), rotation_(rotation) {}

    Vec3 omega_;
    Mat3 rotation_;
};

/// Y^ω_{l,m}(x) = Y_{l,m}(P x).
cplx sph_harm_rotated(SphericalIndex idx, const Frame& frame, const Vec3& x);

enum class Ladder { raise, lower };

/// Coefficient of L± Y_{l,m} = c Y_{l,m±1}; zero when the result leaves the band.
double ladder_coeff(Ladder direction, int ell, int m);

// ---------------------------------------------------------------------------
// Constants of the exponential-pairing formulas.

/// log c_k with c_k = 2 π^{d/2} k! / Γ(k + d/2).
double log_c_k(int k, int d);
/// Throws OverflowError if c_k is not representable.
double c_k(int k, int d);

/// log μ_{k,l} with μ_{k,l} = 4π / sqrt((2k+1)(2l+1)) / sqrt((2k)! (l-k)! (k+l)!).
double log_mu_kl(int k, int ell);
double mu_kl(int k, int ell);

// ---------------------------------------------------------------------------
// Bessel functions by their power series.

/// J_ν(t) for ν >= 0, t >= 0. Throws AccuracyError if the certified tail
/// does not drop below 1e-16 of the sum within max_terms.
double bessel_j(double nu, double t, int max_terms = 600);
/// j_n(t) = sqrt(π/2t) J_{n+1/2}(t), evaluated from its own series.
double spherical_bessel_j(int n, double t, int max_terms = 600);

// ---------------------------------------------------------------------------

/// Complex vector on the null variety {ζ : ζ·ζ = 0, ζ ≠ 0}.
class ZetaVector {
public:
    /// Validates ζ·ζ = 0 to `tol` relative to |ζ|^2.
    explicit ZetaVector(const CVec3& v, double tol = 1e-12);
    /// ζ = scale (a + i b) for orthonormal a, b.
    static ZetaVector from_orthonormal(const Vec3& a, const Vec3& b, double scale = 1.0);

    [[nodiscard]] const CVec3& vector() const { return v_; }
    /// |ζ| (Hermitian norm).
    [[nodiscard]] double norm() const { return v_.norm(); }
    /// Unconjugated bilinear product.
    [[nodiscard]] cplx dot(const ZetaVector& other) const;
    [[nodiscard]] cplx dot(const Vec3& x) const;

private:
    CVec3 v_;
};

/// Unconjugated bilinear product on C^3.
inline cplx bilinear(const CVec3& a, const CVec3& b)
{
    return a.x() * b.x() + a.y() * b.y() + a.z() * b.z();
}

} // namespace bc
