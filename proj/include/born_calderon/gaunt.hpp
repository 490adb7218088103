#pragma once

#include "born_calderon/geometry.hpp"

#include <vector>

namespace bc {

/// Clebsch-Gordan coefficient C(ell k n; k -k). Zero outside the triangle
/// |ell-k| <= n <= ell+k or when ell < k.
double cg_km(int ell, int k, int n);

/// Clebsch-Gordan coefficient C(ell k n; 0 0). Zero outside the triangle or
/// when ell+k+n is odd.
double cg_00(int ell, int k, int n);

/// ∫ conj(Y_{l,m}) Y_{l1,m1} Y_{l2,m2} dS by a sphere rule exact at degree l1+l2+l.
double gaunt_numeric(int l1, int m1, int l2, int m2, int l, int m);

struct ProductTerm {
    int n = 0;
    double coeff = 0.0;
};

/// conj(Y_{ell,k}) Y_{k,k} = Σ coeff_n P_n(x·e3).
struct ProductExpansion {
    int k = 0;
    int ell = 0;
    std::vector<ProductTerm> terms;

    [[nodiscard]] double evaluate(const Vec3& unit_x) const;
};

ProductExpansion product_expansion(int k, int ell);

/// Gaunt integrals ∫ conj(Y_{l,n}) Y_{λ,μ} Y_{l',n'} dS for l, l' <= channel_degree
/// and λ <= potential_degree, computed once by quadrature and read-only after.
class GauntTable {
public:
    GauntTable(int channel_degree, int potential_degree);

    /// Zero whenever n != μ + n' or a selection rule fails.
    [[nodiscard]] double operator()(int l, int n, int lambda, int mu, int lp, int np) const;

    [[nodiscard]] int channel_degree() const { return lc_; }
    [[nodiscard]] int potential_degree() const { return lq_; }

private:
    [[nodiscard]] std::size_t slot(int l, int n, int lambda, int mu, int lp) const;

    int lc_;
    int lq_;
    std::vector<double> values_;
};

} // namespace bc
