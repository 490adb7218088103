#pragma once

#include "born_calderon/dtn3d.hpp"

#include <cmath>
#include <complex>

// Non-radial test potentials shared by the unit and acceptance tests.

// 1_{B_alpha}(x) (1 + Re Y_{1,1}(x/|x|)).
inline bc::PotentialSH indicator_re_y11(double alpha = 0.8)
{
    using bc::cplx;
    const double sup = 1.0 + std::sqrt(3.0 / (8.0 * bc::pi));
    return bc::PotentialSH::from_profiles(1,
                                          {{{0, 0}, [](double) { return cplx(2.0 * std::sqrt(bc::pi), 0.0); }},
                                           {{1, 1}, [](double) { return cplx(0.5, 0.0); }},
                                           {{1, -1}, [](double) { return cplx(-0.5, 0.0); }}},
                                          alpha, sup);
}

// Smooth real potential with every degree up to `degree`:
// q_{l,m}(r) = a_{l,m} (1 - (r/alpha)^2)^2 with q_{l,-m} = (-1)^m conj(q_{l,m}).
inline bc::PotentialSH smooth_mixed(int degree = 3, double amplitude = 1.0, double alpha = 0.8)
{
    using bc::cplx;
    std::vector<std::pair<bc::SphericalIndex, bc::PotentialSH::Basis>> profiles;
    double sup = 0.0;
    for (int l = 0; l <= degree; ++l) {
        for (int m = 0; m <= l; ++m) {
            const cplx a = (l == 0 ? 2.0 * std::sqrt(bc::pi) : 0.6 / (l + 1)) * amplitude
                * std::polar(1.0, 0.7 * l + 1.3 * m);
            sup += std::abs(a) * std::sqrt((2 * l + 1) / (4 * bc::pi)) * (m == 0 ? 1.0 : 2.0);
            const auto shape = [alpha](double r) {
                const double t = 1.0 - (r / alpha) * (r / alpha);
                return t > 0.0 ? t * t : 0.0;
            };
            const cplx a0 = m == 0 ? cplx(a.real(), 0.0) : a;
            profiles.push_back({{l, m}, [a0, shape](double r) { return a0 * shape(r); }});
            if (m > 0) {
                const cplx b = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(a0);
                profiles.push_back({{l, -m}, [b, shape](double r) { return b * shape(r); }});
            }
        }
    }
    return bc::PotentialSH::from_profiles(degree, profiles, alpha, sup);
}
