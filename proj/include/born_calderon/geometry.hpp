#pragma once

#include <Eigen/Dense>
#include <complex>

namespace bc {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Polar angle and azimuth of a nonzero vector, north pole e3.
struct SphericalAngles {
    double theta;
    double phi;
};

inline SphericalAngles to_angles(const Vec3& x)
{
    const double rho = std::hypot(x.x(), x.y());
    double phi = std::atan2(x.y(), x.x());
    if (phi < 0) {
        phi += 2 * pi;
    }
    return {std::atan2(rho, x.z()), phi};
}

inline Vec3 from_angles(double theta, double phi)
{
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

/// Right-handed rotation by `angle` about the unit vector `axis`.
inline Mat3 axis_rotation(const Vec3& axis, double angle)
{
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

} // namespace bc
