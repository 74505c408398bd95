#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivem {

using Index = std::int64_t;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Error categories. Callers can catch ivem::Error for all of them.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidArgument : Error {
    using Error::Error;
};
struct DegenerateGeometry : Error {
    using Error::Error;
};
struct TopologyError : Error {
    using Error::Error;
};
struct ConformityError : Error {
    using Error::Error;
};
struct SolverError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

struct Box {
    Vec3 lo = Vec3::Constant(-1.0);
    Vec3 hi = Vec3::Constant(1.0);
    double volume() const { return (hi - lo).prod(); }
    bool contains(const Vec3& x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }
};

inline double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

inline double tri_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

// Largest interior angle of a triangle, radians.
inline double tri_max_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
    auto ang = [](const Vec3& p, const Vec3& q, const Vec3& r) {
        Vec3 u = q - p, v = r - p;
        return std::atan2(u.cross(v).norm(), u.dot(v));
    };
    return std::max({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

} // namespace ivem
