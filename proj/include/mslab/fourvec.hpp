#pragma once

#include <array>
#include <cmath>
#include <ostream>

namespace mslab {

/// Minkowski 4-vector with signature (+,-,-,-). Components are contravariant.
struct FourVector {
    double t = 0.0, x = 0.0, y = 0.0, z = 0.0;

    constexpr FourVector() = default;
    constexpr FourVector(double t_, double x_, double y_, double z_)
        : t(t_), x(x_), y(y_), z(z_) {}

    double operator[](int mu) const {
        switch (mu) {
            case 0: return t;
            case 1: return x;
            case 2: return y;
            default: return z;
        }
    }
    double& operator[](int mu) {
        switch (mu) {
            case 0: return t;
            case 1: return x;
            case 2: return y;
            default: return z;
        }
    }

    FourVector operator+(const FourVector& o) const { return {t + o.t, x + o.x, y + o.y, z + o.z}; }
    FourVector operator-(const FourVector& o) const { return {t - o.t, x - o.x, y - o.y, z - o.z}; }
    FourVector operator-() const { return {-t, -x, -y, -z}; }
    FourVector operator*(double c) const { return {c * t, c * x, c * y, c * z}; }

    double spatial_norm2() const { return x * x + y * y + z * z; }
    double spatial_norm() const { return std::sqrt(spatial_norm2()); }
    double euclid_norm2() const { return t * t + spatial_norm2(); }
};

inline FourVector operator*(double c, const FourVector& v) { return v * c; }

/// Minkowski product v.w = v0 w0 - v.w (signature (+,-,-,-)).
inline double minkowski_dot(const FourVector& v, const FourVector& w) {
    return v.t * w.t - v.x * w.x - v.y * w.y - v.z * w.z;
}

inline double minkowski_square(const FourVector& v) { return minkowski_dot(v, v); }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double c) const { return {c * x, c * y, c * z}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
};

inline Vec3 operator*(double c, const Vec3& v) { return v * c; }

inline Vec3 spatial(const FourVector& v) { return {v.x, v.y, v.z}; }
inline FourVector with_energy(double e, const Vec3& p) { return {e, p.x, p.y, p.z}; }

inline std::ostream& operator<<(std::ostream& os, const FourVector& v) {
    return os << '(' << v.t << ',' << v.x << ',' << v.y << ',' << v.z << ')';
}

}  // namespace mslab
