// Planar vector type shared by all airflow modules.
#pragma once

#include <cmath>
#include <numbers>

namespace airflow {

/// Point or vector on the floor plane, in meters (or m/s for velocities).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 &operator+=(const Vec2 &o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr Vec2 &operator-=(const Vec2 &o) {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    friend constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
    friend constexpr Vec2 operator*(double k, const Vec2 &v) { return {k * v.x, k * v.y}; }
    friend constexpr Vec2 operator*(const Vec2 &v, double k) { return {k * v.x, k * v.y}; }
    friend constexpr bool operator==(const Vec2 &, const Vec2 &) = default;
};

inline double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2 &v) { return std::hypot(v.x, v.y); }
inline double distance(const Vec2 &a, const Vec2 &b) { return norm(a - b); }

/// Unit vector at bearing `rad` (counter-clockwise from +x).
inline Vec2 unit_from_angle(double rad) { return {std::cos(rad), std::sin(rad)}; }

/// Rotates `v` counter-clockwise by `rad`.
inline Vec2 rotate(const Vec2 &v, double rad) {
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle in degrees into [-180, 180).
inline double wrap_deg(double deg) {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) w += 360.0;
    return w - 180.0;
}

} // namespace airflow
