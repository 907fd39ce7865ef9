#pragma once

#include <cmath>

namespace hrc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr double operator[](int axis) const { return axis == 0 ? x : y; }
    constexpr double& operator[](int axis) { return axis == 0 ? x : y; }

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

    double norm() const { return std::hypot(x, y); }
    constexpr double squared_norm() const { return x * x + y * y; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline bool finite(const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); }

}  // namespace hrc
