#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace mshot {

/// Image-plane point. Pixel (row r, column c) has its center at x = c, y = r.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point2 a, Point2 b) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double squared_norm(Point2 p) { return p.x * p.x + p.y * p.y; }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline double angle_of(Point2 p) { return std::atan2(p.y, p.x); }

inline Point2 rotate(Point2 p, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

inline Point2 polar(double radius, double theta) {
    return {radius * std::cos(theta), radius * std::sin(theta)};
}

inline Point2 centroid(std::span<const Point2> pts) {
    Point2 sum;
    for (const auto& p : pts) sum = sum + p;
    const double n = static_cast<double>(pts.size());
    return {sum.x / n, sum.y / n};
}

/// Wraps into (-pi, pi].
inline double wrap_pi(double a) {
    constexpr double pi = std::numbers::pi;
    a = std::remainder(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

/// Wraps into (-pi/2, pi/2]; orientations are only defined modulo pi.
inline double wrap_half_pi(double a) {
    constexpr double pi = std::numbers::pi;
    a = std::remainder(a, pi);
    if (a <= -pi / 2) a += pi;
    return a;
}

}  // namespace mshot
