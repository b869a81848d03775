#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace latwave {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Wrap an angle to [0, 2*pi).
inline double wrap_2pi(double a) {
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

/// Wrap an angle difference to (-pi, pi].
inline double wrap_pm_pi(double a) {
    double r = std::fmod(a, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    else if (r > std::numbers::pi) r -= two_pi;
    return r;
}

/// Circular distance between two angles.
inline double circular_distance(double a, double b) {
    return std::abs(wrap_pm_pi(a - b));
}

/// Counterclockwise rotation matrix R_theta.
inline Mat2 rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat2 r;
    r << c, -s, s, c;
    return r;
}

/// J = R_{-pi/2}: (x, y) -> (y, -x).  J^2 = -I, J^4 = I.
inline Vec2 apply_j(const Vec2& v) {
    return Vec2(v.y(), -v.x());
}

/// Planar rotation-translation (theta, p) acting as z -> R_theta z + p.
/// theta is normalized to [0, 2*pi) at construction.
struct SE2Element {
    double theta = 0.0;
    Vec2 p = Vec2::Zero();

    SE2Element() = default;
    SE2Element(double theta_, const Vec2& p_) : theta(wrap_2pi(theta_)), p(p_) {}

    static SE2Element identity() { return {}; }
};

/// Semi-direct product: (theta2, p2)*(theta1, p1) = (theta1+theta2, R_theta2 p1 + p2).
inline SE2Element compose(const SE2Element& g2, const SE2Element& g1) {
    return SE2Element(g1.theta + g2.theta, rotation(g2.theta) * g1.p + g2.p);
}

inline SE2Element inverse(const SE2Element& g) {
    return SE2Element(-g.theta, -(rotation(-g.theta) * g.p));
}

inline Vec2 act_on_point(const SE2Element& g, const Vec2& z) {
    return rotation(g.theta) * z + g.p;
}

/// Square lattice {origin + spacing*(m, n)}.
struct LatticeSpec {
    double spacing = 1.0;
    Vec2 origin = Vec2::Zero();

    LatticeSpec() = default;
    LatticeSpec(double spacing_, const Vec2& origin_ = Vec2::Zero())
        : spacing(spacing_), origin(origin_) {
        if (!(spacing > 0.0)) throw std::invalid_argument("lattice spacing must be > 0");
    }
};

struct LatticePoint {
    Vec2 point = Vec2::Zero();
    double distance = 0.0;
    Eigen::Vector2i index = Eigen::Vector2i::Zero();
};

/// Closest lattice point to z; ties broken toward the lexicographically
/// smaller integer index (m, n).
inline LatticePoint nearest_lattice_point(const LatticeSpec& lattice, const Vec2& z) {
    const Vec2 q = (z - lattice.origin) / lattice.spacing;
    LatticePoint best;
    bool have = false;
    for (int dm = 0; dm <= 1; ++dm) {
        for (int dn = 0; dn <= 1; ++dn) {
            const int m = static_cast<int>(std::floor(q.x())) + dm;
            const int n = static_cast<int>(std::floor(q.y())) + dn;
            const Vec2 pt = lattice.origin + lattice.spacing * Vec2(m, n);
            const double d = (z - pt).norm();
            const bool better = !have || d < best.distance ||
                (d == best.distance && (m < best.index.x() ||
                                        (m == best.index.x() && n < best.index.y())));
            if (better) {
                best = {pt, d, Eigen::Vector2i(m, n)};
                have = true;
            }
        }
    }
    return best;
}

}  // namespace latwave
