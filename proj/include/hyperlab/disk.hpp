#pragma once

// Poincare disk model of the hyperbolic plane (curvature -1).
//
// Isometries are SU(1,1) matrices [[a, b], [conj(b), conj(a)]] acting by
// z -> (a z + b) / (conj(b) z + conj(a)). The base point is the origin.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <utility>

#include "hyperlab/error.hpp"

namespace hyperlab::disk {

using Complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline double canonical_angle(double theta) {
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    if (t >= two_pi) t -= two_pi;
    return t;
}

// Unsigned angular separation in [0, pi].
inline double angle_gap(double a, double b) {
    double d = std::fabs(canonical_angle(a) - canonical_angle(b));
    return d > pi ? two_pi - d : d;
}

// Signed offset b - a folded into (-pi, pi].
inline double signed_gap(double a, double b) {
    double d = canonical_angle(b - a);
    return d > pi ? d - two_pi : d;
}

class BoundaryPoint {
public:
    BoundaryPoint() = default;
    explicit BoundaryPoint(double theta) : theta_(canonical_angle(theta)) {}

    static BoundaryPoint from_complex(Complex w) { return BoundaryPoint(std::arg(w)); }

    double angle() const { return theta_; }
    Complex unit() const { return std::polar(1.0, theta_); }

    friend bool operator==(const BoundaryPoint&, const BoundaryPoint&) = default;

private:
    double theta_ = 0.0;
};

class ModelPoint {
public:
    ModelPoint() = default;
    explicit ModelPoint(Complex z) : z_(z) {
        if (!(std::abs(z_) < 1.0 - limits::disk_guard))
            geometry_error("disk point outside the numeric guard |z| < 1 - 1e-12");
    }
    ModelPoint(double x, double y) : ModelPoint(Complex(x, y)) {}

    // Point at hyperbolic distance rho from the origin in direction theta.
    static ModelPoint from_polar(double rho, double theta) {
        return ModelPoint(std::polar(std::tanh(0.5 * rho), theta));
    }

    Complex z() const { return z_; }
    double radius() const { return 2.0 * std::atanh(std::abs(z_)); }
    double direction() const { return canonical_angle(std::arg(z_)); }

private:
    Complex z_{0.0, 0.0};
};

inline double distance(const ModelPoint& p, const ModelPoint& q) {
    const Complex zp = p.z(), zq = q.z();
    const double ap = std::abs(zp), aq = std::abs(zq);
    const double den = std::sqrt((1.0 - ap) * (1.0 + ap) * (1.0 - aq) * (1.0 + aq));
    return 2.0 * std::asinh(std::abs(zp - zq) / den);
}

// Orientation-preserving isometry in SU(1,1) form.
class Isometry {
public:
    Isometry() = default;

    // Entries must satisfy |a|^2 - |b|^2 = 1 within the determinant tolerance.
    Isometry(Complex a, Complex b) : a_(a), b_(b) {
        const double det = std::norm(a_) - std::norm(b_);
        if (!(std::fabs(det - 1.0) < limits::det_tol * std::max(1.0, std::norm(a_)))) {
            std::ostringstream os;
            os << "isometry determinant " << det << " differs from 1";
            geometry_error(os.str());
        }
        normalize();
    }

    static Isometry identity() { return raw(Complex(1.0, 0.0), Complex(0.0, 0.0)); }

    // Rotation about the origin by phi.
    static Isometry rotation(double phi) {
        return raw(std::polar(1.0, 0.5 * phi), Complex(0.0, 0.0));
    }

    // Hyperbolic translation by `length` along the diameter pointing in direction theta.
    static Isometry translation(double length, double theta) {
        return raw(Complex(std::cosh(0.5 * length), 0.0), std::polar(std::sinh(0.5 * length), theta));
    }

    // The isometry sending 0 to p that is a pure translation.
    static Isometry moving_origin_to(const ModelPoint& p) {
        const Complex z = p.z();
        const double s = 1.0 / std::sqrt(1.0 - std::norm(z));
        return raw(Complex(s, 0.0), z * s);
    }

    Complex a() const { return a_; }
    Complex b() const { return b_; }
    double det() const { return std::norm(a_) - std::norm(b_); }
    double trace() const { return 2.0 * a_.real(); }
    bool is_hyperbolic(double margin = 1e-6) const { return std::fabs(trace()) > 2.0 + margin; }

    // rho(0, g 0); sinh(rho/2) = |b| is the stable form.
    double displacement() const { return 2.0 * std::asinh(std::abs(b_)); }
    double cosh_displacement() const { return 2.0 * std::norm(a_) - 1.0; }

    // Boundary direction of g 0 (arg of b / conj(a)).
    double orbit_direction() const { return canonical_angle(std::arg(a_ * b_)); }

    double translation_length() const {
        const double t = std::fabs(a_.real());
        return t > 1.0 ? 2.0 * std::acosh(t) : 0.0;
    }

    Isometry inverse() const { return raw(std::conj(a_), -b_); }

    friend Isometry operator*(const Isometry& g, const Isometry& h) {
        return raw(g.a_ * h.a_ + g.b_ * std::conj(h.b_), g.a_ * h.b_ + g.b_ * std::conj(h.a_));
    }

    Complex apply(Complex z) const {
        return (a_ * z + b_) / (std::conj(b_) * z + std::conj(a_));
    }
    ModelPoint apply(const ModelPoint& p) const { return ModelPoint(apply(p.z())); }
    BoundaryPoint apply(const BoundaryPoint& xi) const {
        return BoundaryPoint::from_complex(apply(xi.unit()));
    }

    // Attracting / repelling boundary fixed points of a hyperbolic element.
    std::pair<BoundaryPoint, BoundaryPoint> fixed_points() const {
        if (!is_hyperbolic(0.0)) geometry_error("fixed_points: element is not hyperbolic");
        // conj(b) z^2 + (conj(a) - a) z - b = 0
        const Complex qa = std::conj(b_), qb = std::conj(a_) - a_, qc = -b_;
        const Complex disc = std::sqrt(qb * qb - 4.0 * qa * qc);
        const Complex r1 = (-qb + disc) / (2.0 * qa), r2 = (-qb - disc) / (2.0 * qa);
        // Attracting point: |derivative| < 1, derivative = 1 / (conj(b) z + conj(a))^2.
        const double d1 = std::abs(std::conj(b_) * r1 + std::conj(a_));
        const auto p1 = BoundaryPoint::from_complex(r1), p2 = BoundaryPoint::from_complex(r2);
        return d1 > 1.0 ? std::pair{p1, p2} : std::pair{p2, p1};
    }

    // Max-entry distance used for deduplication.
    double entry_distance(const Isometry& o) const {
        return std::max(std::abs(a_ - o.a_), std::abs(b_ - o.b_));
    }

private:
    static Isometry raw(Complex a, Complex b) {
        Isometry g;
        g.a_ = a;
        g.b_ = b;
        g.normalize();
        return g;
    }

    // Kill the +-1 ambiguity: arg(a) in (-pi/2, pi/2]. a never vanishes in SU(1,1).
    void normalize() {
        if (a_.real() < 0.0 || (a_.real() == 0.0 && a_.imag() <= 0.0)) {
            a_ = -a_;
            b_ = -b_;
        }
    }

    Complex a_{1.0, 0.0};
    Complex b_{0.0, 0.0};
};

// Gromov product of two boundary points seen from x.
inline double gromov_product(const BoundaryPoint& xi, const BoundaryPoint& eta,
                             const ModelPoint& x = ModelPoint()) {
    const Isometry to_origin = Isometry::moving_origin_to(x).inverse();
    const double gap = angle_gap(to_origin.apply(xi).angle(), to_origin.apply(eta).angle());
    if (gap == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(std::sin(0.5 * gap));
}

// Visual metric d_x(xi, eta) = exp(-(xi|eta)_x); equals sin(gap / 2) from the origin.
inline double visual_distance(const BoundaryPoint& xi, const BoundaryPoint& eta,
                              const ModelPoint& x = ModelPoint()) {
    const Isometry to_origin = Isometry::moving_origin_to(x).inverse();
    return std::sin(0.5 * angle_gap(to_origin.apply(xi).angle(), to_origin.apply(eta).angle()));
}

// Angular half-width of the visual ball of radius r about a boundary point (base 0).
inline double visual_radius_to_angle(double r) { return r >= 1.0 ? pi : 2.0 * std::asin(r); }
inline double angle_to_visual_radius(double half_width) {
    return half_width >= pi ? 1.0 : std::sin(0.5 * half_width);
}

struct GeodesicLine {
    BoundaryPoint first;
    BoundaryPoint second;
};

struct GeodesicRay {
    ModelPoint base;
    BoundaryPoint end;

    ModelPoint at(double t) const {
        const Isometry m = Isometry::moving_origin_to(base);
        const double theta = m.inverse().apply(end).angle();
        return m.apply(ModelPoint(std::polar(std::tanh(0.5 * t), theta)));
    }
};

struct Projection {
    double distance = 0.0;
    ModelPoint foot;
};

// Distance from the point at hyperbolic polar coordinates (t, theta) to a line,
// computed in the hyperboloid model. Stable for thin lines far from the origin.
inline double polar_distance_to_line(double t, double theta, const GeodesicLine& line) {
    const double gap = angle_gap(line.first.angle(), line.second.angle());
    const double phi = 0.5 * gap;
    if (phi <= 0.0) return std::numeric_limits<double>::infinity();
    const double mid = line.first.angle() + 0.5 * signed_gap(line.first.angle(), line.second.angle());
    const double psi = signed_gap(mid, theta);
    // cosh t cos phi - sinh t cos psi, rewritten to avoid cancellation.
    const double num = std::cosh(t) * 2.0 * std::sin(0.5 * (std::fabs(psi) + phi)) *
                           std::sin(0.5 * (std::fabs(psi) - phi)) +
                       std::exp(-t) * std::cos(psi);
    return std::asinh(std::fabs(num) / std::sin(phi));
}

inline Projection dist_to_geodesic(const ModelPoint& p, const GeodesicLine& line) {
    const Isometry m = Isometry::moving_origin_to(p);
    const Isometry back = m.inverse();
    const double t1 = back.apply(line.first).angle(), t2 = back.apply(line.second).angle();
    const double phi = 0.5 * angle_gap(t1, t2);
    if (phi <= 0.0) geometry_error("dist_to_geodesic: degenerate geodesic");
    const double d = std::atanh(std::cos(phi));
    const double mid = t1 + 0.5 * signed_gap(t1, t2);
    const ModelPoint foot_at_origin(std::polar(std::tanh(0.5 * d), mid));
    return {d, m.apply(foot_at_origin)};
}

inline Projection dist_to_geodesic(const ModelPoint& p, const GeodesicRay& ray) {
    const Isometry m = Isometry::moving_origin_to(ray.base);
    const Isometry back = m.inverse();
    const ModelPoint q = back.apply(p);
    const double theta = back.apply(ray.end).angle();
    const double rho = q.radius();
    const double psi = angle_gap(q.direction(), theta);
    if (rho == 0.0) return {0.0, ray.base};
    // Foot on the full line through 0 in direction theta: tanh s = tanh rho cos psi.
    const double s = std::atanh(std::tanh(rho) * std::cos(psi));
    if (s <= 0.0) return {rho, ray.base};
    const double d = std::asinh(std::sinh(rho) * std::sin(psi));
    return {d, m.apply(ModelPoint(std::polar(std::tanh(0.5 * s), theta)))};
}

}  // namespace hyperlab::disk
