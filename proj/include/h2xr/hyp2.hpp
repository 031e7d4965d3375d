#pragma once

// Geometry kernel for the Poincare disk model of the hyperbolic plane.
// Points, ideal points, geodesics, horocycles, Busemann levels and the
// Moebius isometries that normalize configurations. Everything here is a
// pure function of its inputs.

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace h2xr {

using Cpx = std::complex<double>;

inline constexpr double kTauDisk = 1e-12;   // strict-interior guard
inline constexpr double kTauAngle = 1e-10;  // ideal-point distinctness
inline constexpr double kPi = 3.14159265358979323846;

inline double cross2(Cpx a, Cpx b) { return a.real() * b.imag() - a.imag() * b.real(); }
inline double dot2(Cpx a, Cpx b) { return a.real() * b.real() + a.imag() * b.imag(); }

/// Point strictly inside the unit disk.
struct DiskPoint {
    double x = 0.0;
    double y = 0.0;

    DiskPoint() = default;
    DiskPoint(double x_, double y_) : x(x_), y(y_) {
        if (x * x + y * y >= 1.0 - kTauDisk)
            throw std::domain_error("DiskPoint: point not strictly inside the unit disk");
    }
    explicit DiskPoint(Cpx z) : DiskPoint(z.real(), z.imag()) {}

    Cpx to_complex() const { return {x, y}; }
    double norm2() const { return x * x + y * y; }
};

/// Point of the ideal boundary circle, stored as an angle in [0, 2*pi).
struct IdealPoint {
    double theta = 0.0;

    IdealPoint() = default;
    explicit IdealPoint(double t) {
        theta = std::fmod(t, 2.0 * kPi);
        if (theta < 0.0) theta += 2.0 * kPi;
    }

    Cpx to_complex() const { return {std::cos(theta), std::sin(theta)}; }
};

/// A polygon vertex is either interior or ideal.
using PolyVertex = std::variant<DiskPoint, IdealPoint>;

inline bool is_ideal(const PolyVertex& v) { return std::holds_alternative<IdealPoint>(v); }
inline Cpx vertex_complex(const PolyVertex& v) {
    return is_ideal(v) ? std::get<IdealPoint>(v).to_complex() : std::get<DiskPoint>(v).to_complex();
}

/// Conformal factor of g = lambda^2 g_0, lambda(p) = 2 / (1 - |p|^2).
inline double metric_factor(const DiskPoint& p) {
    double s = 1.0 - p.norm2();
    if (s <= kTauDisk) throw std::domain_error("metric_factor: point on or outside the unit circle");
    return 2.0 / s;
}

/// Hyperbolic distance, closed form.
inline double dist(const DiskPoint& p, const DiskPoint& q) {
    double dx = p.x - q.x, dy = p.y - q.y;
    double d2 = dx * dx + dy * dy;
    double a = (1.0 - p.norm2()) * (1.0 - q.norm2());
    return std::acosh(1.0 + 2.0 * d2 / a);
}

/// Busemann level at the ideal point `base`, normalized so the origin is at
/// level 0. Larger level means deeper inside the horodisk at `base`.
inline double busemann_level(const IdealPoint& base, const DiskPoint& p) {
    Cpx xi = base.to_complex();
    double d2 = std::norm(xi - p.to_complex());
    return std::log((1.0 - p.norm2()) / d2);
}

/// Signed gap between the horocycles at `base` through p and through q.
/// Zero iff p and q lie on a common horocycle; positive when q is deeper.
inline double busemann_gap(const IdealPoint& base, const DiskPoint& p, const DiskPoint& q) {
    return busemann_level(base, q) - busemann_level(base, p);
}

/// Horocycle at an ideal base point. Level 0 is the horocycle through the
/// origin; larger level means a smaller horodisk.
struct Horocycle {
    IdealPoint base;
    double level = 0.0;

    /// Euclidean radius of the horocycle as a circle tangent to the unit
    /// circle at `base`: r = 1 / (1 + e^level).
    double euclid_radius() const { return 1.0 / (1.0 + std::exp(level)); }
    Cpx euclid_center() const { return base.to_complex() * (1.0 - euclid_radius()); }

    /// > 0 inside the open horodisk, 0 on the horocycle (up to rounding);
    /// equals the signed hyperbolic distance from the horocycle to p.
    double signed_depth(const DiskPoint& p) const { return busemann_level(base, p) - level; }
    bool contains(const DiskPoint& p, double tol = 0.0) const { return signed_depth(p) > tol; }
};

inline Horocycle horocycle_through(const IdealPoint& base, const DiskPoint& p) {
    return Horocycle{base, busemann_level(base, p)};
}

/// Orientation-preserving isometry of the disk, z -> (a z + b) / (conj(b) z + conj(a))
/// with |a|^2 - |b|^2 = 1. Composable and invertible.
class MobiusIsometry {
  public:
    MobiusIsometry() : a_(1.0, 0.0), b_(0.0, 0.0) {}
    MobiusIsometry(Cpx a, Cpx b) : a_(a), b_(b) { normalize(); }

    static MobiusIsometry identity() { return {}; }
    /// Translation taking p to the origin.
    static MobiusIsometry translation_to_origin(const DiskPoint& p) {
        // z -> (z - p) / (1 - conj(p) z)
        Cpx zp = p.to_complex();
        return MobiusIsometry(Cpx(1.0, 0.0), -zp);
    }
    static MobiusIsometry rotation(double phi) {
        return MobiusIsometry(std::polar(1.0, phi / 2.0), Cpx(0.0, 0.0));
    }

    Cpx apply_complex(Cpx z) const {
        return (a_ * z + b_) / (std::conj(b_) * z + std::conj(a_));
    }
    DiskPoint operator()(const DiskPoint& p) const { return DiskPoint(apply_complex(p.to_complex())); }
    IdealPoint operator()(const IdealPoint& q) const {
        Cpx w = apply_complex(q.to_complex());
        return IdealPoint(std::arg(w));
    }
    PolyVertex operator()(const PolyVertex& v) const {
        if (is_ideal(v)) return (*this)(std::get<IdealPoint>(v));
        return (*this)(std::get<DiskPoint>(v));
    }
    Horocycle operator()(const Horocycle& h) const {
        IdealPoint base = (*this)(h.base);
        // Deepest point of the horocycle (diametrally opposite the tangency).
        Cpx inner = h.base.to_complex() * (1.0 - 2.0 * h.euclid_radius());
        return horocycle_through(base, (*this)(DiskPoint(inner)));
    }

    MobiusIsometry compose(const MobiusIsometry& g) const {  // this after g
        return MobiusIsometry(a_ * g.a_ + b_ * std::conj(g.b_), a_ * g.b_ + b_ * std::conj(g.a_));
    }
    MobiusIsometry inverse() const { return MobiusIsometry(std::conj(a_), -b_); }

  private:
    void normalize() {
        double d = std::sqrt(std::norm(a_) - std::norm(b_));
        if (!(d > 0.0)) throw std::domain_error("MobiusIsometry: |a|^2 - |b|^2 must be positive");
        a_ /= d;
        b_ /= d;
    }
    Cpx a_, b_;
};

/// Isometry sending the ideal point P to angle 0 and O to the origin.
inline MobiusIsometry normalize_isometry(const IdealPoint& P, const DiskPoint& O) {
    MobiusIsometry t = MobiusIsometry::translation_to_origin(O);
    double phi = std::arg(t.apply_complex(P.to_complex()));
    return MobiusIsometry::rotation(-phi).compose(t);
}

/// Complete geodesic, oriented from ideal endpoint `end_neg` to `end_pos`.
/// Arclength parametrized: point_at(0) is the closest point to the origin.
/// Euclidean representation: a diameter, or a circle orthogonal to the unit
/// circle (center c with |c|^2 = 1 + r^2).
struct GeodesicCarrier {
    IdealPoint end_neg, end_pos;
    bool is_diameter = false;
    Cpx center;           // circle case
    double radius = 0.0;  // circle case
    int sweep_sign = 1;   // circle case: +1 if arg(z - center) increases toward end_pos

    MobiusIsometry to_axis;  // carrier -> x-axis, end_neg -> -1, end_pos -> +1

    DiskPoint point_at(double s) const {
        double x = std::tanh(0.5 * s);
        return DiskPoint(to_axis.inverse().apply_complex(Cpx(x, 0.0)));
    }
    double param_of(const DiskPoint& p) const {
        Cpx w = to_axis.apply_complex(p.to_complex());
        double x = std::clamp(w.real(), -1.0 + 1e-17, 1.0 - 1e-17);
        return 2.0 * std::atanh(x);
    }
    /// > 0 strictly left of the oriented geodesic (in the normalized frame).
    double side_of(const DiskPoint& p) const { return to_axis.apply_complex(p.to_complex()).imag(); }
    double side_of(const PolyVertex& v) const {
        Cpx w = to_axis.apply_complex(vertex_complex(v));
        return w.imag();
    }
    /// Busemann cut: param beyond which the carrier is inside the horodisk of
    /// `level` at its own positive (resp. negative) ideal endpoint.
    double cut_param_pos(double level) const {
        DiskPoint z0 = point_at(0.0);
        return level - busemann_level(end_pos, z0);
    }
    double cut_param_neg(double level) const {
        DiskPoint z0 = point_at(0.0);
        return -(level - busemann_level(end_neg, z0));
    }
};

GeodesicCarrier carrier_through(const PolyVertex& a, const PolyVertex& b);

/// Geodesic arc between two (interior or ideal) points; ideal endpoints give
/// infinite parameter bounds.
struct GeodesicArc {
    PolyVertex a, b;
    GeodesicCarrier carrier;
    double s_a = 0.0, s_b = 0.0;  // +-inf when the endpoint is ideal

    double length() const { return s_b - s_a; }
    bool finite() const { return std::isfinite(s_a) && std::isfinite(s_b); }
    DiskPoint midpoint() const;
};

GeodesicArc geodesic_arc(const PolyVertex& a, const PolyVertex& b);

/// Euclidean circle-circle intersection (helper for horocycle/arc clipping).
std::vector<Cpx> intersect_circles(Cpx c1, double r1, Cpx c2, double r2);
/// Intersection of a line through p0 with direction u and a circle.
std::vector<Cpx> intersect_line_circle(Cpx p0, Cpx u, Cpx c, double r);

/// Euclidean circle realizing the hyperbolic circle of given center/radius.
struct EuclidCircle {
    Cpx center;
    double radius = 0.0;
};
EuclidCircle hyp_circle(const DiskPoint& center, double hyp_radius);

EuclidCircle horocycle_circle(const Horocycle& h);

/// Parameter interval along `carrier` lying inside the open horodisk of `h`,
/// or nullopt if they do not meet. Ends are +-inf when the horodisk is based
/// at a carrier endpoint.
std::optional<std::pair<double, double>> horodisk_interval(const GeodesicCarrier& carrier,
                                                           const Horocycle& h);

/// Intersection points of two horocycles (as Euclidean circles), as disk points.
std::vector<DiskPoint> intersect_horocycles(const Horocycle& h1, const Horocycle& h2);

}  // namespace h2xr
