#include "h2xr/hyp2.hpp"

#include <algorithm>

namespace h2xr {

namespace {

double wrap_pi(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a < -kPi) a += 2.0 * kPi;
    return a;
}

// Gauge-fixing isometry for a carrier: closest point to origin -> 0,
// ideal endpoints -> -1/+1.
MobiusIsometry axis_map(Cpx foot, const IdealPoint& end_pos) {
    MobiusIsometry t = foot == Cpx(0.0, 0.0)
                           ? MobiusIsometry::identity()
                           : MobiusIsometry::translation_to_origin(DiskPoint(foot));
    double phi = std::arg(t.apply_complex(end_pos.to_complex()));
    return MobiusIsometry::rotation(-phi).compose(t);
}

}  // namespace

GeodesicCarrier carrier_through(const PolyVertex& a, const PolyVertex& b) {
    Cpx za = vertex_complex(a);
    Cpx zb = vertex_complex(b);
    if (std::abs(za - zb) < kTauAngle)
        throw std::domain_error("carrier_through: coincident endpoints give a degenerate arc");

    GeodesicCarrier g;
    double det = cross2(za, zb);
    // Relative degeneracy test: collinear with the origin means a diameter.
    double scale = std::max(std::abs(za) * std::abs(zb), 1e-30);
    if (std::abs(det) < 1e-14 * scale || std::abs(za) < 1e-15 || std::abs(zb) < 1e-15) {
        g.is_diameter = true;
        Cpx u = zb - za;
        u /= std::abs(u);
        g.end_pos = IdealPoint(std::arg(u));
        g.end_neg = IdealPoint(std::arg(-u));
        g.to_axis = axis_map(Cpx(0.0, 0.0), g.end_pos);
        return g;
    }

    // Solve 2 <z_i, c> = |z_i|^2 + 1 for the Euclidean center; the resulting
    // circle is automatically orthogonal to the unit circle.
    double ra = (std::norm(za) + 1.0) * 0.5;
    double rb = (std::norm(zb) + 1.0) * 0.5;
    double cx = (ra * zb.imag() - rb * za.imag()) / det;
    double cy = (rb * za.real() - ra * zb.real()) / det;
    g.center = Cpx(cx, cy);
    g.radius = std::sqrt(std::norm(g.center) - 1.0);

    // Ideal endpoints: intersection of the carrier with the unit circle.
    double n2 = std::norm(g.center);
    Cpx base = g.center / n2;
    Cpx perp = Cpx(-g.center.imag(), g.center.real()) * (g.radius / n2 / std::abs(g.center));
    Cpx xi1 = base + perp * std::abs(g.center);
    Cpx xi2 = base - perp * std::abs(g.center);
    // (base +- perp*|c|) == c(1 +- i r)/|c|^2
    double pa = std::arg(za - g.center);
    double pb = std::arg(zb - g.center);
    g.sweep_sign = wrap_pi(pb - pa) >= 0.0 ? 1 : -1;
    // The in-disk arc subtends less than pi at the center, so sweep
    // distances from a do not wrap: end_pos is the farther crossing.
    double d1 = wrap_pi((std::arg(xi1 - g.center) - pa) * g.sweep_sign);
    double d2 = wrap_pi((std::arg(xi2 - g.center) - pa) * g.sweep_sign);
    Cpx xpos = d1 > d2 ? xi1 : xi2;
    Cpx xneg = d1 > d2 ? xi2 : xi1;
    g.end_pos = IdealPoint(std::arg(xpos));
    g.end_neg = IdealPoint(std::arg(xneg));

    Cpx foot = (g.center / std::abs(g.center)) / (std::abs(g.center) + g.radius);
    g.to_axis = axis_map(foot, g.end_pos);
    return g;
}

DiskPoint GeodesicArc::midpoint() const {
    double lo = s_a, hi = s_b;
    if (!std::isfinite(lo) && !std::isfinite(hi)) return carrier.point_at(0.0);
    if (!std::isfinite(lo)) return carrier.point_at(hi - 1.0);
    if (!std::isfinite(hi)) return carrier.point_at(lo + 1.0);
    return carrier.point_at(0.5 * (lo + hi));
}

GeodesicArc geodesic_arc(const PolyVertex& a, const PolyVertex& b) {
    GeodesicArc arc;
    arc.a = a;
    arc.b = b;
    arc.carrier = carrier_through(a, b);
    arc.s_a = is_ideal(a) ? -std::numeric_limits<double>::infinity()
                          : arc.carrier.param_of(std::get<DiskPoint>(a));
    arc.s_b = is_ideal(b) ? std::numeric_limits<double>::infinity()
                          : arc.carrier.param_of(std::get<DiskPoint>(b));
    if (arc.s_b < arc.s_a) {  // keep orientation a -> b with increasing s
        // carrier_through orients from a to b, so this only happens through
        // rounding on nearly coincident endpoints
        std::swap(arc.s_a, arc.s_b);
    }
    return arc;
}

std::vector<Cpx> intersect_circles(Cpx c1, double r1, Cpx c2, double r2) {
    Cpx d = c2 - c1;
    double L = std::abs(d);
    if (L < 1e-300) return {};
    if (L > r1 + r2 || L < std::abs(r1 - r2)) return {};
    double x = (L * L + r1 * r1 - r2 * r2) / (2.0 * L);
    double h2 = r1 * r1 - x * x;
    Cpx u = d / L;
    Cpx m = c1 + u * x;
    if (h2 <= 0.0) return {m};
    double h = std::sqrt(h2);
    Cpx v = Cpx(-u.imag(), u.real()) * h;
    return {m + v, m - v};
}

std::vector<Cpx> intersect_line_circle(Cpx p0, Cpx u, Cpx c, double r) {
    // |p0 + t u - c|^2 = r^2, |u| = 1
    Cpx w = p0 - c;
    double b = dot2(w, u);
    double q = std::norm(w) - r * r;
    double disc = b * b - q;
    if (disc < 0.0) return {};
    double sq = std::sqrt(disc);
    if (sq == 0.0) return {p0 - u * b};
    return {p0 + u * (-b + sq), p0 + u * (-b - sq)};
}

EuclidCircle hyp_circle(const DiskPoint& center, double hyp_radius) {
    double t = std::tanh(0.5 * hyp_radius);
    Cpx z0 = center.to_complex();
    Cpx dir = std::abs(z0) < 1e-15 ? Cpx(1.0, 0.0) : z0 / std::abs(z0);
    MobiusIsometry back = MobiusIsometry::translation_to_origin(center).inverse();
    Cpx p1 = back.apply_complex(dir * t);
    Cpx p2 = back.apply_complex(-dir * t);
    return {0.5 * (p1 + p2), 0.5 * std::abs(p1 - p2)};
}

EuclidCircle horocycle_circle(const Horocycle& h) {
    return {h.euclid_center(), h.euclid_radius()};
}

std::optional<std::pair<double, double>> horodisk_interval(const GeodesicCarrier& carrier,
                                                           const Horocycle& h) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double bpos = std::abs(wrap_pi(h.base.theta - carrier.end_pos.theta));
    double bneg = std::abs(wrap_pi(h.base.theta - carrier.end_neg.theta));
    if (bpos < kTauAngle) return std::make_pair(carrier.cut_param_pos(h.level), inf);
    if (bneg < kTauAngle) return std::make_pair(-inf, carrier.cut_param_neg(h.level));

    EuclidCircle hc = horocycle_circle(h);
    std::vector<Cpx> pts;
    if (carrier.is_diameter) {
        Cpx u = carrier.end_pos.to_complex();
        pts = intersect_line_circle(Cpx(0.0, 0.0), u, hc.center, hc.radius);
    } else {
        pts = intersect_circles(carrier.center, carrier.radius, hc.center, hc.radius);
    }
    if (pts.size() < 2) return std::nullopt;
    double s1 = carrier.param_of(DiskPoint(pts[0]));
    double s2 = carrier.param_of(DiskPoint(pts[1]));
    if (s1 > s2) std::swap(s1, s2);
    return std::make_pair(s1, s2);
}

std::vector<DiskPoint> intersect_horocycles(const Horocycle& h1, const Horocycle& h2) {
    EuclidCircle a = horocycle_circle(h1);
    EuclidCircle b = horocycle_circle(h2);
    std::vector<DiskPoint> out;
    for (Cpx z : intersect_circles(a.center, a.radius, b.center, b.radius)) {
        if (std::norm(z) < 1.0 - kTauDisk) out.emplace_back(z);
    }
    return out;
}

}  // namespace h2xr
