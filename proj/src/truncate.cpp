#include <cmath>

#include "h2xr/jsolve.hpp"

namespace h2xr {

namespace {

// Hyperbolic distance from p to the complete geodesic of `carrier`.
double dist_to_carrier(const GeodesicCarrier& carrier, Cpx z) {
    Cpx w = carrier.to_axis.apply_complex(z);
    double denom = 1.0 - std::norm(w);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    double y = w.imag();
    return 0.5 * std::acosh(1.0 + 8.0 * y * y / (denom * denom));
}

}  // namespace

double TruncatedDomain::edge_distance(int edge_index, const DiskPoint& p) const {
    return dist_to_carrier(edges[edge_index].carrier, p.to_complex());
}

bool TruncatedDomain::contains(Cpx z, double slack) const {
    if (std::norm(z) >= 1.0 - kTauDisk) return false;
    DiskPoint p(z);
    int n = poly.size();
    for (int i = 0; i < n; ++i) {
        if (edges[i].carrier.side_of(p) < slack) return false;
    }
    for (const Horocycle& h : cuts) {
        if (h.signed_depth(p) > -slack) return false;
    }
    for (int j = 0; j < k(); ++j) {
        if (dist(p, poly.interior(j)) < corner_radius + slack) return false;
    }
    return true;
}

TruncatedDomain make_truncated_domain(const SemiIdealPolygon& poly, double m, double cap,
                                      double corner_radius) {
    if (m <= 0.0 || cap <= 0.0) throw std::invalid_argument("truncation: m and cap must be positive");
    TruncatedDomain dom;
    dom.poly = poly;
    dom.m = m;
    dom.cap = cap;

    // The graph saturates at height cap within distance ~ 2 e^-cap of an
    // A/B edge; the innermost wall row and the corner cut live at that scale.
    dom.wall_floor = 2.0 * std::exp(-cap);
    dom.corner_radius = corner_radius > 0.0 ? corner_radius : 2.0 * dom.wall_floor;

    dom.cuts = canonical_horocycles(poly);
    for (auto& h : dom.cuts) h.level += m;

    int n = poly.size();
    dom.edges.reserve(n);
    for (int i = 0; i < n; ++i) dom.edges.push_back(poly.edge(i));

    for (int i = 0; i < n; ++i) {
        const GeodesicArc& e = dom.edges[i];
        double lo, hi;
        if (poly.edge_is_a(i)) {
            // ideal -> interior: the cut covers (-inf, s_c], corner at s_b.
            auto iv = horodisk_interval(e.carrier, dom.cuts[i / 2]);
            if (!iv) throw std::runtime_error("truncation: edge misses its own cut horocycle");
            lo = iv->second;
            hi = e.s_b - dom.corner_radius;
        } else {
            // interior -> ideal
            auto iv = horodisk_interval(e.carrier, dom.cuts[((i + 1) / 2) % poly.k()]);
            if (!iv) throw std::runtime_error("truncation: edge misses its own cut horocycle");
            lo = e.s_a + dom.corner_radius;
            hi = iv->first;
        }
        if (!(hi > lo))
            throw std::runtime_error("truncation: edge " + std::to_string(i) +
                                     " vanished (cuts too deep for this polygon)");
        dom.span_lo.push_back(lo);
        dom.span_hi.push_back(hi);
    }
    return dom;
}

}  // namespace h2xr
