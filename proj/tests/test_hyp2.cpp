#include <doctest.h>

#include <cmath>
#include <random>

#include "h2xr/hyp2.hpp"

using namespace h2xr;

namespace {

// Independent distance oracle: line integral of the metric factor along the
// segment between two points collinear with the origin.
double radial_length_quadrature(double r0, double r1, int n = 20000) {
    double len = 0.0;
    for (int i = 0; i < n; ++i) {
        double t = r0 + (r1 - r0) * (i + 0.5) / n;
        len += 2.0 / (1.0 - t * t) * (r1 - r0) / n;
    }
    return std::abs(len);
}

DiskPoint random_point(std::mt19937_64& rng, double rmax = 0.9) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double r = rmax * std::sqrt(unif(rng));
    double t = 2.0 * kPi * unif(rng);
    return DiskPoint(r * std::cos(t), r * std::sin(t));
}

}  // namespace

TEST_CASE("metric factor") {
    CHECK(metric_factor(DiskPoint(0, 0)) == doctest::Approx(2.0));
    CHECK(metric_factor(DiskPoint(0.5, 0)) == doctest::Approx(8.0 / 3.0));
    CHECK(metric_factor(DiskPoint(0, 0.5)) == doctest::Approx(8.0 / 3.0));
    CHECK_THROWS_AS(DiskPoint(1.0, 0.0), std::domain_error);
}

TEST_CASE("distance closed form vs quadrature oracle") {
    DiskPoint o(0, 0), p(0.5, 0), q(0, 0.5);
    CHECK(dist(p, p) == doctest::Approx(0.0));
    double oracle = radial_length_quadrature(0.0, 0.5);
    CHECK(dist(o, p) == doctest::Approx(oracle).epsilon(1e-7));
    CHECK(dist(o, p) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(dist(o, p) == doctest::Approx(dist(o, q)).epsilon(1e-14));
}

TEST_CASE("distance is a metric on random triples") {
    std::mt19937_64 rng(7);
    for (int it = 0; it < 200; ++it) {
        DiskPoint a = random_point(rng), b = random_point(rng), c = random_point(rng);
        double ab = dist(a, b), ba = dist(b, a), ac = dist(a, c), cb = dist(c, b);
        CHECK(ab >= 0.0);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab <= ac + cb + 1e-9);
    }
}

TEST_CASE("geodesic arcs: diameters and orthogonal circles") {
    GeodesicArc d1 = geodesic_arc(DiskPoint(-0.5, 0), DiskPoint(0.5, 0));
    CHECK(d1.carrier.is_diameter);
    CHECK(std::abs(d1.carrier.end_pos.theta) < 1e-12);
    CHECK(d1.length() == doctest::Approx(2.0 * std::log(3.0)));

    GeodesicArc d2 = geodesic_arc(IdealPoint(0.0), IdealPoint(kPi));
    CHECK(d2.carrier.is_diameter);
    CHECK(!d2.finite());

    GeodesicArc c = geodesic_arc(IdealPoint(0.0), IdealPoint(kPi / 2));
    REQUIRE(!c.carrier.is_diameter);
    CHECK(c.carrier.center.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.carrier.center.imag() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.carrier.radius == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.midpoint().norm2() < 1.0);

    CHECK_THROWS(geodesic_arc(DiskPoint(0.2, 0.1), DiskPoint(0.2, 0.1)));
}

TEST_CASE("geodesic circles stay orthogonal to the unit circle") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 100; ++it) {
        DiskPoint a = random_point(rng), b = random_point(rng);
        if (std::abs(a.x - b.x) + std::abs(a.y - b.y) < 1e-3) continue;
        GeodesicCarrier g = carrier_through(a, b);
        if (g.is_diameter) continue;
        // |c|^2 = 1 + r^2 is exactly the orthogonality condition.
        CHECK(std::abs(std::norm(g.center) - g.radius * g.radius - 1.0) < 1e-9);
        // ideal endpoints on the unit circle
        CHECK(std::abs(std::abs(g.end_pos.to_complex()) - 1.0) < 1e-12);
    }
}

TEST_CASE("arc parametrization is consistent") {
    std::mt19937_64 rng(13);
    for (int it = 0; it < 100; ++it) {
        DiskPoint a = random_point(rng), b = random_point(rng);
        if (dist(a, b) < 1e-3) continue;
        GeodesicArc arc = geodesic_arc(a, b);
        CHECK(arc.length() == doctest::Approx(dist(a, b)).epsilon(1e-10));
        DiskPoint mid = arc.midpoint();
        CHECK(dist(a, mid) == doctest::Approx(dist(b, mid)).epsilon(1e-8));
        DiskPoint back = arc.carrier.point_at(arc.carrier.param_of(a));
        CHECK(dist(a, back) < 1e-9);
    }
}

TEST_CASE("horocycles through points") {
    Horocycle h0 = horocycle_through(IdealPoint(0.0), DiskPoint(0, 0));
    CHECK(h0.euclid_radius() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(h0.euclid_center().real() == doctest::Approx(0.5).epsilon(1e-14));

    Horocycle h1 = horocycle_through(IdealPoint(0.0), DiskPoint(0.5, 0));
    CHECK(h1.euclid_radius() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(h1.euclid_center().real() == doctest::Approx(0.75).epsilon(1e-12));

    // Points on the circle report zero depth.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 2.0 * kPi);
    for (int it = 0; it < 50; ++it) {
        double phi = unif(rng);
        Cpx z = h1.euclid_center() + h1.euclid_radius() * std::polar(1.0, phi);
        if (std::norm(z) >= 1.0 - 1e-9) continue;
        CHECK(std::abs(h1.signed_depth(DiskPoint(z))) < 1e-9);
    }
}

TEST_CASE("horodisks shrink as level grows") {
    std::mt19937_64 rng(17);
    for (int it = 0; it < 50; ++it) {
        DiskPoint p = random_point(rng);
        Horocycle h = horocycle_through(IdealPoint(1.3), p);
        Horocycle smaller{h.base, h.level + 0.7};
        CHECK(smaller.euclid_radius() < h.euclid_radius());
        // Every point inside the smaller horodisk is inside the larger one.
        Cpx c = smaller.euclid_center();
        for (int s = 0; s < 8; ++s) {
            Cpx z = c + 0.9 * smaller.euclid_radius() * std::polar(1.0, s * kPi / 4);
            if (std::norm(z) >= 1.0 - 1e-12) continue;
            DiskPoint q{z};
            if (smaller.contains(q)) CHECK(h.contains(q));
        }
    }
}

TEST_CASE("busemann gap") {
    IdealPoint base(0.0);
    DiskPoint o(0, 0), p(0.5, 0);
    CHECK(busemann_gap(base, p, p) == doctest::Approx(0.0));
    double g = busemann_gap(base, o, p);
    CHECK(std::abs(g) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(std::abs(g) == doctest::Approx(dist(o, p)).epsilon(1e-12));
    CHECK(busemann_gap(base, p, o) == doctest::Approx(-g).epsilon(1e-12));
}

TEST_CASE("normalize isometry") {
    MobiusIsometry id = normalize_isometry(IdealPoint(0.0), DiskPoint(0, 0));
    CHECK(std::abs(id.apply_complex(Cpx(0.3, 0.2)) - Cpx(0.3, 0.2)) < 1e-14);

    std::mt19937_64 rng(23);
    for (int it = 0; it < 100; ++it) {
        DiskPoint O = random_point(rng);
        IdealPoint P(it * 0.37);
        MobiusIsometry f = normalize_isometry(P, O);
        CHECK(std::abs(f(O).to_complex()) < 1e-12);
        double t = f(P).theta;
        bool at_zero = std::abs(t) < kTauAngle || std::abs(t - 2 * kPi) < kTauAngle;
        CHECK(at_zero);
        DiskPoint q = random_point(rng);
        DiskPoint rt = f.inverse()(f(q));
        CHECK(dist(q, rt) < 1e-10);
    }
}

TEST_CASE("isometries preserve distance and busemann gap") {
    std::mt19937_64 rng(29);
    for (int it = 0; it < 100; ++it) {
        DiskPoint O = random_point(rng, 0.7);
        IdealPoint P(it * 0.61);
        MobiusIsometry f = normalize_isometry(P, O);
        DiskPoint a = random_point(rng), b = random_point(rng);
        IdealPoint xi(it * 1.7 + 0.5);
        CHECK(dist(f(a), f(b)) == doctest::Approx(dist(a, b)).epsilon(1e-9));
        CHECK(busemann_gap(f(xi), f(a), f(b)) ==
              doctest::Approx(busemann_gap(xi, a, b)).epsilon(1e-9));
    }
}

TEST_CASE("horodisk interval along a carrier") {
    // Diameter through the horodisk at angle 0: the cut is a Busemann ray.
    GeodesicCarrier g = carrier_through(IdealPoint(kPi), IdealPoint(0.0));
    Horocycle h{IdealPoint(0.0), 1.0};
    auto iv = horodisk_interval(g, h);
    REQUIRE(iv.has_value());
    CHECK(!std::isfinite(iv->second));
    // Entry point sits on the horocycle.
    DiskPoint entry = g.point_at(iv->first);
    CHECK(std::abs(h.signed_depth(entry)) < 1e-9);

    // A geodesic based elsewhere crosses the horodisk in a bounded interval.
    GeodesicCarrier g2 = carrier_through(DiskPoint(0.6, -0.4), DiskPoint(0.6, 0.4));
    auto iv2 = horodisk_interval(g2, h);
    REQUIRE(iv2.has_value());
    CHECK(std::isfinite(iv2->first));
    CHECK(std::isfinite(iv2->second));
    DiskPoint inside = g2.point_at(0.5 * (iv2->first + iv2->second));
    CHECK(h.contains(inside));

    // Disjoint case.
    GeodesicCarrier g3 = carrier_through(DiskPoint(-0.2, -0.4), DiskPoint(-0.2, 0.4));
    CHECK(!horodisk_interval(g3, h).has_value());
}
