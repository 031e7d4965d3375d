#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "h2xr/polygon.hpp"

using namespace h2xr;

namespace {

SemiIdealPolygon symmetric_quadrilateral(double a = 0.5) {
    return SemiIdealPolygon({IdealPoint(kPi / 2), DiskPoint(a, 0.0), IdealPoint(3 * kPi / 2),
                             DiskPoint(-a, 0.0)});
}

}  // namespace

TEST_CASE("validate symmetric quadrilateral") {
    auto rep = validate_semi_ideal(symmetric_quadrilateral());
    CHECK(rep.alternation_ok);
    CHECK(rep.convex_ok);
    CHECK(rep.origin_inside);
    CHECK(rep.valid());
}

TEST_CASE("alternation violations are reported") {
    std::vector<PolyVertex> bad{IdealPoint(0.1), IdealPoint(1.0), DiskPoint(0.3, 0), DiskPoint(-0.3, 0)};
    auto rep = validate_semi_ideal(bad);
    CHECK(!rep.alternation_ok);
    CHECK(!rep.valid());
    CHECK_THROWS_AS(SemiIdealPolygon{bad}, std::invalid_argument);
}

TEST_CASE("reflex interior vertex breaks convexity") {
    // Pull one interior vertex across the geodesic spanned by its neighbors'
    // ideal points until the side predicate flips.
    for (double a : {0.5, 0.4}) {
        std::vector<PolyVertex> v{IdealPoint(kPi / 2), DiskPoint(a, 0.0), IdealPoint(3 * kPi / 2),
                                  DiskPoint(-0.9, 0.0)};
        auto rep = validate_semi_ideal(v);
        CHECK(rep.valid());  // still convex with the vertex far out
    }
    // The geodesic between the two ideal vertices is the y-axis; moving the
    // right-hand vertex across it makes the polygon non-convex.
    std::vector<PolyVertex> bad{IdealPoint(kPi / 2), DiskPoint(-0.05, 0.0), IdealPoint(3 * kPi / 2),
                                DiskPoint(-0.6, 0.0)};
    auto rep = validate_semi_ideal(bad);
    CHECK(!rep.convex_ok);
}

TEST_CASE("neighbor horocycle test on the symmetric quadrilateral") {
    SemiIdealPolygon q = symmetric_quadrilateral();
    for (int j = 0; j < q.k(); ++j) {
        auto r = neighbor_horocycle_test(q, j);
        CHECK(std::abs(r.gap) < 1e-12);
        REQUIRE(r.common.has_value());
        CHECK(std::abs(r.common->signed_depth(q.interior(j))) < 1e-9);
        CHECK(std::abs(r.common->signed_depth(q.interior(j - 1))) < 1e-9);
    }
}

TEST_CASE("radial perturbation changes the gap by the moved distance") {
    SemiIdealPolygon q = symmetric_quadrilateral();
    // Move one interior vertex radially toward the ideal vertex at angle
    // pi/2 by hyperbolic distance d: the Busemann level changes by d.
    IdealPoint base = q.ideal(0);
    double d = 0.3;
    GeodesicArc ray = geodesic_arc(q.interior(0), base);
    DiskPoint moved = ray.carrier.point_at(ray.carrier.param_of(q.interior(0)) + d);
    SemiIdealPolygon pert({q.vertex(0), moved, q.vertex(2), q.vertex(3)});
    double gap = std::abs(neighbor_horocycle_test(pert, 0, 1.0).gap);
    CHECK(gap == doctest::Approx(d).epsilon(1e-9));
}

TEST_CASE("gap is invariant under isometries") {
    std::mt19937_64 rng(5);
    SemiIdealPolygon q = symmetric_quadrilateral();
    MobiusIsometry f = normalize_isometry(IdealPoint(1.1), DiskPoint(0.2, -0.3));
    SemiIdealPolygon qf = q.transformed(f);
    for (int j = 0; j < q.k(); ++j) {
        double g0 = neighbor_horocycle_test(q, j, 1.0).gap;
        double g1 = neighbor_horocycle_test(qf, j, 1.0).gap;
        CHECK(g0 == doctest::Approx(g1).epsilon(1e-9));
    }
}

TEST_CASE("lemma admissibility: symmetric quadrilateral is admissible") {
    auto res = admissible_by_lemma(symmetric_quadrilateral());
    CHECK(res.admissible);
    CHECK(!res.witness.has_value());
}

TEST_CASE("equal-gap precondition failure names the vertex") {
    SemiIdealPolygon q = symmetric_quadrilateral();
    SemiIdealPolygon pert({q.vertex(0), DiskPoint(0.6, 0.1), q.vertex(2), q.vertex(3)});
    CHECK_THROWS_AS(admissible_by_lemma(pert), std::invalid_argument);
}

TEST_CASE("hexagon with a vertex slid into a horodisk is inadmissible with witness") {
    // Equal-gap hexagon via the random generator, then slide one interior
    // vertex radially toward a non-adjacent ideal vertex until containment
    // flips. Sliding breaks the equal-gap condition at its own neighbors, so
    // instead shrink the polygon's horocycle levels symmetrically: increase
    // all levels => horodisks shrink => still admissible; decrease => grow.
    std::mt19937_64 rng(42);
    SemiIdealPolygon hex = random_equal_gap_polygon(rng, 3);
    auto base = admissible_by_lemma(hex);

    // Build a deliberately inadmissible configuration: interior vertices on
    // very deep horocycle intersections (large horodisks swallow opposite
    // vertices). Construct directly with all levels very negative.
    bool found_inadmissible = false;
    for (int attempt = 0; attempt < 200 && !found_inadmissible; ++attempt) {
        SemiIdealPolygon cand = random_equal_gap_polygon(rng, 3);
        auto res = admissible_by_lemma(cand);
        if (!res.admissible) {
            found_inadmissible = true;
            REQUIRE(res.witness.has_value());
            auto [i, j] = *res.witness;
            CHECK(res.horodisks[i].contains(cand.interior(j), -1e-9));
        }
    }
    CHECK(found_inadmissible);
    (void)base;
}

TEST_CASE("verdict invariant under cyclic relabeling") {
    std::mt19937_64 rng(9);
    for (int it = 0; it < 10; ++it) {
        SemiIdealPolygon p = random_equal_gap_polygon(rng, 3);
        auto v = p.vertices();
        std::rotate(v.begin(), v.begin() + 2, v.end());
        SemiIdealPolygon q(v);
        CHECK(admissible_by_lemma(p).admissible == admissible_by_lemma(q).admissible);
    }
}

TEST_CASE("truncated edge lengths equal the shrink depth on equal-gap polygons") {
    std::mt19937_64 rng(31);
    for (int it = 0; it < 20; ++it) {
        int k = 2 + static_cast<int>(it % 3);
        SemiIdealPolygon p = random_equal_gap_polygon(rng, k);
        double m = 1.5 + 0.5 * (it % 4);
        for (double len : truncated_edge_lengths(p, m)) {
            CHECK(len == doctest::Approx(m).epsilon(1e-8));
        }
    }
}

TEST_CASE("brute force agrees with the lemma criterion") {
    std::mt19937_64 rng(1234);
    int checked = 0, inadmissible_seen = 0;
    while (checked < 60) {
        int k = 2 + static_cast<int>(rng() % 3);
        SemiIdealPolygon p = random_equal_gap_polygon(rng, k);
        auto lem = admissible_by_lemma(p);
        auto bf = admissible_brute_force(p, 3.0);
        CHECK(lem.admissible == bf.admissible);
        if (!lem.admissible) ++inadmissible_seen;
        ++checked;
    }
    CHECK(inadmissible_seen > 0);  // the sample should exercise both verdicts
}

TEST_CASE("brute force margins are stable in the truncation depth") {
    std::mt19937_64 rng(77);
    for (int it = 0; it < 10; ++it) {
        SemiIdealPolygon p = random_equal_gap_polygon(rng, 3);
        auto bf3 = admissible_brute_force(p, 3.0);
        auto bf5 = admissible_brute_force(p, 5.0);
        CHECK(bf3.admissible == bf5.admissible);
    }
}

TEST_CASE("brute force verdicts are isometry invariant") {
    std::mt19937_64 rng(15);
    MobiusIsometry f = normalize_isometry(IdealPoint(2.0), DiskPoint(-0.25, 0.15));
    for (int it = 0; it < 8; ++it) {
        SemiIdealPolygon p = random_equal_gap_polygon(rng, 2 + (it % 2));
        SemiIdealPolygon q = p.transformed(f);
        auto a = admissible_brute_force(p, 3.0);
        auto b = admissible_brute_force(q, 3.0);
        CHECK(a.admissible == b.admissible);
        CHECK(a.min_margin == doctest::Approx(b.min_margin).epsilon(1e-6));
    }
}

TEST_CASE("brute force guards against combinatorial blowup") {
    std::mt19937_64 rng(8);
    // k = 11 gives 22 vertices; the guard trips before enumeration.
    std::vector<PolyVertex> v;
    for (int i = 0; i < 11; ++i) {
        v.emplace_back(IdealPoint(2.0 * kPi * i / 11.0));
        v.emplace_back(DiskPoint(0.8 * std::cos(2.0 * kPi * (i + 0.5) / 11.0),
                                 0.8 * std::sin(2.0 * kPi * (i + 0.5) / 11.0)));
    }
    CHECK_THROWS_AS(admissible_brute_force(SemiIdealPolygon(v), 3.0), std::invalid_argument);
}

TEST_CASE("polygon file round trip") {
    SemiIdealPolygon p = symmetric_quadrilateral(0.37);
    std::string path = "test_poly_roundtrip.poly";
    write_polygon_file(p, path);
    SemiIdealPolygon q = read_polygon_file(path);
    REQUIRE(p.size() == q.size());
    for (int i = 0; i < p.size(); ++i) {
        CHECK(std::abs(vertex_complex(p.vertex(i)) - vertex_complex(q.vertex(i))) < 1e-15);
    }
    std::remove(path.c_str());
}
